"""Command-line front end: ingest label files, frame strong labels, evaluate
scores and analyse weak/strong label relationships.

Exit codes: 0 success, 2 validation error, 3 parse error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

from . import __version__
from .analysis import odds_table, positive_instances, priors_scatter, shared_clips
from .config import Settings, load_settings
from .corpus import (
    Corpus,
    LabeledSegment,
    Polarity,
    WeakAnnotation,
    clip_durations,
    merge_corpora,
    parse_strong_tsv,
    parse_weak_csv,
)
from .errors import ParseError, StrongEvalError, ValidationError
from .framing import frame_corpus, parse_framed_tsv, write_framed_tsv
from .manifest import MixSpec, build_subsets, mix_manifest
from .metrics import clip_level_scores, evaluate, weak_label_table
from .ontology import collapse_music, load_ontology, smear_labels
from .store import Store, load_store, write_store

log = logging.getLogger("strongeval")

EXIT_OK, EXIT_VALIDATION, EXIT_PARSE, EXIT_IO = 0, 2, 3, 4


def _stamp(doc: dict, args) -> dict:
    if not args.no_timestamp:
        doc["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return doc


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_json(path: Path, doc: dict) -> None:
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _settings(args) -> Settings:
    overrides = {}
    if getattr(args, "negatives_mode", None):
        overrides["negatives"] = args.negatives_mode
    if getattr(args, "music_id", None):
        overrides["music_id"] = args.music_id
    return load_settings(args.config, **overrides)


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# ingest

def _relabel(corpus: Corpus, mapper) -> tuple[Corpus, int]:
    """Apply ``mapper(class_id) -> set of class ids`` to present labels and segments.

    Explicit negatives for classes the mapper maps away are dropped: "not a
    guitar" says nothing about "not music". Negatives whose class survives the
    mapping (smearing only adds ancestors) are kept. Returns the corpus and
    drop count.
    """
    dropped = 0
    weak = {}
    for ann in corpus.weak:
        if ann.polarity is Polarity.NEGATIVE:
            if ann.class_id not in mapper(ann.class_id):
                dropped += 1
                continue
            weak.setdefault((ann.clip, ann.class_id), ann.polarity)
            continue
        for cid in sorted(mapper(ann.class_id)):
            weak[(ann.clip, cid)] = Polarity.PRESENT
    strong = []
    for seg in corpus.strong:
        for cid in sorted(mapper(seg.class_id)):
            strong.append(LabeledSegment(seg.clip, cid, seg.start_s, seg.end_s))
    new = replace(
        corpus,
        weak=tuple(WeakAnnotation(clip, cid, pol) for (clip, cid), pol in weak.items()),
        strong=tuple(strong),
    )
    return new, dropped


def cmd_ingest(args) -> int:
    settings = _settings(args)
    weak_parts = [parse_weak_csv(_read(p), source=p) for p in args.weak or ()]
    weak_parts += [parse_weak_csv(_read(p), source=p) for p in args.negatives or ()]
    weak = merge_corpora(*weak_parts) if weak_parts else None

    strong = None
    if args.strong:
        durations = clip_durations(weak.clips) if weak is not None else {}
        strong = merge_corpora(*(
            parse_strong_tsv(_read(p), source=p, clip_dur=settings.clip_dur, durations=durations)
            for p in args.strong
        ))
    if weak is None and strong is None:
        raise ValidationError("ingest needs at least one of --strong, --weak, --negatives")

    extra = {}
    if args.collapse_music or args.smear:
        if not args.ontology:
            raise ValidationError("--collapse-music and --smear need --ontology")
        onto = load_ontology(_read(args.ontology), source=args.ontology)
        steps = []
        if args.collapse_music:
            steps.append(lambda c: set(collapse_music([c], onto, settings.music_id)))
        if args.smear:
            steps.append(lambda c: set(smear_labels([c], onto)))

        def mapper(cid):
            out = {cid}
            for step in steps:
                out = set().union(*(step(c) for c in out))
            return out

        if weak is not None:
            weak, extra["weak_negatives_dropped_by_relabel"] = _relabel(weak, mapper)
        if strong is not None:
            strong, _ = _relabel(strong, mapper)

    for name, corpus in (("weak", weak), ("strong", strong)):
        if corpus is not None and not corpus.clips:
            log.warning("%s input holds no clips; writing an empty store", name)
    stats = write_store(Path(args.out), Store(weak=weak, strong=strong), extra=_stamp(extra, args))
    for name in ("strong", "weak"):
        if name in stats:
            log.info("%s: %d clips", name, stats[name]["clips"])
    print(json.dumps({k: stats[k]["clips"] for k in ("strong", "weak") if k in stats}, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# frame

def cmd_frame(args) -> int:
    settings = _settings(args)
    store = load_store(args.store, clip_dur=settings.clip_dur)
    strong = store.require_strong()
    negatives = store.weak.negatives_by_clip() if store.weak is not None else {}
    label_sets, report = frame_corpus(strong, negatives, settings, comp_neg=not args.no_comp_neg)
    out = Path(args.out)
    _write_text(out / "framed.tsv", write_framed_tsv(label_sets))
    doc = report.as_dict()
    doc.update(frame_dur=settings.frame_dur, complementary_negatives=not args.no_comp_neg)
    _write_json(out / "framing.json", _stamp(doc, args))
    log.info("framed %d clips into %d frames", report.clips, report.frames)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval

def read_scores(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype={"unit_id": str, "class_id": str}, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise ParseError(str(exc), source=path) from None
    missing = {"unit_id", "class_id", "score"} - set(df.columns)
    if missing:
        raise ParseError(f"score file lacks columns {sorted(missing)}", line=1, source=path)
    try:
        df["score"] = pd.to_numeric(df["score"])
    except ValueError as exc:
        raise ParseError(f"non-numeric score: {exc}", source=path) from None
    return df


def cmd_eval(args) -> int:
    settings = _settings(args)
    scores = read_scores(args.scores)
    if args.eval_kind == "strong":
        labels = parse_framed_tsv(_read(args.labels), source=args.labels)
    else:
        weak = load_store(args.labels).require_weak()
        labels = weak_label_table(weak)
        if scores["unit_id"].str.contains(":").any():
            scores = clip_level_scores(scores)
    report = evaluate(scores, labels, negatives=settings.negatives, eps=settings.auc_clamp_eps)
    report.meta["eval_kind"] = args.eval_kind
    report.meta["version"] = __version__
    doc = _stamp(report.to_dict(), args)
    _write_json(Path(args.out) / "report.json", doc)
    print(json.dumps({"dprime": report.macro["dprime"], "lwlrap": report.macro["lwlrap"],
                      "missing_scores": report.counts["missing_scores"]}, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze

def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return "" if x is None else repr(float(x))


def cmd_analyze(args) -> int:
    weak = load_store(args.weak).require_weak()
    strong = load_store(args.strong).require_strong()
    names = {}
    if args.ontology:
        onto = load_ontology(_read(args.ontology), source=args.ontology)
        names = {cid: node.name for cid, node in onto.nodes.items()}
    out = Path(args.out)

    scatter = priors_scatter(weak, strong)
    _write_text(out / "priors_scatter.csv", _csv(
        [(r.class_id, names.get(r.class_id, ""), _fmt(r.weak_prior), _fmt(r.strong_prior), _fmt(r.ratio))
         for r in scatter],
        ("class_id", "name", "weak_prior", "strong_prior", "ratio"),
    ))

    header = ("condition_class", "condition_name", "outcome_class", "outcome_name",
              "rank", "odds_ratio", "a", "b", "c", "d")
    n_shared = 0
    for direction, fname in (("weak->strong", "odds_weak_to_strong.csv"), ("strong->weak", "odds_strong_to_weak.csv")):
        rows, n_shared = odds_table(weak, strong, direction, top_k=args.top_k, min_cooccur=args.min_cooccur,
                                    condition_classes=args.condition or None)
        _write_text(out / fname, _csv(
            [(r.condition_class, names.get(r.condition_class, ""), r.outcome_class, names.get(r.outcome_class, ""),
              r.rank, _fmt(r.odds_ratio), r.a, r.b, r.c, r.d) for r in rows],
            header,
        ))

    shared = set(shared_clips(weak, strong))
    summary = {
        "shared_clips": n_shared,
        "weak_clips": len(weak.clips),
        "strong_clips": len(strong.clips),
        "positive_instances": {"weak": positive_instances(weak), "strong": positive_instances(strong)},
        "positive_instances_shared": {
            "weak": positive_instances(weak.restrict(shared)),
            "strong": positive_instances(strong.restrict(shared)),
        },
        "classes": {"weak": len(weak.class_ids()), "strong": len(strong.class_ids()), "scatter_rows": len(scatter)},
    }
    _write_json(out / "analysis.json", _stamp(summary, args))
    return EXIT_OK


# ---------------------------------------------------------------------------
# build-subsets / mix-manifest

def cmd_build_subsets(args) -> int:
    weak = load_store(args.weak).require_weak()
    strong = load_store(args.strong).require_strong()
    subsets = build_subsets(weak, strong)
    out = Path(args.out)
    write_store(out / "weak_subset", Store(weak=subsets.weak))
    write_store(out / "diffuse_subset", Store(strong=subsets.diffuse))
    write_store(out / "strong_subset", Store(strong=subsets.strong))
    doc = {
        "clips": len(subsets.strong.clips),
        "missing_from_weak": [c.segment_id for c in subsets.missing_from_weak],
        "weak_clips_not_in_strong": len(weak.clips - strong.clips),
    }
    if subsets.missing_from_weak:
        log.warning("%d strong clips have no weak labels and were left out", len(subsets.missing_from_weak))
    _write_json(out / "subsets.json", _stamp(doc, args))
    return EXIT_OK


def cmd_mix_manifest(args) -> int:
    settings = _settings(args)
    spec = MixSpec(mu=args.mu, seed=args.seed, epoch=args.epoch, rows=args.rows)
    weak = load_store(args.weak_manifest, clip_dur=settings.clip_dur).require_weak()
    strong_like = load_store(args.strong_manifest, clip_dur=settings.clip_dur).require_strong()
    manifest = mix_manifest(spec, weak, strong_like, settings)
    out = Path(args.out)
    stem = f"mix_e{args.epoch}"
    _write_text(out / f"{stem}.tsv", manifest.to_tsv())
    _write_json(out / f"{stem}.json", _stamp(manifest.summary(), args))
    return EXIT_OK


# ---------------------------------------------------------------------------

def _global_flags(parser, suppress: bool) -> None:
    # on subparsers the defaults are suppressed so flags given before the
    # subcommand are not overwritten
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="64-bit seed for every random draw (default 0)")
    parser.add_argument("--config", type=Path, default=d(None), help="key = value settings file")
    parser.add_argument("--out", type=Path, default=d(Path(".")), help="output directory (default .)")
    parser.add_argument("--no-timestamp", action="store_true", default=d(False),
                        help="leave the 'created' field out of JSON outputs")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strongeval", description="Strong-label frame projection, evaluation and analysis tools.")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse label files into a store directory")
    p.add_argument("--strong", action="append", type=Path, help="strong-label TSV (repeatable)")
    p.add_argument("--weak", action="append", type=Path, help="weak-label segments CSV (repeatable)")
    p.add_argument("--negatives", action="append", type=Path,
                   help="weak-format CSV whose rows carry a 'negative' polarity column (repeatable)")
    p.add_argument("--ontology", type=Path, help="ontology JSON, needed by --collapse-music/--smear")
    p.add_argument("--collapse-music", action="store_true", help="map every music descendant onto music_id")
    p.add_argument("--smear", action="store_true", help="add all ontology ancestors to every positive label")
    p.add_argument("--music-id", help="class id of the music root (default /m/04rlf)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("frame", parents=[common], help="project strong labels onto 0.96 s frames")
    p.add_argument("store", type=Path)
    p.add_argument("--no-comp-neg", action="store_true", help="do not emit complementary negatives")
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("eval", parents=[common], help="d-prime and lwlrap for a score file")
    p.add_argument("--scores", type=Path, required=True, help="CSV with columns unit_id,class_id,score")
    p.add_argument("--labels", type=Path, required=True,
                   help="framed TSV (strong eval) or weak CSV / store (weak eval)")
    p.add_argument("--negatives", dest="negatives_mode", choices=("balanced", "pooled"), help="negative pooling (default balanced)")
    p.add_argument("--eval-kind", choices=("strong", "weak"), default="strong")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "analyze", parents=[common],
        help="priors scatter and odds-ratio tables",
        description=(
            "Writes priors_scatter.csv (class_id,name,weak_prior,strong_prior,ratio=strong/weak), "
            "odds_weak_to_strong.csv and odds_strong_to_weak.csv (condition_class,condition_name,"
            "outcome_class,outcome_name,rank,odds_ratio,a,b,c,d where a=both, b=condition only, "
            "c=outcome only, d=neither over the shared clips) and analysis.json."
        ),
    )
    p.add_argument("weak", type=Path)
    p.add_argument("strong", type=Path)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--min-cooccur", type=int, default=1, help="skip pairs sharing fewer clips")
    p.add_argument("--condition", action="append", help="restrict to these condition classes (repeatable)")
    p.add_argument("--ontology", type=Path, help="ontology JSON for class names")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("build-subsets", parents=[common], help="weak/diffuse/strong training sets on shared clips")
    p.add_argument("weak", type=Path)
    p.add_argument("strong", type=Path)
    p.set_defaults(func=cmd_build_subsets)

    p = sub.add_parser("mix-manifest", parents=[common], help="one epoch of mu-mixed training rows")
    p.add_argument("--mu", type=float, required=True, help="probability of drawing from the strong-like set")
    p.add_argument("--weak-manifest", type=Path, required=True)
    p.add_argument("--strong-manifest", type=Path, required=True)
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--rows", type=int, help="rows to draw (default: number of weak clips)")
    p.set_defaults(func=cmd_mix_manifest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StrongEvalError as exc:
        print(f"strongeval {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"strongeval {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
