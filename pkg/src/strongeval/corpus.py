"""Weak (clip-level) and strong (time-stamped) label corpora.

Weak labels use the AudioSet segments CSV layout::

    # YTID, start_seconds, end_seconds, positive_labels
    --PJHxphWEs, 30.000, 40.000, "/m/09x0r,/t/dd00088"

An optional fifth ``polarity`` column (``present`` or ``negative``) marks
rows whose labels are explicit negatives. Strong labels use the TSV layout
``segment_id  start_time_seconds  end_time_seconds  label`` where
``segment_id`` is ``<ytid>_<clip start in ms>``.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import statistics
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace

from ._random import make_rng
from .errors import ParseError, UndefinedMetricError, ValidationError

CLIP_DUR = 10.0
STRONG_HEADER = ("segment_id", "start_time_seconds", "end_time_seconds", "label")
WEAK_HEADER = "# YTID, start_seconds, end_seconds, positive_labels"


class Polarity(enum.Enum):
    PRESENT = "present"
    NEGATIVE = "negative"


class CorpusKind(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"
    DIFFUSE = "diffuse"


@dataclass(frozen=True, order=True)
class ClipId:
    """A clip is identified by video id and start time; ``end_s`` only carries its length."""

    ytid: str
    start_s: float
    end_s: float = field(default=math.nan, compare=False)

    def __post_init__(self):
        if not self.ytid:
            raise ValidationError("empty ytid")
        if self.start_s < 0:
            raise ValidationError(f"{self.ytid}: negative start {self.start_s}")
        if math.isnan(self.end_s):
            object.__setattr__(self, "end_s", self.start_s + CLIP_DUR)
        if not self.end_s > self.start_s:
            raise ValidationError(f"{self.ytid}: end {self.end_s} <= start {self.start_s}")
        # tolerate ms rounding in released files
        if self.end_s - self.start_s > CLIP_DUR + 1e-3:
            raise ValidationError(f"{self.ytid}: clip longer than {CLIP_DUR} s")

    @property
    def duration(self) -> float:
        # absolute start/end carry float noise (30.96 - 30.0 != 0.96)
        return round(self.end_s - self.start_s, 6)

    @property
    def segment_id(self) -> str:
        return f"{self.ytid}_{round(self.start_s * 1000)}"

    @classmethod
    def from_segment_id(cls, segment_id: str, duration: float = CLIP_DUR) -> "ClipId":
        ytid, start = decode_segment_id(segment_id)
        return cls(ytid, start, start + duration)


@dataclass(frozen=True, order=True)
class WeakAnnotation:
    clip: ClipId
    class_id: str
    polarity: Polarity = Polarity.PRESENT


@dataclass(frozen=True, order=True)
class LabeledSegment:
    """Strong annotation; times are relative to the clip start."""

    clip: ClipId
    class_id: str
    start_s: float
    end_s: float

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Corpus:
    clips: frozenset[ClipId]
    weak: tuple[WeakAnnotation, ...] = ()
    strong: tuple[LabeledSegment, ...] = ()
    kind: CorpusKind = CorpusKind.WEAK
    # parse-time counters (duplicates dropped, times clamped); not part of equality
    warnings: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for ann in self.weak:
            if ann.clip not in self.clips:
                raise ValidationError(f"weak annotation for unregistered clip {ann.clip.segment_id}")
        for seg in self.strong:
            if seg.clip not in self.clips:
                raise ValidationError(f"segment for unregistered clip {seg.clip.segment_id}")

    def __len__(self):
        return len(self.clips)

    def sorted_clips(self) -> list[ClipId]:
        return sorted(self.clips)

    def positives_by_clip(self) -> dict[ClipId, set[str]]:
        """Classes marked present on each clip, from weak Present labels and strong segments."""
        out: dict[ClipId, set[str]] = {clip: set() for clip in self.clips}
        for ann in self.weak:
            if ann.polarity is Polarity.PRESENT:
                out[ann.clip].add(ann.class_id)
        for seg in self.strong:
            out[seg.clip].add(seg.class_id)
        return out

    def negatives_by_clip(self) -> dict[ClipId, set[str]]:
        out: dict[ClipId, set[str]] = defaultdict(set)
        for ann in self.weak:
            if ann.polarity is Polarity.NEGATIVE:
                out[ann.clip].add(ann.class_id)
        return dict(out)

    def segments_by_clip(self) -> dict[ClipId, list[LabeledSegment]]:
        out: dict[ClipId, list[LabeledSegment]] = defaultdict(list)
        for seg in self.strong:
            out[seg.clip].append(seg)
        return dict(out)

    def class_ids(self) -> set[str]:
        return {a.class_id for a in self.weak} | {s.class_id for s in self.strong}

    def restrict(self, clips: Iterable[ClipId]) -> "Corpus":
        keep = self.clips & frozenset(clips)
        return replace(
            self,
            clips=keep,
            weak=tuple(a for a in self.weak if a.clip in keep),
            strong=tuple(s for s in self.strong if s.clip in keep),
        )


def decode_segment_id(segment_id: str) -> tuple[str, float]:
    """``"abc_30000"`` -> ``("abc", 30.0)``. Splits at the last underscore."""
    ytid, sep, millis = segment_id.rpartition("_")
    if not sep or not ytid:
        raise ParseError(f"segment id {segment_id!r} lacks a '_<milliseconds>' suffix")
    if not millis.isdigit():
        raise ParseError(f"segment id {segment_id!r} has non-integer suffix {millis!r}")
    return ytid, int(millis) / 1000


def _parse_float(value: str, what: str, lineno: int, source) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ParseError(f"non-numeric {what} {value!r}", line=lineno, source=source) from None
    if not math.isfinite(out):
        raise ParseError(f"non-finite {what} {value!r}", line=lineno, source=source)
    return out


def parse_weak_csv(text: str, source=None) -> Corpus:
    clips: dict[ClipId, ClipId] = {}
    labels: dict[tuple[ClipId, str], Polarity] = {}
    warnings = Counter()

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        row = next(csv.reader([line], skipinitialspace=True))
        if len(row) not in (4, 5):
            raise ParseError(f"expected 4 or 5 fields, got {len(row)}", line=lineno, source=source)
        ytid = row[0].strip()
        start = _parse_float(row[1], "start time", lineno, source)
        end = _parse_float(row[2], "end time", lineno, source)
        mids = [m.strip() for m in row[3].split(",") if m.strip()]
        if not mids:
            raise ParseError("empty label list", line=lineno, source=source)
        polarity = Polarity.PRESENT
        if len(row) == 5:
            try:
                polarity = Polarity(row[4].strip().lower())
            except ValueError:
                raise ParseError(f"polarity must be present/negative, got {row[4]!r}", line=lineno, source=source) from None
        try:
            clip = ClipId(ytid, start, end)
        except ValidationError as exc:
            raise ValidationError(f"{source or '<weak>'}: line {lineno}: {exc}") from None
        clip = clips.setdefault(clip, clip)
        for mid in mids:
            key = (clip, mid)
            if key in labels:
                if labels[key] is not polarity:
                    raise ValidationError(
                        f"{source or '<weak>'}: line {lineno}: {mid} is both present and negative on {clip.segment_id}"
                    )
                warnings["duplicate_label"] += 1
                continue
            labels[key] = polarity

    weak = tuple(WeakAnnotation(clip, mid, pol) for (clip, mid), pol in labels.items())
    return Corpus(frozenset(clips), weak=weak, kind=CorpusKind.WEAK, warnings=dict(warnings))


def parse_strong_tsv(
    text: str,
    source=None,
    clip_dur: float = CLIP_DUR,
    durations: Mapping[str, float] | None = None,
) -> Corpus:
    """Parse a strong-label TSV.

    Clip lengths come from ``durations`` (keyed by segment id) and default to
    ``clip_dur``. Times that spill past the clip are clamped and counted in
    ``warnings["clamped"]``; a segment lying wholly outside the clip is an error.
    """
    durations = durations or {}
    clips: dict[str, ClipId] = {}
    segments = []
    warnings = Counter()
    header_seen = False

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.rstrip("\r").split("\t")
        if not header_seen:
            header_seen = True
            if tuple(f.strip() for f in fields) == STRONG_HEADER:
                continue
            if fields[0].strip() == "segment_id":
                raise ParseError(f"unexpected header {fields}", line=lineno, source=source)
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", line=lineno, source=source)
        seg_id, start_txt, end_txt, label = (f.strip() for f in fields)
        if not label:
            raise ParseError("empty label", line=lineno, source=source)
        start = _parse_float(start_txt, "start time", lineno, source)
        end = _parse_float(end_txt, "end time", lineno, source)
        if end <= start:
            raise ValidationError(f"{source or '<strong>'}: line {lineno}: end {end} <= start {start}")

        clip = clips.get(seg_id)
        if clip is None:
            try:
                clip = ClipId.from_segment_id(seg_id, durations.get(seg_id, clip_dur))
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno, source=source) from None
            clips[seg_id] = clip
        dur = clip.duration
        if end <= 0 or start >= dur:
            raise ValidationError(f"{source or '<strong>'}: line {lineno}: segment [{start}, {end}) outside clip [0, {dur})")
        if start < 0 or end > dur:
            warnings["clamped"] += 1
            start, end = max(start, 0.0), min(end, dur)
        segments.append(LabeledSegment(clip, label, start, end))

    return Corpus(
        frozenset(clips.values()), strong=tuple(segments), kind=CorpusKind.STRONG, warnings=dict(warnings)
    )


def format_time(t: float) -> str:
    """At least three decimals, more only when needed to round-trip."""
    text = f"{t:.3f}"
    return text if float(text) == t else repr(float(t))


def write_strong_tsv(corpus: Corpus) -> str:
    out = ["\t".join(STRONG_HEADER)]
    for seg in corpus.strong:
        out.append(f"{seg.clip.segment_id}\t{format_time(seg.start_s)}\t{format_time(seg.end_s)}\t{seg.class_id}")
    return "\n".join(out) + "\n"


def write_weak_csv(corpus: Corpus) -> str:
    """One row per clip and polarity; negative rows carry a trailing ``negative`` column."""
    grouped: dict[tuple[ClipId, Polarity], list[str]] = defaultdict(list)
    for ann in corpus.weak:
        grouped[(ann.clip, ann.polarity)].append(ann.class_id)
    out = [
        f"# num_ytids={len({c.ytid for c in corpus.clips})}, num_segs={len(corpus.clips)}",
        WEAK_HEADER + ", polarity",
    ]
    order = {Polarity.PRESENT: 0, Polarity.NEGATIVE: 1}
    for clip, pol in sorted(grouped, key=lambda k: (k[0], order[k[1]])):
        row = f'{clip.ytid}, {format_time(clip.start_s)}, {format_time(clip.end_s)}, "{",".join(grouped[(clip, pol)])}"'
        if pol is Polarity.NEGATIVE:
            row += ", negative"
        out.append(row)
    return "\n".join(out) + "\n"


def merge_class_segments(segments: Iterable[LabeledSegment]) -> list[LabeledSegment]:
    """Union of one clip+class's segments as sorted, disjoint segments. Touching spans merge."""
    segments = sorted(segments, key=lambda s: (s.start_s, s.end_s))
    if not segments:
        return []
    first = segments[0]
    if any(s.clip != first.clip or s.class_id != first.class_id for s in segments):
        raise ValidationError("merge_class_segments needs segments of a single clip and class")
    merged = [first]
    for seg in segments[1:]:
        last = merged[-1]
        if seg.start_s <= last.end_s:
            if seg.end_s > last.end_s:
                merged[-1] = replace(last, end_s=seg.end_s)
        else:
            merged.append(seg)
    return merged


def build_diffuse(strong: Corpus) -> Corpus:
    """Expand every (clip, class) present in a strong corpus to the whole clip."""
    if strong.kind is not CorpusKind.STRONG:
        raise ValidationError(f"build_diffuse needs a strong corpus, got {strong.kind.value}")
    seen: dict[tuple[ClipId, str], None] = {}
    for seg in strong.strong:
        seen.setdefault((seg.clip, seg.class_id))
    diffuse = tuple(LabeledSegment(clip, cid, 0.0, clip.duration) for clip, cid in seen)
    return Corpus(strong.clips, weak=strong.weak, strong=diffuse, kind=CorpusKind.DIFFUSE)


def class_counts(corpus: Corpus) -> Counter:
    """Number of clips bearing each class as a positive."""
    counts = Counter()
    for classes in corpus.positives_by_clip().values():
        counts.update(classes)
    return counts


def negative_counts(corpus: Corpus) -> Counter:
    counts = Counter()
    for classes in corpus.negatives_by_clip().values():
        counts.update(classes)
    return counts


class Priors(dict):
    """Class -> prior mapping that answers 0.0 for classes never seen."""

    def __missing__(self, key):
        return 0.0


def class_priors(corpus: Corpus) -> Priors:
    if not corpus.clips:
        raise UndefinedMetricError("priors are undefined for an empty corpus")
    n = len(corpus.clips)
    return Priors({cid: count / n for cid, count in sorted(class_counts(corpus).items())})


def mean_labels_per_clip(corpus: Corpus) -> float:
    """Average number of distinct positive classes per clip."""
    if not corpus.clips:
        raise UndefinedMetricError("empty corpus")
    return sum(class_counts(corpus).values()) / len(corpus.clips)


def corpus_stats(corpus: Corpus) -> dict:
    pos = class_counts(corpus)
    neg = negative_counts(corpus)

    def summary(counts):
        values = list(counts.values())
        if not values:
            return {"classes": 0}
        lo = min(counts.items(), key=lambda kv: (kv[1], kv[0]))
        hi = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
        return {
            "classes": len(values),
            "mean": statistics.fmean(values),
            "median": statistics.median(values),
            "min": {"class_id": lo[0], "clips": lo[1]},
            "max": {"class_id": hi[0], "clips": hi[1]},
        }

    return {
        "kind": corpus.kind.value,
        "clips": len(corpus.clips),
        "strong_segments": len(corpus.strong),
        "weak_annotations": len(corpus.weak),
        "positive_instances": sum(pos.values()),
        "mean_labels_per_clip": sum(pos.values()) / len(corpus.clips) if corpus.clips else 0.0,
        "positives_per_class": summary(pos),
        "negatives_per_class": summary(neg),
        "per_class_positive_clips": dict(sorted(pos.items())),
        "per_class_negative_clips": dict(sorted(neg.items())),
        "warnings": dict(sorted(corpus.warnings.items())),
    }


def select_balanced_subset(corpus: Corpus, target_per_class: int, seed: int) -> set[ClipId]:
    """Greedy class-balanced clip selection.

    Classes are visited rarest first; for each, random clips bearing it are
    added until the selected set holds ``target_per_class`` clips of that
    class or the class runs out. Clips picked earlier for co-occurring
    classes count toward later ones.
    """
    if target_per_class < 1:
        raise ValidationError("target_per_class must be >= 1")
    rng = make_rng(seed, "balanced_subset")
    by_class: dict[str, list[ClipId]] = defaultdict(list)
    for clip, classes in sorted(corpus.positives_by_clip().items()):
        for cid in classes:
            by_class[cid].append(clip)

    selected: set[ClipId] = set()
    for cid in sorted(by_class, key=lambda c: (len(by_class[c]), c)):
        bearing = by_class[cid]
        have = sum(1 for clip in bearing if clip in selected)
        if have >= target_per_class:
            continue
        pool = [clip for clip in bearing if clip not in selected]
        for i in rng.permutation(len(pool))[: target_per_class - have]:
            selected.add(pool[i])
    return selected


def clip_durations(clips: Iterable[ClipId]) -> dict[str, float]:
    return {clip.segment_id: clip.duration for clip in clips}


def read_durations_tsv(text: str) -> dict[str, float]:
    out = {}
    for row in csv.DictReader(io.StringIO(text), delimiter="\t"):
        out[row["segment_id"]] = float(row["end_seconds"]) - float(row["start_seconds"])
    return out


def write_clips_tsv(clips: Iterable[ClipId]) -> str:
    lines = ["segment_id\tytid\tstart_seconds\tend_seconds"]
    for clip in sorted(clips):
        lines.append(f"{clip.segment_id}\t{clip.ytid}\t{format_time(clip.start_s)}\t{format_time(clip.end_s)}")
    return "\n".join(lines) + "\n"



def merge_corpora(*corpora: Corpus) -> Corpus:
    """Union of several corpora of one kind; repeated weak labels are dropped and counted."""
    if not corpora:
        return Corpus(frozenset())
    kinds = {c.kind for c in corpora}
    if len(kinds) > 1:
        raise ValidationError(f"cannot merge corpora of kinds {sorted(k.value for k in kinds)}")
    warnings = Counter()
    for c in corpora:
        warnings.update(c.warnings)
    labels: dict[tuple[ClipId, str], Polarity] = {}
    for c in corpora:
        for ann in c.weak:
            key = (ann.clip, ann.class_id)
            if key in labels:
                if labels[key] is not ann.polarity:
                    raise ValidationError(f"{ann.class_id} is both present and negative on {ann.clip.segment_id}")
                warnings["duplicate_label"] += 1
                continue
            labels[key] = ann.polarity
    clips: dict[ClipId, ClipId] = {}
    for c in corpora:
        for clip in c.clips:
            clips.setdefault(clip, clip)
    return Corpus(
        frozenset(clips),
        weak=tuple(WeakAnnotation(clips[clip], cid, pol) for (clip, cid), pol in labels.items()),
        strong=tuple(seg for c in corpora for seg in c.strong),
        kind=kinds.pop(),
        warnings=dict(warnings),
    )
