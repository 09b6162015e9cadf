"""On-disk corpus store written by ``ingest`` and read by the other commands.

A store is a directory holding any of ``strong.tsv`` (strong segments),
``weak.csv`` (weak labels and explicit negatives, polarity column),
``clips.tsv`` (clip lengths) plus ``store.json`` and ``stats.json``.
Commands also accept a bare ``.tsv``/``.csv`` label file in place of a store.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import (
    Corpus,
    CorpusKind,
    clip_durations,
    corpus_stats,
    parse_strong_tsv,
    parse_weak_csv,
    read_durations_tsv,
    write_clips_tsv,
    write_strong_tsv,
    write_weak_csv,
)
from .errors import ValidationError

STORE_SCHEMA = 1


@dataclass(frozen=True)
class Store:
    weak: Corpus | None = None
    strong: Corpus | None = None

    def require_strong(self) -> Corpus:
        if self.strong is None:
            raise ValidationError("store has no strong labels")
        return self.strong

    def require_weak(self) -> Corpus:
        if self.weak is None:
            raise ValidationError("store has no weak labels")
        return self.weak


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def write_store(directory: Path, store: Store, extra: dict | None = None) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    clips = set()
    meta = {"schema": STORE_SCHEMA, "contents": {}}
    stats = {}
    if store.strong is not None:
        _write(directory / "strong.tsv", write_strong_tsv(store.strong))
        meta["contents"]["strong"] = store.strong.kind.value
        stats["strong"] = corpus_stats(store.strong)
        clips |= store.strong.clips
    if store.weak is not None:
        _write(directory / "weak.csv", write_weak_csv(store.weak))
        meta["contents"]["weak"] = store.weak.kind.value
        stats["weak"] = corpus_stats(store.weak)
        clips |= store.weak.clips
    _write(directory / "clips.tsv", write_clips_tsv(clips))
    stats.update(extra or {})
    _write(directory / "store.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _write(directory / "stats.json", json.dumps(stats, indent=2, sort_keys=True) + "\n")
    return stats


def load_store(path: str | Path, clip_dur: float = 10.0) -> Store:
    path = Path(path)
    if path.is_file():
        if path.suffix.lower() == ".csv":
            return Store(weak=parse_weak_csv(_read(path), source=path))
        return Store(strong=parse_strong_tsv(_read(path), source=path, clip_dur=clip_dur))
    if not path.is_dir():
        raise FileNotFoundError(f"no store or label file at {path}")

    meta = {}
    if (path / "store.json").exists():
        meta = json.loads(_read(path / "store.json")).get("contents", {})
    weak = strong = None
    if (path / "weak.csv").exists():
        weak = parse_weak_csv(_read(path / "weak.csv"), source=path / "weak.csv")
    durations = {}
    if (path / "clips.tsv").exists():
        durations = read_durations_tsv(_read(path / "clips.tsv"))
    elif weak is not None:
        durations = clip_durations(weak.clips)
    if (path / "strong.tsv").exists():
        strong = parse_strong_tsv(
            _read(path / "strong.tsv"), source=path / "strong.tsv", clip_dur=clip_dur, durations=durations
        )
        if meta.get("strong") == CorpusKind.DIFFUSE.value:
            strong = replace(strong, kind=CorpusKind.DIFFUSE)
    if weak is None and strong is None:
        raise FileNotFoundError(f"{path} holds neither strong.tsv nor weak.csv")
    return Store(weak=weak, strong=strong)
