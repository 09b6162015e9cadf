"""Projection of strong labels onto a fixed grid of 960 ms frames.

A frame takes a class as positive when the class's (merged) segments fill at
least half of the frame, or when the frame holds at least half of all the
time the class is labelled in that clip. The second rule keeps events
shorter than half a frame from vanishing.

Frame ``k`` spans ``[k * frame_dur, (k + 1) * frame_dur)``; the remainder of
the clip past the last whole frame is not framed. Clips shorter than one
frame get a single frame covering the whole clip.
"""
from __future__ import annotations

import enum
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ._random import make_rng
from .config import Settings
from .corpus import ClipId, Corpus, LabeledSegment, merge_class_segments
from .errors import ParseError, ValidationError

FRAME_DUR = 0.96
# absorbs float noise so ">= half" stays inclusive at exact ties (e.g. 0.15 vs 0.5 * 0.3)
TIE_TOL = 1e-9

FRAMED_HEADER = ("segment_id", "frame_index", "label", "polarity")


class FramePolarity(enum.Enum):
    POSITIVE = "POS"
    COMPLEMENTARY_NEGATIVE = "COMP_NEG"
    EXPLICIT_NEGATIVE = "EXP_NEG"


@dataclass(frozen=True)
class FrameGrid:
    clip_dur: float
    frame_dur: float = FRAME_DUR
    num_frames: int = field(init=False)

    def __post_init__(self):
        if not self.clip_dur > 0:
            raise ValidationError(f"clip duration must be > 0, got {self.clip_dur}")
        if not self.frame_dur > 0:
            raise ValidationError(f"frame duration must be > 0, got {self.frame_dur}")
        n = math.floor(self.clip_dur / self.frame_dur + TIE_TOL)
        object.__setattr__(self, "num_frames", max(1, n))

    def span(self, k: int) -> tuple[float, float]:
        if not 0 <= k < self.num_frames:
            raise IndexError(k)
        return k * self.frame_dur, min((k + 1) * self.frame_dur, self.clip_dur)

    def spans(self) -> list[tuple[float, float]]:
        return [self.span(k) for k in range(self.num_frames)]


def make_grid(clip_dur: float, frame_dur: float = FRAME_DUR) -> FrameGrid:
    return FrameGrid(clip_dur, frame_dur)


@dataclass
class FrameLabelSet:
    clip: ClipId
    num_frames: int
    entries: dict[tuple[int, str], FramePolarity] = field(default_factory=dict)

    def frames(self, class_id: str, polarity: FramePolarity) -> list[int]:
        return sorted(k for (k, c), p in self.entries.items() if c == class_id and p is polarity)

    def classes(self, polarity: FramePolarity | None = None) -> set[str]:
        return {c for (_, c), p in self.entries.items() if polarity is None or p is polarity}

    def count(self, polarity: FramePolarity) -> int:
        return sum(1 for p in self.entries.values() if p is polarity)

    def rows(self) -> list[tuple[str, int, str, str]]:
        sid = self.clip.segment_id
        return [(sid, k, c, p.value) for (k, c), p in sorted(self.entries.items())]


def overlap(span: tuple[float, float], segments: Iterable[LabeledSegment]) -> float:
    """Seconds of ``span`` covered by ``segments`` (assumed disjoint)."""
    lo, hi = span
    return sum(max(0.0, min(hi, s.end_s) - max(lo, s.start_s)) for s in segments)


def is_frame_positive(
    span: tuple[float, float],
    segments: Sequence[LabeledSegment],
    total_class_dur: float,
    fill_fraction: float = 0.5,
    label_fraction: float = 0.5,
) -> bool:
    """Both comparisons are inclusive. ``segments`` must already be merged."""
    covered = overlap(span, segments)
    if covered <= 0.0:
        return False
    frame_len = span[1] - span[0]
    return (
        covered >= fill_fraction * frame_len - TIE_TOL
        or covered >= label_fraction * total_class_dur - TIE_TOL
    )


def _merged_by_class(segments: Iterable[LabeledSegment]) -> dict[str, list[LabeledSegment]]:
    by_class: dict[str, list[LabeledSegment]] = defaultdict(list)
    for seg in segments:
        by_class[seg.class_id].append(seg)
    return {cid: merge_class_segments(segs) for cid, segs in sorted(by_class.items())}


def project_positives(
    clip: ClipId,
    segments: Iterable[LabeledSegment],
    grid: FrameGrid,
    fill_fraction: float = 0.5,
    label_fraction: float = 0.5,
) -> FrameLabelSet:
    out = FrameLabelSet(clip, grid.num_frames)
    spans = grid.spans()
    for cid, merged in _merged_by_class(segments).items():
        total = sum(s.duration for s in merged)
        for k, span in enumerate(spans):
            if is_frame_positive(span, merged, total, fill_fraction, label_fraction):
                out.entries[(k, cid)] = FramePolarity.POSITIVE
    return out


def complementary_negatives(positives: FrameLabelSet, grid: FrameGrid) -> dict[tuple[int, str], FramePolarity]:
    """Every frame not positive for a class that is positive somewhere in the clip."""
    pos = {key for key, p in positives.entries.items() if p is FramePolarity.POSITIVE}
    additions = {}
    for cid in sorted({c for _, c in pos}):
        for k in range(grid.num_frames):
            if (k, cid) not in pos:
                additions[(k, cid)] = FramePolarity.COMPLEMENTARY_NEGATIVE
    return additions


def project_explicit_negatives(
    negatives: Iterable[str],
    grid: FrameGrid,
    positives: FrameLabelSet | None = None,
) -> tuple[dict[tuple[int, str], FramePolarity], list[str]]:
    """Spread clip-level explicit negatives over all frames.

    Frames already positive for the class keep their positive label; such
    classes are returned as conflicts.
    """
    pos = set() if positives is None else {
        key for key, p in positives.entries.items() if p is FramePolarity.POSITIVE
    }
    additions = {}
    conflicts = []
    for cid in sorted(set(negatives)):
        clash = False
        for k in range(grid.num_frames):
            if (k, cid) in pos:
                clash = True
            else:
                additions[(k, cid)] = FramePolarity.EXPLICIT_NEGATIVE
        if clash:
            conflicts.append(cid)
    return additions, conflicts


def frame_clip(
    clip: ClipId,
    segments: Iterable[LabeledSegment],
    negatives: Iterable[str] = (),
    settings: Settings | None = None,
    comp_neg: bool = True,
) -> tuple[FrameLabelSet, list[str]]:
    """Positives, then complementary negatives, then explicit negatives (which win over complementary ones)."""
    settings = settings or Settings()
    grid = FrameGrid(clip.duration, settings.frame_dur)
    labels = project_positives(clip, segments, grid, settings.fill_fraction, settings.label_fraction)
    if comp_neg:
        labels.entries.update(complementary_negatives(labels, grid))
    additions, conflicts = project_explicit_negatives(negatives, grid, labels)
    labels.entries.update(additions)
    return labels, conflicts


@dataclass
class FramingReport:
    clips: int = 0
    frames: int = 0
    counts: Counter = field(default_factory=Counter)
    conflicts: list[tuple[str, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "clips": self.clips,
            "frames": self.frames,
            "rows": {p.value: self.counts[p.value] for p in FramePolarity},
            "positive_negative_conflicts": len(self.conflicts),
            "conflicts": [{"segment_id": s, "class_id": c} for s, c in self.conflicts],
        }


def frame_corpus(
    strong: Corpus,
    negatives: Mapping[ClipId, set[str]] | None = None,
    settings: Settings | None = None,
    comp_neg: bool = True,
) -> tuple[list[FrameLabelSet], FramingReport]:
    """Frame every clip of ``strong`` plus any clip that only carries explicit negatives."""
    negatives = negatives if negatives is not None else strong.negatives_by_clip()
    segments = strong.segments_by_clip()
    report = FramingReport()
    out = []
    for clip in sorted(strong.clips | set(negatives)):
        labels, conflicts = frame_clip(clip, segments.get(clip, ()), negatives.get(clip, ()), settings, comp_neg)
        out.append(labels)
        report.clips += 1
        report.frames += labels.num_frames
        report.counts.update(p.value for p in labels.entries.values())
        report.conflicts.extend((clip.segment_id, c) for c in conflicts)
    return out, report


def write_framed_tsv(label_sets: Iterable[FrameLabelSet]) -> str:
    lines = ["\t".join(FRAMED_HEADER)]
    rows = sorted(row for ls in label_sets for row in ls.rows())
    lines.extend(f"{sid}\t{k}\t{cid}\t{pol}" for sid, k, cid, pol in rows)
    return "\n".join(lines) + "\n"


def parse_framed_tsv(text: str, source=None) -> dict[tuple[str, str], FramePolarity]:
    """Read a framed label file into ``{(unit_id, class_id): polarity}`` with ``unit_id = segment_id:frame``."""
    out: dict[tuple[str, str], FramePolarity] = {}
    lines = text.splitlines()
    if not lines:
        return out
    if tuple(lines[0].split("\t")) != FRAMED_HEADER:
        raise ParseError(f"bad header {lines[0]!r}", line=1, source=source)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line=lineno, source=source)
        sid, frame, cid, pol = fields
        if not frame.isdigit():
            raise ParseError(f"bad frame index {frame!r}", line=lineno, source=source)
        try:
            polarity = FramePolarity(pol)
        except ValueError:
            raise ParseError(f"bad polarity {pol!r}", line=lineno, source=source) from None
        key = (f"{sid}:{int(frame)}", cid)
        if key in out and out[key] is not polarity:
            raise ValidationError(f"{source or '<framed>'}: line {lineno}: conflicting polarity for {key}")
        out[key] = polarity
    return out


@dataclass(frozen=True)
class CropLabel:
    clip: ClipId
    crop_start_s: float
    classes: frozenset[str]


class CropLabeler:
    """Labels arbitrary 960 ms windows of one clip; merges each class's segments once."""

    def __init__(self, clip: ClipId, segments: Iterable[LabeledSegment], settings: Settings | None = None):
        self.clip = clip
        self.settings = settings or Settings()
        self.merged = _merged_by_class(segments)
        self.totals = {cid: sum(s.duration for s in segs) for cid, segs in self.merged.items()}
        self.max_start = clip.duration - self.settings.frame_dur
        if self.max_start < -TIE_TOL:
            raise ValidationError(
                f"{clip.segment_id}: clip of {clip.duration} s is shorter than one {self.settings.frame_dur} s crop"
            )
        self.max_start = max(self.max_start, 0.0)

    def label(self, start: float) -> CropLabel:
        span = (start, start + self.settings.frame_dur)
        s = self.settings
        classes = frozenset(
            cid
            for cid, merged in self.merged.items()
            if is_frame_positive(span, merged, self.totals[cid], s.fill_fraction, s.label_fraction)
        )
        return CropLabel(self.clip, start, classes)

    def sample(self, rng: np.random.Generator) -> CropLabel:
        return self.label(float(rng.uniform(0.0, self.max_start)))


def sample_crop(
    clip: ClipId,
    segments: Iterable[LabeledSegment],
    seed: int | np.random.Generator,
    settings: Settings | None = None,
) -> CropLabel:
    """Random crop of one frame length, labelled with the frame rule."""
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, "crop")
    return CropLabeler(clip, segments, settings).sample(rng)
