"""Derived training sets and per-epoch weak/strong mixing manifests.

``build_subsets`` produces the three same-clip training sets: weak labels on
the strongly relabelled clips, the strong labels themselves, and the strong
labels spread over the whole clip ("diffuse"). ``mix_manifest`` draws one
epoch of training rows: each row comes from the strong-like source with
probability ``mu`` and gets a random one-frame crop labelled by the frame rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ._random import make_rng
from .config import Settings
from .corpus import ClipId, Corpus, CorpusKind, LabeledSegment, Polarity, build_diffuse
from .errors import ValidationError
from .framing import CropLabeler

MANIFEST_HEADER = ("segment_id", "source", "crop_start_seconds", "labels")


@dataclass(frozen=True)
class Subsets:
    weak: Corpus
    diffuse: Corpus
    strong: Corpus
    # strong clips with no weak labels; dropped from all three sets
    missing_from_weak: tuple[ClipId, ...] = ()


def build_subsets(weak: Corpus, strong: Corpus) -> Subsets:
    if strong.kind is not CorpusKind.STRONG:
        raise ValidationError("build_subsets needs a strong corpus")
    shared = weak.clips & strong.clips
    if not shared:
        raise ValidationError("weak and strong corpora share no clips")
    missing = tuple(sorted(strong.clips - weak.clips))
    strong_sub = strong.restrict(shared)
    return Subsets(
        weak=weak.restrict(shared),
        diffuse=build_diffuse(strong_sub),
        strong=strong_sub,
        missing_from_weak=missing,
    )


@dataclass(frozen=True)
class MixSpec:
    mu: float
    seed: int = 0
    epoch: int = 0
    rows: int | None = None  # default: one row per weak clip

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValidationError(f"mu must be in [0, 1], got {self.mu}")
        if self.epoch < 0:
            raise ValidationError("epoch must be >= 0")
        if self.rows is not None and self.rows < 0:
            raise ValidationError("rows must be >= 0")


@dataclass
class Manifest:
    spec: MixSpec
    rows: list[tuple[str, str, float, tuple[str, ...]]] = field(default_factory=list)
    skipped_short_clips: int = 0

    @property
    def strong_fraction(self) -> float:
        if not self.rows:
            return float("nan")
        return sum(1 for r in self.rows if r[1] == "strong") / len(self.rows)

    def to_tsv(self) -> str:
        lines = ["\t".join(MANIFEST_HEADER)]
        for sid, source, start, labels in self.rows:
            lines.append(f"{sid}\t{source}\t{start:.6f}\t{','.join(labels)}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "mu": self.spec.mu,
            "seed": self.spec.seed,
            "epoch": self.spec.epoch,
            "rows": len(self.rows),
            "strong_rows": sum(1 for r in self.rows if r[1] == "strong"),
            "realized_strong_fraction": self.strong_fraction if self.rows else None,
            "skipped_short_clips": self.skipped_short_clips,
        }


def _weak_labelers(weak: Corpus, settings: Settings) -> tuple[list[CropLabeler], int]:
    # weak labels hold for the whole clip, so crops see full-clip segments
    present: dict[ClipId, list[LabeledSegment]] = {}
    for ann in weak.weak:
        if ann.polarity is Polarity.PRESENT:
            present.setdefault(ann.clip, []).append(LabeledSegment(ann.clip, ann.class_id, 0.0, ann.clip.duration))
    return _labelers(present, settings)


def _labelers(segments: dict[ClipId, list[LabeledSegment]], settings: Settings) -> tuple[list[CropLabeler], int]:
    out, skipped = [], 0
    for clip in sorted(segments):
        if clip.duration < settings.frame_dur:
            skipped += 1
            continue
        out.append(CropLabeler(clip, segments[clip], settings))
    return out, skipped


def mix_manifest(spec: MixSpec, weak: Corpus, strong_like: Corpus, settings: Settings | None = None) -> Manifest:
    settings = settings or Settings()
    weak_rows, skip_w = _weak_labelers(weak, settings)
    strong_rows, skip_s = _labelers(strong_like.segments_by_clip(), settings)
    n = len(weak_rows) if spec.rows is None else spec.rows

    rng = make_rng(spec.seed, "mix", spec.epoch)
    pick_strong = rng.random(n) < spec.mu
    if pick_strong.any() and not strong_rows:
        raise ValidationError("strong-like manifest has no usable clips")
    if (~pick_strong).any() and not weak_rows:
        raise ValidationError("weak manifest has no usable clips")
    weak_idx = rng.integers(0, max(len(weak_rows), 1), n)
    strong_idx = rng.integers(0, max(len(strong_rows), 1), n)
    crop_u = rng.random(n)

    manifest = Manifest(spec, skipped_short_clips=skip_w + skip_s)
    for i in range(n):
        if pick_strong[i]:
            labeler, source = strong_rows[strong_idx[i]], "strong"
        else:
            labeler, source = weak_rows[weak_idx[i]], "weak"
        crop = labeler.label(float(crop_u[i]) * labeler.max_start)
        manifest.rows.append((crop.clip.segment_id, source, crop.crop_start_s, tuple(sorted(crop.classes))))
    return manifest

