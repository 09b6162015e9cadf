"""Relationships between a weak and a strong label set over the same clips:
per-class priors and odds ratios between a class in one set and a class in
the other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .corpus import ClipId, Corpus, class_counts, class_priors
from .errors import UndefinedMetricError, ValidationError

LABEL_SETS = ("weak", "strong")


@dataclass(frozen=True)
class Contingency2x2:
    """a: condition & outcome, b: condition only, c: outcome only, d: neither."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValidationError(f"negative cell in {self}")

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


def odds_ratio(t: Contingency2x2) -> float:
    """(a*d)/(b*c), adding 0.5 to every cell when any cell is zero."""
    a, b, c, d = t.a, t.b, t.c, t.d
    if 0 in (a, b, c, d):
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    return (a * d) / (b * c)


def shared_clips(weak: Corpus, strong: Corpus) -> list[ClipId]:
    """Clips present in both corpora (matched on video id and start time)."""
    return sorted(weak.clips & strong.clips)


def _presence(corpus: Corpus, clips: list[ClipId]) -> dict[ClipId, set[str]]:
    pos = corpus.positives_by_clip()
    return {clip: pos.get(clip, set()) for clip in clips}


def contingency_table(
    weak: Corpus,
    strong: Corpus,
    condition: tuple[str, str],
    outcome: tuple[str, str],
) -> tuple[Contingency2x2, int]:
    """2x2 table over the shared clips; ``condition``/``outcome`` are (label set, class id)."""
    for side in (condition, outcome):
        if side[0] not in LABEL_SETS:
            raise ValidationError(f"label set must be one of {LABEL_SETS}, got {side[0]!r}")
    clips = shared_clips(weak, strong)
    if not clips:
        raise UndefinedMetricError("weak and strong corpora share no clips")
    sets = {"weak": _presence(weak, clips), "strong": _presence(strong, clips)}
    a = b = c = d = 0
    for clip in clips:
        cond = condition[1] in sets[condition[0]][clip]
        out = outcome[1] in sets[outcome[0]][clip]
        if cond and out:
            a += 1
        elif cond:
            b += 1
        elif out:
            c += 1
        else:
            d += 1
    return Contingency2x2(a, b, c, d), len(clips)


def cross_label_odds(
    weak: Corpus,
    strong: Corpus,
    condition: tuple[str, str],
    outcome: tuple[str, str],
) -> float:
    table, _ = contingency_table(weak, strong, condition, outcome)
    return odds_ratio(table)


class OddsRow(NamedTuple):
    condition_class: str
    outcome_class: str
    rank: int
    odds_ratio: float
    a: int
    b: int
    c: int
    d: int


def _indicator(presence: dict[ClipId, set[str]], clips: list[ClipId]) -> tuple[sparse.csr_matrix, list[str]]:
    classes = sorted(set().union(*presence.values())) if presence else []
    col = {c: j for j, c in enumerate(classes)}
    rows, cols = [], []
    for i, clip in enumerate(clips):
        for cid in presence[clip]:
            rows.append(i)
            cols.append(col[cid])
    data = np.ones(len(rows), dtype=np.int64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(clips), len(classes))), classes


def odds_table(
    weak: Corpus,
    strong: Corpus,
    direction: str = "weak->strong",
    top_k: int = 10,
    min_cooccur: int = 1,
    condition_classes=None,
) -> tuple[list[OddsRow], int]:
    """Top-``top_k`` outcome classes by odds ratio for every condition class.

    ``direction`` names the condition set first (``weak->strong`` asks which
    strong labels go with a weak label). Pairs co-occurring on fewer than
    ``min_cooccur`` clips are skipped. Returns the rows and the number of
    shared clips used.
    """
    try:
        cond_set, out_set = direction.split("->")
    except ValueError:
        raise ValidationError(f"direction must look like 'weak->strong', got {direction!r}") from None
    if {cond_set, out_set} != set(LABEL_SETS):
        raise ValidationError(f"direction must be weak->strong or strong->weak, got {direction!r}")
    if top_k < 1:
        raise ValidationError("top_k must be >= 1")

    clips = shared_clips(weak, strong)
    if not clips:
        raise UndefinedMetricError("weak and strong corpora share no clips")
    corpora = {"weak": weak, "strong": strong}
    X, cond_classes = _indicator(_presence(corpora[cond_set], clips), clips)
    Y, out_classes = _indicator(_presence(corpora[out_set], clips), clips)

    n = len(clips)
    a = (X.T @ Y).toarray().astype(float)
    n_cond = np.asarray(X.sum(axis=0)).ravel()[:, None].astype(float)
    n_out = np.asarray(Y.sum(axis=0)).ravel()[None, :].astype(float)
    b = n_cond - a
    c = n_out - a
    d = n - a - b - c
    zero = (a == 0) | (b == 0) | (c == 0) | (d == 0)
    adj = np.where(zero, 0.5, 0.0)
    ors = ((a + adj) * (d + adj)) / ((b + adj) * (c + adj))

    wanted = None if condition_classes is None else set(condition_classes)
    rows: list[OddsRow] = []
    for i, cond in enumerate(cond_classes):
        if wanted is not None and cond not in wanted:
            continue
        candidates = [j for j in np.flatnonzero(a[i] >= min_cooccur)]
        candidates.sort(key=lambda j: (-ors[i, j], out_classes[j]))
        for rank, j in enumerate(candidates[:top_k], start=1):
            rows.append(OddsRow(cond, out_classes[j], rank, float(ors[i, j]),
                                int(a[i, j]), int(b[i, j]), int(c[i, j]), int(d[i, j])))
    return rows, n


class PriorRow(NamedTuple):
    class_id: str
    weak_prior: float
    strong_prior: float
    ratio: float | None  # strong / weak; None when the weak prior is 0


def priors_scatter(weak: Corpus, strong: Corpus, classes=None) -> list[PriorRow]:
    """Per-class priors in each label set, one row per class in the union (or in ``classes``)."""
    wp = class_priors(weak) if weak.clips else {}
    sp = class_priors(strong) if strong.clips else {}
    universe = sorted(set(wp) | set(sp) | set(classes or ()))
    rows = []
    for cid in universe:
        w, s = wp.get(cid, 0.0), sp.get(cid, 0.0)
        rows.append(PriorRow(cid, w, s, s / w if w > 0 else None))
    return rows


def positive_instances(corpus: Corpus) -> int:
    """Number of distinct (clip, class) positives."""
    return sum(class_counts(corpus).values())
