"""ROC AUC, d-prime and lwlrap for clip- or frame-level classifier scores.

d-prime is computed from ROC AUC as ``sqrt(2) * probit(AUC)``, the
separation of two unit-variance Gaussians that would produce that AUC.
Negatives are only ever explicit or complementary negatives; unlabeled
(implicit) negatives are never used.
"""
from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd

from .corpus import Corpus, Polarity
from .errors import UndefinedMetricError, ValidationError
from .framing import FramePolarity

SCHEMA_VERSION = 1
AUC_CLAMP_EPS = 1e-6

# Wichura (1988), algorithm AS241 PPND16; relative accuracy about 1e-16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    acc = 0.0
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def probit(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"probit needs 0 < p < 1, got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = math.sqrt(-math.log(min(p, 1.0 - p)))
    if r <= 5.0:
        r -= 1.6
        x = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        x = _poly(_E, r) / _poly(_F, r)
    return -x if q < 0 else x


def dprime(auc: float, eps: float = AUC_CLAMP_EPS) -> float:
    """``sqrt(2) * probit(auc)`` with AUC clamped to ``[eps, 1 - eps]``; caps near +-6.72."""
    if math.isnan(auc) or not 0.0 <= auc <= 1.0:
        raise ValidationError(f"dprime needs an AUC in [0, 1], got {auc}")
    return math.sqrt(2.0) * probit(min(max(auc, eps), 1.0 - eps))


@dataclass(frozen=True)
class WeightedSamples:
    scores: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if scores.shape != weights.shape:
            raise ValidationError("scores and weights differ in length")
        if not np.all(np.isfinite(scores)):
            raise ValidationError("non-finite score")
        if np.any(~(weights > 0)) or not np.all(np.isfinite(weights)):
            raise ValidationError("weights must be positive and finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def unit(cls, scores) -> "WeightedSamples":
        scores = np.asarray(scores, dtype=float).ravel()
        return cls(scores, np.ones_like(scores))

    def __len__(self):
        return len(self.scores)


def _as_samples(x) -> WeightedSamples:
    return x if isinstance(x, WeightedSamples) else WeightedSamples.unit(x)


def roc_auc(positives, negatives) -> float:
    """Weighted Mann-Whitney AUC; tied positive/negative pairs count one half.

    Accepts :class:`WeightedSamples` or plain score arrays (unit weights).
    """
    pos, neg = _as_samples(positives), _as_samples(negatives)
    if not len(pos) or not len(neg):
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    values, inverse = np.unique(np.concatenate([pos.scores, neg.scores]), return_inverse=True)
    n_pos = len(pos)
    w_pos = np.bincount(inverse[:n_pos], weights=pos.weights, minlength=len(values))
    w_neg = np.bincount(inverse[n_pos:], weights=neg.weights, minlength=len(values))
    neg_below = np.cumsum(w_neg) - w_neg
    wins = np.dot(w_pos, neg_below + 0.5 * w_neg)
    return float(wins / (pos.weights.sum() * neg.weights.sum()))


def pool_negatives(explicit, complementary, mode: str = "balanced") -> WeightedSamples:
    """Merge explicit and complementary negative scores.

    ``balanced`` gives each non-empty source half of the total weight (all of
    it if the other source is empty); ``pooled`` uses unit weights.
    """
    explicit = np.asarray(explicit, dtype=float).ravel()
    complementary = np.asarray(complementary, dtype=float).ravel()
    if not len(explicit) and not len(complementary):
        raise UndefinedMetricError("no negatives to pool")
    scores = np.concatenate([explicit, complementary])
    if mode == "pooled":
        return WeightedSamples.unit(scores)
    if mode != "balanced":
        raise ValidationError(f"unknown pooling mode {mode!r}")
    share = 1.0 if not len(explicit) or not len(complementary) else 0.5
    weights = np.concatenate([
        np.full(len(explicit), share / len(explicit)) if len(explicit) else np.empty(0),
        np.full(len(complementary), share / len(complementary)) if len(complementary) else np.empty(0),
    ])
    return WeightedSamples(scores, weights)


class LwlrapResult(NamedTuple):
    overall: float
    per_class: np.ndarray  # NaN where a class has no scored positives
    weights: np.ndarray  # share of positive occurrences per class; sums to 1


def lwlrap(scores, truth, chunk: int = 4096) -> LwlrapResult:
    """Label-weighted label-ranking average precision.

    ``scores`` is (units, classes); NaN marks a missing score and removes that
    entry from ranking. For each positive (unit, class) the precision is the
    fraction of positives among the classes scored at least as high; each
    class's mean precision is weighted by its share of positive occurrences.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape or scores.ndim != 2:
        raise ValidationError(f"scores {scores.shape} and truth {truth.shape} must be equal 2-D shapes")
    units, classes = np.nonzero(truth & ~np.isnan(scores))
    if not len(units):
        raise UndefinedMetricError("lwlrap needs at least one scored positive")

    precision = np.empty(len(units))
    for lo in range(0, len(units), chunk):
        u, c = units[lo:lo + chunk], classes[lo:lo + chunk]
        rows = scores[u]
        at_or_above = rows >= scores[u, c][:, None]
        rank = at_or_above.sum(axis=1)
        hits = (at_or_above & truth[u]).sum(axis=1)
        precision[lo:lo + chunk] = hits / rank

    n_classes = scores.shape[1]
    counts = np.bincount(classes, minlength=n_classes)
    sums = np.bincount(classes, weights=precision, minlength=n_classes)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(counts > 0, sums / counts, np.nan)
    weights = counts / counts.sum()
    return LwlrapResult(float(precision.mean()), per_class, weights)


# ---------------------------------------------------------------------------
# label/score tables

_POLARITY_TOKENS = {
    FramePolarity.POSITIVE: "POS",
    FramePolarity.COMPLEMENTARY_NEGATIVE: "COMP_NEG",
    FramePolarity.EXPLICIT_NEGATIVE: "EXP_NEG",
    Polarity.PRESENT: "POS",
    Polarity.NEGATIVE: "EXP_NEG",
}


def label_table(labels) -> pd.DataFrame:
    """Normalise labels to a frame with columns unit_id, class_id, polarity (POS/COMP_NEG/EXP_NEG)."""
    if isinstance(labels, pd.DataFrame):
        df = labels[["unit_id", "class_id", "polarity"]].copy()
        df["polarity"] = df["polarity"].map(lambda p: _POLARITY_TOKENS.get(p, p))
    else:
        items = labels.items() if isinstance(labels, Mapping) else labels
        df = pd.DataFrame(
            [(u, c, _POLARITY_TOKENS.get(p, p)) for (u, c), p in items],
            columns=["unit_id", "class_id", "polarity"],
        )
    bad = set(df["polarity"]) - {"POS", "COMP_NEG", "EXP_NEG"}
    if bad:
        raise ValidationError(f"unknown polarity values {sorted(map(str, bad))}")
    if df.duplicated(["unit_id", "class_id"]).any():
        raise ValidationError("label table has more than one polarity per (unit, class)")
    return df


def weak_label_table(corpus: Corpus) -> pd.DataFrame:
    """Clip-level labels keyed by segment id: present -> POS, negative -> EXP_NEG."""
    return label_table({(a.clip.segment_id, a.class_id): a.polarity for a in corpus.weak})


def score_table(scores) -> pd.DataFrame:
    if isinstance(scores, pd.DataFrame):
        df = scores[["unit_id", "class_id", "score"]].copy()
    else:
        items = scores.items() if isinstance(scores, Mapping) else scores
        df = pd.DataFrame([(u, c, s) for (u, c), s in items], columns=["unit_id", "class_id", "score"])
    df["score"] = df["score"].astype(float)
    if not np.all(np.isfinite(df["score"].to_numpy())):
        raise ValidationError("score table contains non-finite scores")
    if df.duplicated(["unit_id", "class_id"]).any():
        raise ValidationError("score table has more than one score per (unit, class)")
    return df


def clip_level_scores(scores: pd.DataFrame) -> pd.DataFrame:
    """Average frame scores (unit ids ``segment_id:frame``) over each clip."""
    df = score_table(scores)
    df["unit_id"] = df["unit_id"].str.rsplit(":", n=1).str[0]
    return df.groupby(["unit_id", "class_id"], as_index=False, sort=True)["score"].mean()


@dataclass
class EvalReport:
    per_class: dict[str, dict]
    macro: dict
    excluded: list[dict]
    counts: dict
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "meta": self.meta,
            "macro": self.macro,
            "counts": self.counts,
            "excluded": self.excluded,
            "per_class": self.per_class,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def evaluate(
    scores,
    labels,
    negatives: str = "balanced",
    eps: float = AUC_CLAMP_EPS,
) -> EvalReport:
    """Per-class AUC and d-prime, unweighted macro d-prime, and lwlrap.

    ``labels`` maps (unit, class) to a polarity; labelled pairs without a
    score are reported as missing and left out of every statistic.
    """
    lab = label_table(labels)
    sc = score_table(scores)
    merged = lab.merge(sc, on=["unit_id", "class_id"], how="left")
    missing = merged["score"].isna()
    scored = merged[~missing]

    per_class: dict[str, dict] = {}
    excluded = []
    for cid, group in merged.groupby("class_id", sort=True):
        ok = group[group["score"].notna()]
        pos = ok.loc[ok["polarity"] == "POS", "score"].to_numpy()
        exp = ok.loc[ok["polarity"] == "EXP_NEG", "score"].to_numpy()
        comp = ok.loc[ok["polarity"] == "COMP_NEG", "score"].to_numpy()
        row = {
            "n_pos": int(len(pos)),
            "n_exp_neg": int(len(exp)),
            "n_comp_neg": int(len(comp)),
            "n_missing": int(group["score"].isna().sum()),
            "auc": None,
            "dprime": None,
        }
        if not len(pos) or not (len(exp) + len(comp)):
            excluded.append({"class_id": cid, "reason": "no positives" if not len(pos) else "no negatives"})
        else:
            auc = roc_auc(pos, pool_negatives(exp, comp, negatives))
            row["auc"] = auc
            row["dprime"] = dprime(auc, eps)
        per_class[cid] = row

    evaluated = [r for r in per_class.values() if r["dprime"] is not None]
    if not evaluated:
        raise UndefinedMetricError("no class has both positives and negatives with scores")

    macro = {
        "dprime": float(np.mean([r["dprime"] for r in evaluated])),
        "auc": float(np.mean([r["auc"] for r in evaluated])),
        "classes_evaluated": len(evaluated),
        "lwlrap": None,
    }

    # lwlrap ranks every scored class of each unit that has at least one positive
    pos_units = sorted(scored.loc[scored["polarity"] == "POS", "unit_id"].unique())
    if pos_units:
        sub = sc[sc["unit_id"].isin(pos_units)]
        matrix = sub.pivot(index="unit_id", columns="class_id", values="score").reindex(pos_units)
        truth = np.zeros(matrix.shape, dtype=bool)
        col = {c: j for j, c in enumerate(matrix.columns)}
        row_idx = {u: i for i, u in enumerate(matrix.index)}
        pos_rows = scored[scored["polarity"] == "POS"]
        truth[pos_rows["unit_id"].map(row_idx).to_numpy(), pos_rows["class_id"].map(col).to_numpy()] = True
        result = lwlrap(matrix.to_numpy(), truth)
        macro["lwlrap"] = result.overall
        for cid, j in col.items():
            if result.weights[j] > 0:
                entry = per_class.setdefault(cid, {})
                entry["lwlrap"] = _finite_or_none(result.per_class[j])
                entry["lwlrap_weight"] = float(result.weights[j])
        macro["lwlrap_units"] = len(pos_units)

    counts = {
        "label_rows": int(len(lab)),
        "score_rows": int(len(sc)),
        "missing_scores": int(missing.sum()),
        "missing_units": int(merged.loc[missing, "unit_id"].nunique()),
        "unlabelled_score_rows": int(len(sc) - len(scored)),
        "units": int(lab["unit_id"].nunique()),
    }
    meta = {
        "negatives": negatives,
        "auc_clamp_eps": eps,
        "macro_aggregation": "unweighted mean over classes with positives and negatives",
    }
    return EvalReport(per_class, macro, excluded, counts, meta)
