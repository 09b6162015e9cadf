import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import clip, seg, strong_corpus, weak_corpus
from strongeval.analysis import (
    Contingency2x2,
    contingency_table,
    cross_label_odds,
    odds_ratio,
    odds_table,
    positive_instances,
    priors_scatter,
)
from strongeval.errors import UndefinedMetricError, ValidationError


def engineered(a, b, c, d, cond="S", out="M"):
    """Weak/strong corpora on a+b+c+d shared clips realising the given 2x2 table."""
    weak, segs, i = {}, [], 0
    for has_cond, has_out, n in ((1, 1, a), (1, 0, b), (0, 1, c), (0, 0, d)):
        for _ in range(n):
            cl = clip(f"v{i:04d}", 0.0)
            i += 1
            weak[cl] = [cond] if has_cond else ["other"]
            segs.append(seg(cl, out if has_out else "filler", 1.0, 2.0))
    return weak_corpus(weak), strong_corpus(segs)


def test_odds_ratio_examples():
    assert odds_ratio(Contingency2x2(10, 5, 2, 20)) == 20.0
    assert odds_ratio(Contingency2x2(3, 0, 1, 10)) == pytest.approx(49.0)
    with pytest.raises(ValidationError):
        Contingency2x2(-1, 0, 0, 0)


cells = st.integers(0, 500)


@given(cells, cells, cells, cells)
def test_odds_ratio_inverse(a, b, c, d):
    fwd = odds_ratio(Contingency2x2(a, b, c, d))
    swapped = odds_ratio(Contingency2x2(b, a, d, c))
    assert fwd * swapped == pytest.approx(1.0, rel=1e-12)


@given(st.integers(1, 500), st.integers(1, 500), st.integers(1, 500), st.integers(1, 500), st.integers(1, 50))
def test_odds_ratio_scale_invariant(a, b, c, d, k):
    assert odds_ratio(Contingency2x2(k * a, k * b, k * c, k * d)) == pytest.approx(
        odds_ratio(Contingency2x2(a, b, c, d)), rel=1e-12)


def test_cross_label_odds_engineered():
    weak, strong = engineered(10, 5, 2, 20)
    table, n = contingency_table(weak, strong, ("weak", "S"), ("strong", "M"))
    assert (table.a, table.b, table.c, table.d, n) == (10, 5, 2, 20, 37)
    assert cross_label_odds(weak, strong, ("weak", "S"), ("strong", "M")) == 20.0
    # reversing the direction of the question leaves the OR unchanged
    assert cross_label_odds(weak, strong, ("strong", "M"), ("weak", "S")) == 20.0


def test_cross_label_odds_zero_cell():
    weak, strong = engineered(3, 0, 1, 10)
    assert cross_label_odds(weak, strong, ("weak", "S"), ("strong", "M")) == pytest.approx(49.0)


def test_unshared_clips_are_ignored():
    weak, strong = engineered(10, 5, 2, 20)
    extra = weak_corpus({clip("zz", 0.0): ["S"]})
    from strongeval.corpus import merge_corpora
    table, n = contingency_table(merge_corpora(weak, extra), strong, ("weak", "S"), ("strong", "M"))
    assert n == 37 and table.b == 5


def test_contingency_errors():
    weak, strong = engineered(1, 1, 1, 1)
    with pytest.raises(ValidationError):
        contingency_table(weak, strong, ("weird", "S"), ("strong", "M"))
    lone = weak_corpus({clip("nope", 0.0): ["S"]})
    with pytest.raises(UndefinedMetricError):
        contingency_table(lone, strong, ("weak", "S"), ("strong", "M"))


def test_odds_table_matches_pairwise_and_sorts():
    rng = np.random.default_rng(3)
    weak, segs = {}, []
    for i in range(120):
        cl = clip(f"r{i}", 0.0)
        weak[cl] = [f"w{j}" for j in range(4) if rng.random() < 0.4] or ["w9"]
        segs += [seg(cl, f"s{j}", 0.5, 1.5) for j in range(5) if rng.random() < 0.3] or [seg(cl, "s9", 0, 1)]
    W, S = weak_corpus(weak), strong_corpus(segs)
    rows, n = odds_table(W, S, "weak->strong", top_k=3)
    assert n == 120
    for r in rows:
        assert r.odds_ratio == pytest.approx(cross_label_odds(W, S, ("weak", r.condition_class), ("strong", r.outcome_class)))
        assert r.a + r.b + r.c + r.d == 120 and r.a >= 1
    by_cond = {}
    for r in rows:
        by_cond.setdefault(r.condition_class, []).append(r)
    for group in by_cond.values():
        assert len(group) <= 3
        assert [r.rank for r in group] == list(range(1, len(group) + 1))
        ors = [r.odds_ratio for r in group]
        assert ors == sorted(ors, reverse=True)

    back, _ = odds_table(W, S, "strong->weak", top_k=2, condition_classes=["s0"])
    assert {r.condition_class for r in back} == {"s0"} and len(back) <= 2
    strict, _ = odds_table(W, S, top_k=50, min_cooccur=10)
    assert all(r.a >= 10 for r in strict)


def test_odds_table_bad_arguments():
    weak, strong = engineered(1, 1, 1, 1)
    with pytest.raises(ValidationError):
        odds_table(weak, strong, "weak->weak")
    with pytest.raises(ValidationError):
        odds_table(weak, strong, "sideways")
    with pytest.raises(ValidationError):
        odds_table(weak, strong, top_k=0)


def test_priors_scatter():
    a, b = clip("a", 0.0), clip("b", 0.0)
    weak = weak_corpus({a: ["x", "y"], b: ["x"]})
    strong = strong_corpus([seg(a, "x", 0, 1), seg(a, "z", 0, 1)], extra_clips=[b])
    rows = {r.class_id: r for r in priors_scatter(weak, strong)}
    assert rows["x"].weak_prior == 1.0 and rows["x"].strong_prior == 0.5 and rows["x"].ratio == 0.5
    assert rows["y"].strong_prior == 0.0 and rows["y"].ratio == 0.0
    assert rows["z"].weak_prior == 0.0 and rows["z"].ratio is None
    assert [r.class_id for r in priors_scatter(weak, strong, classes=["q"])][-1] == "z"
    assert any(r.class_id == "q" for r in priors_scatter(weak, strong, classes=["q"]))


def test_priors_identical_labelling_ratio_one():
    clips = [clip(f"c{i}", 0.0) for i in range(6)]
    segs = [seg(c, "x", 0, 10) for c in clips[:4]] + [seg(c, "y", 0, 10) for c in clips[2:]]
    strong = strong_corpus(segs)
    weak = weak_corpus({c: sorted({s.class_id for s in segs if s.clip == c}) for c in clips})
    assert all(r.ratio == 1.0 for r in priors_scatter(weak, strong))
    assert positive_instances(weak) == positive_instances(strong) == 8
