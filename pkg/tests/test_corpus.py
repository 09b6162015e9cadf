from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import clip, seg, strong_corpus, weak_corpus
from strongeval.corpus import (
    ClipId,
    CorpusKind,
    Polarity,
    build_diffuse,
    class_priors,
    decode_segment_id,
    mean_labels_per_clip,
    merge_class_segments,
    parse_strong_tsv,
    parse_weak_csv,
    select_balanced_subset,
    write_strong_tsv,
    write_weak_csv,
)
from strongeval.errors import ParseError, UndefinedMetricError, ValidationError

WEAK_CSV = """\
# Segments csv created Sun Mar  5 10:54:31 2017
# num_ytids=3, num_segs=3, num_unique_labels=4, num_positive_labels=5
# YTID, start_seconds, end_seconds, positive_labels
abc, 30.000, 40.000, "/m/09x0r"
--PJHxphWEs, 30.000, 40.000, "/m/09x0r,/t/dd00088,/m/04rlf"
short_clip, 0.000, 6.500, "/m/0k4j"
"""

STRONG_TSV = "segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nabc_30000\t1.2\t3.4\t/m/09x0r\n"


def test_parse_weak_rows():
    corpus = parse_weak_csv(WEAK_CSV)
    assert corpus.kind is CorpusKind.WEAK
    assert len(corpus.clips) == 3
    pos = corpus.positives_by_clip()
    assert pos[ClipId("abc", 30.0)] == {"/m/09x0r"}
    assert pos[ClipId("--PJHxphWEs", 30.0)] == {"/m/09x0r", "/t/dd00088", "/m/04rlf"}
    assert all(a.polarity is Polarity.PRESENT for a in corpus.weak)
    short = next(c for c in corpus.clips if c.ytid == "short_clip")
    assert short.duration == 6.5


def test_parse_weak_comment_only():
    assert len(parse_weak_csv("# YTID, start_seconds, end_seconds, positive_labels\n").clips) == 0


def test_parse_weak_polarity_column():
    text = 'abc, 30.000, 40.000, "/m/09x0r", present\nabc, 30.000, 40.000, "/m/04rlf,/m/0k4j", negative\n'
    corpus = parse_weak_csv(text)
    assert corpus.negatives_by_clip() == {ClipId("abc", 30.0): {"/m/04rlf", "/m/0k4j"}}
    assert corpus.positives_by_clip()[ClipId("abc", 30.0)] == {"/m/09x0r"}


@pytest.mark.parametrize("text, line", [
    ('abc, 30.000, forty, "/m/09x0r"\n', 1),
    ('# c\nabc, 30.000, 40.000, ""\n', 2),
    ('abc, 30.000, 40.000, "/m/09x0r", maybe\n', 1),
])
def test_parse_weak_errors(text, line):
    with pytest.raises(ParseError) as err:
        parse_weak_csv(text)
    assert err.value.line == line


def test_parse_weak_duplicates_counted():
    text = 'abc, 30.000, 40.000, "/m/09x0r,/m/09x0r"\nabc, 30.000, 40.000, "/m/09x0r"\n'
    corpus = parse_weak_csv(text)
    assert len(corpus.weak) == 1
    assert corpus.warnings["duplicate_label"] == 2


def test_parse_weak_polarity_conflict():
    text = 'abc, 30.000, 40.000, "/m/09x0r"\nabc, 30.000, 40.000, "/m/09x0r", negative\n'
    with pytest.raises(ValidationError):
        parse_weak_csv(text)


def test_parse_strong_row():
    corpus = parse_strong_tsv(STRONG_TSV)
    (s,) = corpus.strong
    assert s.clip == ClipId("abc", 30.0) and s.clip.end_s == 40.0
    assert (s.start_s, s.end_s, s.class_id) == (1.2, 3.4, "/m/09x0r")


def test_parse_strong_header_only_and_full_clip():
    assert len(parse_strong_tsv("segment_id\tstart_time_seconds\tend_time_seconds\tlabel\n").clips) == 0
    corpus = parse_strong_tsv("x_0\t0.0\t10.0\t/m/a\n")
    assert corpus.strong[0].duration == 10.0


def test_parse_strong_end_before_start():
    with pytest.raises(ValidationError, match="line 2"):
        parse_strong_tsv("segment_id\tstart_time_seconds\tend_time_seconds\tlabel\nx_0\t3.0\t3.0\t/m/a\n")


def test_parse_strong_clamps_and_rejects():
    corpus = parse_strong_tsv("x_0\t-0.02\t4.0\t/m/a\nx_0\t9.0\t10.013\t/m/b\n")
    assert [(s.start_s, s.end_s) for s in corpus.strong] == [(0.0, 4.0), (9.0, 10.0)]
    assert corpus.warnings["clamped"] == 2
    with pytest.raises(ValidationError, match="outside"):
        parse_strong_tsv("x_0\t10.5\t11.0\t/m/a\n")


def test_parse_strong_uses_durations():
    corpus = parse_strong_tsv("x_0\t5.0\t8.0\t/m/a\n", durations={"x_0": 6.5})
    assert corpus.strong[0].end_s == 6.5


def test_parse_strong_bad_segment_id():
    with pytest.raises(ParseError):
        parse_strong_tsv("nounderscore\t1.0\t2.0\t/m/a\n")


@pytest.mark.parametrize("sid, expected", [("abc_30000", ("abc", 30.0)), ("a_b_0", ("a_b", 0.0)),
                                           ("-_x_yz_123450", ("-_x_yz", 123.45))])
def test_decode_segment_id(sid, expected):
    assert decode_segment_id(sid) == expected


@pytest.mark.parametrize("sid", ["abc", "abc_", "_123", "abc_12.5", "abc_-5"])
def test_decode_segment_id_errors(sid):
    with pytest.raises(ParseError):
        decode_segment_id(sid)


def test_clip_join_ignores_end():
    assert ClipId("abc", 30.0, 40.0) == ClipId("abc", 30.0, 38.5)
    assert ClipId("abc", 30.0).segment_id == "abc_30000"
    with pytest.raises(ValidationError):
        ClipId("abc", 30.0, 41.0)


def test_round_trip_strong():
    c = clip()
    corpus = strong_corpus([seg(c, "/m/a", 1.2345, 3.4), seg(c, "/m/b", 0.0, 10.0), seg(clip("q_x"), "/m/a", 2.0, 2.5)])
    again = parse_strong_tsv(write_strong_tsv(corpus))
    assert again == corpus
    assert again.strong == corpus.strong
    assert "\t1.2345\t" in write_strong_tsv(corpus) and "\t3.400\t" in write_strong_tsv(corpus)


def test_round_trip_weak():
    corpus = parse_weak_csv(WEAK_CSV + 'abc, 30.000, 40.000, "/m/0k4j", negative\n')
    again = parse_weak_csv(write_weak_csv(corpus))
    assert set(again.weak) == set(corpus.weak) and again.clips == corpus.clips


def merge_oracle_ms(spans):
    timeline = np.zeros(10_001, dtype=bool)
    for lo, hi in spans:
        timeline[round(lo * 1000):round(hi * 1000)] = True
    return int(timeline.sum())


@pytest.mark.parametrize("spans, expected", [
    ([(1, 3), (2, 4)], [(1, 4)]),
    ([(1, 2), (3, 4)], [(1, 2), (3, 4)]),
    ([(0, 1), (1, 2), (0.5, 3)], [(0, 3)]),
    ([(1, 2), (2, 3)], [(1, 3)]),
    ([], []),
])
def test_merge_examples(spans, expected):
    c = clip()
    merged = merge_class_segments([seg(c, "k", lo, hi) for lo, hi in spans])
    assert [(s.start_s, s.end_s) for s in merged] == expected


def test_merge_rejects_mixed_classes():
    c = clip()
    with pytest.raises(ValidationError):
        merge_class_segments([seg(c, "a", 0, 1), seg(c, "b", 2, 3)])


ms_spans = st.lists(
    st.tuples(st.integers(0, 9999), st.integers(1, 3000)).map(lambda t: (t[0] / 1000, min(t[0] + t[1], 10000) / 1000)),
    max_size=8,
)


@settings(max_examples=200, deadline=None)
@given(ms_spans)
def test_merge_matches_timeline_oracle(spans):
    c = clip()
    merged = merge_class_segments([seg(c, "k", lo, hi) for lo, hi in spans])
    assert abs(sum(s.duration for s in merged) * 1000 - merge_oracle_ms(spans)) < 1e-6
    for a, b in zip(merged, merged[1:]):
        assert a.end_s < b.start_s


def test_build_diffuse():
    c, d = clip("a"), clip("b", 0.0, 8.0)
    strong = strong_corpus([seg(c, "C", 1, 2), seg(c, "C", 5, 6), seg(d, "X", 1, 2), seg(d, "Y", 3, 4)])
    diffuse = build_diffuse(strong)
    assert diffuse.kind is CorpusKind.DIFFUSE
    assert sorted((s.clip.ytid, s.class_id, s.start_s, s.end_s) for s in diffuse.strong) == [
        ("a", "C", 0.0, 10.0), ("b", "X", 0.0, 8.0), ("b", "Y", 0.0, 8.0)]
    assert diffuse.positives_by_clip() == strong.positives_by_clip()
    assert len(build_diffuse(strong_corpus([])).strong) == 0
    with pytest.raises(ValidationError):
        build_diffuse(diffuse)


def test_class_priors():
    assert class_priors(weak_corpus({clip(): ["c"]}))["c"] == 1.0
    labels = {clip(f"v{i}"): (["c"] if i < 250 else ["other"]) for i in range(67000)}
    priors = class_priors(weak_corpus(labels))
    assert priors["c"] == pytest.approx(250 / 67000)
    assert round(priors["c"], 4) == 0.0037
    assert priors["never_seen"] == 0.0
    with pytest.raises(UndefinedMetricError):
        class_priors(weak_corpus({}))


def test_mean_labels_per_clip():
    corpus = weak_corpus({clip("a"): ["x", "y", "z"], clip("b"): ["x"]})
    assert mean_labels_per_clip(corpus) == 2.0


def test_balanced_single_label():
    labels = {clip(f"{cls}{i}"): [cls] for cls in "abc" for i in range(300)}
    chosen = select_balanced_subset(weak_corpus(labels), 250, seed=1)
    assert Counter(c.ytid[0] for c in chosen) == {"a": 250, "b": 250, "c": 250}


def test_balanced_exhausts_rare_class():
    labels = {clip(f"r{i}"): ["rare"] for i in range(100)}
    labels.update({clip(f"f{i}"): ["freq"] for i in range(400)})
    chosen = select_balanced_subset(weak_corpus(labels), 250, seed=2)
    assert sum(c.ytid.startswith("r") for c in chosen) == 100
    assert sum(c.ytid.startswith("f") for c in chosen) == 250


def test_balanced_co_occurrence():
    labels = {clip(f"v{i}"): ["x", "y"] for i in range(400)}
    chosen = select_balanced_subset(weak_corpus(labels), 250, seed=3)
    assert len(chosen) == 250


def test_balanced_deterministic_and_bounds():
    rng = np.random.default_rng(0)
    classes = [f"k{i}" for i in range(12)]
    labels = {clip(f"v{i}"): list(rng.choice(classes, size=rng.integers(1, 4), replace=False)) for i in range(900)}
    corpus = weak_corpus(labels)
    a = select_balanced_subset(corpus, 40, seed=7)
    assert a == select_balanced_subset(corpus, 40, seed=7)
    assert a != select_balanced_subset(corpus, 40, seed=8)
    avail = Counter(cid for cids in labels.values() for cid in cids)
    got = Counter(cid for c in a for cid in labels[c])
    for cid in classes:
        assert got[cid] >= min(40, avail[cid])
    with pytest.raises(ValidationError):
        select_balanced_subset(corpus, 0, seed=0)
