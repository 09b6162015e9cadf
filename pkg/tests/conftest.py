import json

import pytest

from strongeval.corpus import ClipId, Corpus, CorpusKind, LabeledSegment, Polarity, WeakAnnotation
from strongeval.ontology import load_ontology


def clip(ytid="abc", start=30.0, dur=10.0):
    return ClipId(ytid, start, start + dur)


def seg(c, cls, start, end):
    return LabeledSegment(c, cls, start, end)


def strong_corpus(segments, extra_clips=()):
    clips = frozenset({s.clip for s in segments} | set(extra_clips))
    return Corpus(clips, strong=tuple(segments), kind=CorpusKind.STRONG)


def weak_corpus(labels, negatives=None):
    """``labels``: {ClipId: iterable of classes}; ``negatives`` likewise."""
    negatives = negatives or {}
    anns = [WeakAnnotation(c, cid) for c, cids in labels.items() for cid in cids]
    anns += [WeakAnnotation(c, cid, Polarity.NEGATIVE) for c, cids in negatives.items() for cid in cids]
    return Corpus(frozenset(labels) | frozenset(negatives), weak=tuple(anns), kind=CorpusKind.WEAK)


# a small slice of the released ontology shape: Music with instrument/genre
# children, Snake with Hiss/Rattle, and one multi-parent node
MINI_ONTOLOGY = [
    {"id": "/m/0dgw9r", "name": "Human sounds", "child_ids": ["/m/09x0r"]},
    {"id": "/m/09x0r", "name": "Speech", "child_ids": ["/m/05zppz", "/m/02zsn"], "description": "ignored"},
    {"id": "/m/05zppz", "name": "Male speech, man speaking", "child_ids": []},
    {"id": "/m/02zsn", "name": "Female speech, woman speaking", "child_ids": []},
    {"id": "/m/04rlf", "name": "Music", "child_ids": ["/m/04szw", "/m/0ggq0m"]},
    {"id": "/m/04szw", "name": "Musical instrument", "child_ids": ["/m/042v_gx"]},
    {"id": "/m/042v_gx", "name": "Acoustic guitar", "child_ids": []},
    {"id": "/m/0ggq0m", "name": "Music genre", "child_ids": ["/m/03_d0"]},
    {"id": "/m/03_d0", "name": "Jazz", "child_ids": []},
    {"id": "/m/078jl", "name": "Snake", "child_ids": ["/m/07qn4z3", "/m/07qn5dc"]},
    {"id": "/m/07qn4z3", "name": "Rattle", "child_ids": []},
    {"id": "/m/07qn5dc", "name": "Hiss", "child_ids": []},
    {"id": "/m/0k4j", "name": "Animal", "child_ids": ["/m/078jl"]},
    {"id": "/t/dd00041", "name": "Mechanisms", "child_ids": ["/m/07qn5dc"]},
]


@pytest.fixture
def mini_ontology():
    return load_ontology(json.dumps(MINI_ONTOLOGY))


# acceptance criteria report one line each; printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record(name: str, ok: bool | None, detail: str = "") -> bool:
    status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    line = f"{status}  {name}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
