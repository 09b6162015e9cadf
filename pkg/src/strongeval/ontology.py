"""AudioSet-style class ontology: loading, ancestor queries, label smearing
and collapsing of the music subtree onto a single class.

The published ontology file is a JSON array of objects with at least
``id``, ``name`` and ``child_ids`` keys; other keys are ignored.
"""
from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType

from .config import MUSIC_MID
from .errors import ParseError, UnknownClassError, ValidationError


@dataclass(frozen=True)
class ClassNode:
    id: str
    name: str
    child_ids: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class Ontology:
    nodes: Mapping[str, ClassNode]
    parent_index: Mapping[str, tuple[str, ...]] = field(repr=False)

    @classmethod
    def from_nodes(cls, nodes: Iterable[ClassNode]) -> "Ontology":
        by_id: dict[str, ClassNode] = {}
        for node in nodes:
            if not node.id:
                raise ValidationError("class node with empty id")
            if node.id in by_id:
                raise ValidationError(f"duplicate class id {node.id!r}")
            by_id[node.id] = node

        parents: dict[str, list[str]] = {cid: [] for cid in by_id}
        for node in by_id.values():
            for child in node.child_ids:
                if child not in by_id:
                    raise ValidationError(f"class {node.id!r} lists unknown child id {child!r}")
                if node.id not in parents[child]:
                    parents[child].append(node.id)

        _check_acyclic(by_id)
        return cls(
            nodes=MappingProxyType(by_id),
            parent_index=MappingProxyType({k: tuple(v) for k, v in parents.items()}),
        )

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, class_id):
        return class_id in self.nodes

    def _require(self, class_id):
        if class_id not in self.nodes:
            raise UnknownClassError(class_id)

    def name(self, class_id: str) -> str:
        self._require(class_id)
        return self.nodes[class_id].name

    def children(self, class_id: str) -> tuple[str, ...]:
        self._require(class_id)
        return self.nodes[class_id].child_ids

    def parents(self, class_id: str) -> tuple[str, ...]:
        self._require(class_id)
        return self.parent_index[class_id]

    def roots(self) -> list[str]:
        return sorted(cid for cid, ps in self.parent_index.items() if not ps)

    def ancestors(self, class_id: str) -> frozenset[str]:
        self._require(class_id)
        return _ancestors(self, class_id)

    def descendants(self, class_id: str) -> frozenset[str]:
        self._require(class_id)
        seen: set[str] = set()
        stack = list(self.nodes[class_id].child_ids)
        while stack:
            cid = stack.pop()
            if cid not in seen:
                seen.add(cid)
                stack.extend(self.nodes[cid].child_ids)
        return frozenset(seen)

    def id_for_name(self, name: str) -> str:
        hits = [n.id for n in self.nodes.values() if n.name == name]
        if len(hits) != 1:
            raise UnknownClassError(name)
        return hits[0]


# Ontology is immutable and hashed by identity, so memoising on (ontology, id) is safe.
@lru_cache(maxsize=65536)
def _ancestors(ontology: Ontology, class_id: str) -> frozenset[str]:
    out: set[str] = set()
    for parent in ontology.parent_index[class_id]:
        out.add(parent)
        out |= _ancestors(ontology, parent)
    return frozenset(out)


def _check_acyclic(nodes: Mapping[str, ClassNode]) -> None:
    # iterative three-colour DFS; recursion depth is unbounded on hostile input
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(nodes, WHITE)
    for start in nodes:
        if colour[start] != WHITE:
            continue
        colour[start] = GREY
        stack = [(start, iter(nodes[start].child_ids))]
        while stack:
            cid, children = stack[-1]
            for child in children:
                if colour[child] == GREY:
                    raise ValidationError(f"cycle in ontology through {cid!r} -> {child!r}")
                if colour[child] == WHITE:
                    colour[child] = GREY
                    stack.append((child, iter(nodes[child].child_ids)))
                    break
            else:
                colour[cid] = BLACK
                stack.pop()


def load_ontology(document: str, source=None) -> Ontology:
    """Parse ontology JSON text into an :class:`Ontology`."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno, source=source) from None
    if not isinstance(data, list):
        raise ParseError("ontology document must be a JSON array", source=source)

    nodes = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise ParseError(f"entry {i} is not an object", source=source)
        missing = [k for k in ("id", "name", "child_ids") if k not in item]
        if missing:
            raise ParseError(f"entry {i} is missing {', '.join(missing)}", source=source)
        if not isinstance(item["child_ids"], list):
            raise ParseError(f"entry {i} has non-list child_ids", source=source)
        nodes.append(ClassNode(str(item["id"]), str(item["name"]), tuple(map(str, item["child_ids"]))))
    return Ontology.from_nodes(nodes)


def ancestors(ontology: Ontology, class_id: str) -> frozenset[str]:
    return ontology.ancestors(class_id)


def smear_labels(labels: Iterable[str], ontology: Ontology) -> frozenset[str]:
    """Add every ontology ancestor of every label. Multi-parent nodes smear through all parents."""
    out: set[str] = set()
    for label in labels:
        out.add(label)
        out |= ontology.ancestors(label)
    return frozenset(out)


def collapse_music(labels: Iterable[str], ontology: Ontology, music_id: str = MUSIC_MID) -> frozenset[str]:
    """Replace the music class and everything beneath it by ``music_id``."""
    ontology._require(music_id)
    out: set[str] = set()
    for label in labels:
        if label == music_id or music_id in ontology.ancestors(label):
            out.add(music_id)
        else:
            out.add(label)
    return frozenset(out)
