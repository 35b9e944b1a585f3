"""Measurement trees: local projective measurements with per-branch candidate sets.

Internally state indices are 0-based and the completion outcome ("none of
the anchors") is ``REST`` (None).  The JSON form uses 1-based state indices
so that outcome key "0" is unambiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Union

from .states import StateSet

REST = None
DEFAULT_DEPTH_LIMIT = 8


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Measurement:
    """Measure ``partite`` in an orthonormal basis extended from the anchors' locals."""

    partite: int
    anchors: tuple[int, ...]

    def outcomes(self) -> tuple:
        return (REST,) + self.anchors

    def check(self, s: StateSet) -> "Measurement":
        if not 0 <= self.partite < s.n_partites:
            raise TreeError(f"partite {self.partite} out of range")
        dim = s.signature.dims[self.partite]
        if not 1 <= len(self.anchors) <= dim:
            raise TreeError(f"{len(self.anchors)} anchors for a partite of dimension {dim}")
        if len(set(self.anchors)) != len(self.anchors):
            raise TreeError(f"repeated anchors {self.anchors}")
        for a in self.anchors:
            if not 0 <= a < len(s):
                raise TreeError(f"anchor {a} out of range")
        for k, a in enumerate(self.anchors):
            for b in self.anchors[k + 1:]:
                if not s.orthogonal_in(a, b, self.partite):
                    raise TreeError(
                        f"anchors {a + 1} and {b + 1} are not orthogonal in partite "
                        f"{s.signature.names[self.partite]}")
        return self

    def describe(self, s: StateSet | None = None) -> str:
        name = s.signature.names[self.partite] if s is not None else str(self.partite)
        return f"{name}M_{{{','.join(str(a + 1) for a in self.anchors)}}}"


def measure(s: StateSet, partite: int, anchors) -> Measurement:
    return Measurement(partite, tuple(anchors)).check(s)


@dataclass(frozen=True)
class Leaf:
    candidates: tuple[int, ...]

    @property
    def depth(self) -> int:
        return 0

    @property
    def all_candidates(self) -> tuple[int, ...]:
        return self.candidates


@dataclass(frozen=True)
class Node:
    measurement: Measurement
    branches: tuple[tuple[object, "ProtocolTree"], ...]

    def __post_init__(self):
        keys = [k for k, _ in self.branches]
        if sorted(keys, key=outcome_key) != sorted(self.measurement.outcomes(), key=outcome_key):
            raise TreeError(f"branches {keys} do not cover outcomes {self.measurement.outcomes()}")

    def branch(self, outcome) -> "ProtocolTree":
        for k, sub in self.branches:
            if k == outcome:
                return sub
        raise KeyError(outcome)

    @property
    def depth(self) -> int:
        return 1 + max(sub.depth for _, sub in self.branches)

    @property
    def all_candidates(self) -> tuple[int, ...]:
        out: set[int] = set()
        for _, sub in self.branches:
            out.update(sub.all_candidates)
        return tuple(sorted(out))


ProtocolTree = Union[Leaf, Node]

EXCLUDE = "exclude"
FULL = "full"


@dataclass(frozen=True)
class SynthesisGoal:
    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in (EXCLUDE, FULL):
            raise ValueError(f"unknown goal kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @classmethod
    def exclude(cls, k: int) -> "SynthesisGoal":
        return cls(EXCLUDE, k)

    @classmethod
    def full(cls) -> "SynthesisGoal":
        return cls(FULL)

    def max_leaf_size(self, n_root: int) -> int:
        """Largest leaf candidate set that meets the goal from a root of ``n_root`` states."""
        if self.kind == FULL:
            return 1
        return n_root - self.k

    def __str__(self):
        return "full_distinguish" if self.kind == FULL else f"exclude_{self.k}"


def outcome_key(o) -> int:
    return -1 if o is REST else o


def make_node(m: Measurement, branches: dict) -> Node:
    return Node(m, tuple(sorted(branches.items(), key=lambda kv: outcome_key(kv[0]))))


def leaf(cands) -> Leaf:
    return Leaf(tuple(sorted(cands)))


def iter_nodes(tree: ProtocolTree) -> Iterator[Node]:
    if isinstance(tree, Node):
        yield tree
        for _, sub in tree.branches:
            yield from iter_nodes(sub)


def iter_leaves(tree: ProtocolTree) -> Iterator[Leaf]:
    if isinstance(tree, Leaf):
        yield tree
    else:
        for _, sub in tree.branches:
            yield from iter_leaves(sub)


def count_measurements(tree: ProtocolTree) -> int:
    return sum(1 for _ in iter_nodes(tree))


def tree_to_dict(tree: ProtocolTree) -> dict:
    if isinstance(tree, Leaf):
        return {"candidates": [c + 1 for c in tree.candidates]}
    m = tree.measurement
    return {
        "measure": {"partite": m.partite, "anchors": [a + 1 for a in m.anchors]},
        "branches": {("0" if k is REST else str(k + 1)): tree_to_dict(sub)
                     for k, sub in tree.branches},
    }


def tree_from_dict(doc: dict) -> ProtocolTree:
    try:
        if "candidates" in doc and "measure" not in doc:
            return leaf(int(c) - 1 for c in doc["candidates"])
        m = Measurement(int(doc["measure"]["partite"]),
                        tuple(int(a) - 1 for a in doc["measure"]["anchors"]))
        branches = {}
        for key, sub in doc["branches"].items():
            k = int(key)
            branches[REST if k == 0 else k - 1] = tree_from_dict(sub)
        return make_node(m, branches)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TreeError):
            raise
        raise TreeError(f"malformed protocol tree: {exc!r}") from exc


def serialize_tree(tree: ProtocolTree) -> str:
    return json.dumps(tree_to_dict(tree), indent=1)


def parse_tree(text: str) -> ProtocolTree:
    return tree_from_dict(json.loads(text))


def render_tree(tree: ProtocolTree, s: StateSet, indent: str = "") -> str:
    """Human-readable outline, one line per branch."""
    if isinstance(tree, Leaf):
        return indent + "-> {" + ", ".join(s.labels[c] for c in tree.candidates) + "}\n"
    out = indent + tree.measurement.describe(s) + "\n"
    for k, sub in tree.branches:
        tag = "0" if k is REST else str(k + 1)
        out += f"{indent}  [{tag}]\n" + render_tree(sub, s, indent + "    ")
    return out


__all__ = [
    "REST", "Measurement", "Leaf", "Node", "ProtocolTree", "TreeError", "measure", "leaf",
    "make_node", "tree_to_dict", "tree_from_dict", "serialize_tree", "parse_tree",
    "iter_nodes", "iter_leaves", "count_measurements", "render_tree", "outcome_key",
    "DEFAULT_DEPTH_LIMIT", "SynthesisGoal", "EXCLUDE", "FULL",
]
