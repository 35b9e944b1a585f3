"""Product states, state sets and the orthogonality primitives.

A state set is a list of mutually orthogonal product states over a fixed
system signature.  Local vectors are stored as normalized complex numpy
arrays; everything here is immutable once constructed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np


class StateSetError(ValueError):
    """Raised when a state-set document or construction is invalid."""


class OrthogonalityError(StateSetError):
    """Two states of a set are not orthogonal in any partite."""

    def __init__(self, i: int, j: int, magnitude: float, labels: tuple[str, str]):
        self.pair = (i, j)
        self.magnitude = magnitude
        super().__init__(
            f"states {i + 1} and {j + 1} ({labels[0]}, {labels[1]}) are not orthogonal: "
            f"|<phi_{i + 1}|phi_{j + 1}>| = {magnitude:.6g}"
        )


@dataclass(frozen=True)
class Tolerance:
    orth: float = 1e-9
    norm: float = 1e-9
    prob: float = 1e-9

    def __post_init__(self):
        for name in ("orth", "norm", "prob"):
            value = getattr(self, name)
            if not 0 < value < 1e-3:
                raise StateSetError(f"tolerance {name}={value} must lie in (0, 1e-3)")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class Partite:
    name: str
    dim: int


@dataclass(frozen=True)
class SystemSignature:
    partites: tuple[Partite, ...]

    def __post_init__(self):
        if len(self.partites) < 2:
            raise StateSetError("a system needs at least 2 partites")
        names = [p.name for p in self.partites]
        if len(set(names)) != len(names):
            raise StateSetError(f"partite names must be unique, got {names}")
        for p in self.partites:
            if int(p.dim) != p.dim or p.dim < 2:
                raise StateSetError(f"partite {p.name!r} has invalid dimension {p.dim}")

    @classmethod
    def of(cls, *dims: int, names: Sequence[str] | None = None) -> "SystemSignature":
        if names is None:
            names = [chr(ord("A") + k) if k < 26 else f"P{k}" for k in range(len(dims))]
        return cls(tuple(Partite(n, int(d)) for n, d in zip(names, dims)))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p.dim for p in self.partites)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.partites)

    def __len__(self):
        return len(self.partites)


def as_vector(amplitudes) -> np.ndarray:
    """Coerce a list of amplitudes to a read-only complex vector.

    Each amplitude may be a number or an ``[re, im]`` pair.
    """
    vals = []
    for a in amplitudes:
        if isinstance(a, (list, tuple)):
            if len(a) != 2:
                raise StateSetError(f"amplitude {a!r} is not an [re, im] pair")
            vals.append(complex(float(a[0]), float(a[1])))
        else:
            vals.append(complex(a))
    v = np.asarray(vals, dtype=complex)
    v.setflags(write=False)
    return v


def normalize(v, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n < tol.norm:
        raise StateSetError("cannot normalize a zero vector")
    out = v / n
    out.setflags(write=False)
    return out


def inner_product(v, w) -> complex:
    """<v|w>, conjugate-linear in the first argument."""
    v = np.asarray(v)
    w = np.asarray(w)
    if v.shape != w.shape:
        raise ValueError(f"length mismatch: {v.shape[0]} vs {w.shape[0]}")
    return complex(np.vdot(v, w))


@dataclass(frozen=True, eq=False)
class ProductState:
    label: str
    locals: tuple[np.ndarray, ...]

    def __eq__(self, other):
        if not isinstance(other, ProductState):
            return NotImplemented
        return (
            self.label == other.label
            and len(self.locals) == len(other.locals)
            and all(a.shape == b.shape and np.allclose(a, b, rtol=0, atol=1e-12)
                    for a, b in zip(self.locals, other.locals))
        )

    __hash__ = None


def global_overlap(s: ProductState, t: ProductState) -> complex:
    out = 1.0 + 0j
    for v, w in zip(s.locals, t.locals):
        out *= inner_product(v, w)
    return out


def is_orthogonal_in_partite(s: ProductState, t: ProductState, partite: int,
                             tol: Tolerance = DEFAULT_TOL) -> bool:
    if not 0 <= partite < len(s.locals):
        raise IndexError(f"partite index {partite} out of range")
    return abs(inner_product(s.locals[partite], t.locals[partite])) < tol.orth


@dataclass(frozen=True, eq=False)
class StateSet:
    signature: SystemSignature
    states: tuple[ProductState, ...]
    tol: Tolerance = field(default=DEFAULT_TOL)

    def __post_init__(self):
        dims = self.signature.dims
        labels = [s.label for s in self.states]
        if len(set(labels)) != len(labels):
            raise StateSetError(f"state labels must be unique, got {labels}")
        for idx, s in enumerate(self.states):
            if len(s.locals) != len(dims):
                raise StateSetError(
                    f"state {s.label} has {len(s.locals)} locals, expected {len(dims)}")
            for p, (v, d) in enumerate(zip(s.locals, dims)):
                if v.shape != (d,):
                    raise StateSetError(
                        f"state {s.label}, partite {self.signature.names[p]}: "
                        f"length {v.shape[0]} != dim {d}")
                if abs(np.linalg.norm(v) - 1) >= self.tol.norm:
                    raise StateSetError(f"state {s.label} is not normalized in partite {p}")
        for i, j in combinations(range(len(self.states)), 2):
            ov = abs(global_overlap(self.states[i], self.states[j]))
            if ov >= self.tol.orth:
                raise OrthogonalityError(i, j, ov, (labels[i], labels[j]))

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i) -> ProductState:
        return self.states[i]

    def __eq__(self, other):
        if not isinstance(other, StateSet):
            return NotImplemented
        return self.signature == other.signature and self.states == other.states

    __hash__ = None

    @property
    def n_partites(self) -> int:
        return len(self.signature)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.states]

    def local(self, state: int, partite: int) -> np.ndarray:
        return self.states[state].locals[partite]

    @cached_property
    def orth_table(self) -> np.ndarray:
        """Boolean array ``[partite, i, j]``: locals of i and j orthogonal in that partite."""
        n = len(self.states)
        table = np.zeros((self.n_partites, n, n), dtype=bool)
        for p in range(self.n_partites):
            mat = np.array([s.locals[p] for s in self.states]) if n else np.zeros((0, 1))
            gram = np.abs(mat.conj() @ mat.T) if n else np.zeros((0, 0))
            table[p] = gram < self.tol.orth
        table.setflags(write=False)
        return table

    def orthogonal_in(self, i: int, j: int, partite: int) -> bool:
        if not 0 <= partite < self.n_partites:
            raise IndexError(f"partite index {partite} out of range")
        return bool(self.orth_table[partite, i, j])

    def witnesses(self, i: int, j: int) -> frozenset[int]:
        """Partites in which states i and j are orthogonal."""
        return frozenset(p for p in range(self.n_partites) if self.orth_table[p, i, j])

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no state labelled {label!r}") from None

    def subset(self, indices: Iterable[int]) -> "StateSet":
        return StateSet(self.signature, tuple(self.states[i] for i in indices), self.tol)


def make_state_set(dims: Sequence[int], states: Sequence[Sequence], labels: Sequence[str] | None = None,
                   names: Sequence[str] | None = None, tol: Tolerance = DEFAULT_TOL) -> StateSet:
    """Build a StateSet from (possibly unnormalized) amplitude lists."""
    sig = SystemSignature.of(*dims, names=names)
    if labels is None:
        labels = [f"phi{k + 1}" for k in range(len(states))]
    prods = []
    for label, locs in zip(labels, states):
        if len(locs) != len(dims):
            raise StateSetError(f"state {label} has {len(locs)} locals, expected {len(dims)}")
        vecs = []
        for p, amps in enumerate(locs):
            v = as_vector(amps)
            if v.shape != (dims[p],):
                raise StateSetError(
                    f"state {label}, partite {sig.names[p]}: length {v.shape[0]} != dim {dims[p]}")
            vecs.append(normalize(v, tol))
        prods.append(ProductState(label, tuple(vecs)))
    return StateSet(sig, tuple(prods), tol)


def parse_state_set(document: str | dict, tol: Tolerance = DEFAULT_TOL) -> StateSet:
    """Parse the JSON state-set format; amplitudes are normalized on ingest."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise StateSetError(f"malformed JSON: {exc}") from exc
    else:
        doc = document
    try:
        partites = doc["partites"]
        raw_states = doc["states"]
        names = [str(p["name"]) for p in partites]
        dims = [int(p["dim"]) for p in partites]
    except (KeyError, TypeError, ValueError) as exc:
        raise StateSetError(f"malformed state-set document: {exc!r}") from exc
    labels, locs = [], []
    for k, st in enumerate(raw_states):
        if not isinstance(st, dict) or "locals" not in st:
            raise StateSetError(f"state #{k + 1} has no 'locals'")
        labels.append(str(st.get("label", f"phi{k + 1}")))
        locs.append(st["locals"])
    return make_state_set(dims, locs, labels=labels, names=names, tol=tol)


def state_set_to_dict(s: StateSet) -> dict:
    return {
        "partites": [{"name": p.name, "dim": p.dim} for p in s.signature.partites],
        "states": [
            {"label": st.label,
             "locals": [[[float(a.real), float(a.imag)] for a in v] for v in st.locals]}
            for st in s.states
        ],
    }


def serialize_state_set(s: StateSet) -> str:
    return json.dumps(state_set_to_dict(s), indent=1)



def fixture(name: str) -> StateSet:
    """Built-in state sets: the 3x3 domino basis and the four-state tripartite set."""
    if name == "domino":
        # |0>,|1>,|2> and the +/- superpositions used by the domino tiles
        e0, e1, e2 = [1, 0, 0], [0, 1, 0], [0, 0, 1]
        states = [
            [e0, [1, 1, 0]],
            [e0, [1, -1, 0]],
            [[1, 1, 0], e2],
            [[1, -1, 0], e2],
            [e2, [0, 1, 1]],
            [e2, [0, 1, -1]],
            [[0, 1, 1], e0],
            [[0, 1, -1], e0],
            [e1, e1],
        ]
        return make_state_set([3, 3], states)
    if name == "lemma2":
        z, o, p, m = [1, 0], [0, 1], [1, 1], [1, -1]
        states = [
            [z, z, z],
            [o, m, p],
            [p, p, o],
            [m, p, o],
        ]
        return make_state_set([2, 2, 2], states)
    raise KeyError(f"unknown fixture {name!r}; expected 'domino' or 'lemma2'")


FIXTURES = ("domino", "lemma2")
