"""Seeded generators of mutually orthogonal product state sets.

Families
--------
domino_like
    Random tiling of the computational-basis grid by dominoes and single
    cells; a domino along axis ``a`` gives the two states with ``|i +- i+1>``
    on that axis.  The result is an orthogonal product basis, which is then
    subsampled and rotated by random local unitaries.
clique_mix
    Plants an m-element orthonormal clique in partite 0 and colors every
    other pair with a random partite, never letting any partite grow a clique
    larger than m.
p4_forced
    Colors pairs so that no partite contains three mutually orthogonal
    locals.  With ``forbid_p4`` every partite's orthogonality graph is also
    P4-free (a star forest); for seven states that needs at least five
    partites.

Colorings are realized by orthogonal representations: each state's local
vector in partite p is a random vector orthogonal to the earlier states it
must be orthogonal to there.  Generic draws keep every other pair
non-orthogonal; the realized set is checked against the plan and redrawn
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .orthograph import find_patterns_in_relation, max_clique, TRIANGLE
from .states import ProductState, StateSet, SystemSignature, normalize

FAMILIES = ("domino_like", "clique_mix", "p4_forced")
MIN_OVERLAP = 1e-3
MAX_ATTEMPTS = 400
# R(3,3) and R(3,3,3): smallest complete graphs forcing a monochromatic triangle
TRIANGLE_RAMSEY = {2: 6, 3: 17}


class InfeasibleParams(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    partite_count: int
    dims: tuple[int, ...]
    n_states: int
    seed: int
    family: str
    clique: int | None = None
    forbid_p4: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.family not in FAMILIES:
            raise InfeasibleParams(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n_states < 2:
            raise InfeasibleParams("n_states must be >= 2")
        if len(self.dims) != self.partite_count:
            raise InfeasibleParams(f"{len(self.dims)} dims given for {self.partite_count} partites")
        if self.partite_count < 2 or min(self.dims) < 2:
            raise InfeasibleParams("need >= 2 partites of dimension >= 2")


def _rotate(vectors: list[list[np.ndarray]], dims, rng) -> list[list[np.ndarray]]:
    mats = [unitary_group.rvs(d, random_state=rng) for d in dims]
    return [[mats[p] @ v for p, v in enumerate(row)] for row in vectors]


def _to_state_set(vectors, dims, labels=None) -> StateSet:
    sig = SystemSignature.of(*dims)
    labels = labels or [f"phi{k + 1}" for k in range(len(vectors))]
    states = tuple(ProductState(lab, tuple(normalize(v) for v in row))
                   for lab, row in zip(labels, vectors))
    return StateSet(sig, states)


# -- domino tilings -----------------------------------------------------------

def _domino_tiling(dims, rng) -> list[tuple[tuple[int, ...], int | None]]:
    """Random tiling of the grid: (cell, axis) for dominoes, (cell, None) for single cells."""
    covered: set[tuple[int, ...]] = set()
    tiles = []
    for cell in product(*(range(d) for d in dims)):
        if cell in covered:
            continue
        axes = [a for a in range(len(dims))
                if cell[a] + 1 < dims[a]
                and tuple(c + (k == a) for k, c in enumerate(cell)) not in covered]
        if axes and rng.random() < 0.8:
            a = axes[rng.integers(len(axes))]
            other = tuple(c + (k == a) for k, c in enumerate(cell))
            covered.update((cell, other))
            tiles.append((cell, a))
        else:
            covered.add(cell)
            tiles.append((cell, None))
    return tiles


def _domino_vectors(dims, tiles) -> list[list[np.ndarray]]:
    out = []
    for cell, axis in tiles:
        signs = (1.0,) if axis is None else (1.0, -1.0)
        for sign in signs:
            row = []
            for p, (c, d) in enumerate(zip(cell, dims)):
                v = np.zeros(d, dtype=complex)
                v[c] = 1.0
                if p == axis:
                    v[c + 1] = sign
                row.append(v)
            out.append(row)
    return out


def _domino_like(params: GeneratorParams, rng) -> StateSet:
    total = int(np.prod(params.dims))
    if params.n_states > total:
        raise InfeasibleParams(f"a product basis of {params.dims} has only {total} states")
    vectors = _domino_vectors(params.dims, _domino_tiling(params.dims, rng))
    keep = sorted(rng.choice(total, size=params.n_states, replace=False))
    vectors = [vectors[k] for k in keep]
    return _to_state_set(_rotate(vectors, params.dims, rng), params.dims)


# -- colorings and orthogonal representations --------------------------------

def _random_coloring(params: GeneratorParams, rng, allowed, budget: int = 20000) -> dict | None:
    """Randomized backtracking coloring of pairs; ``allowed(colors, i, j, p)`` vetoes choices.

    Pairs are processed vertex by vertex so that each state's local vector in
    partite p is constrained by at most dim_p - 1 earlier states.
    """
    n, dims = params.n_states, params.dims
    if sum(d - 1 for d in dims) < n - 1:
        raise InfeasibleParams(f"the last of {n} states must be orthogonal to {n - 1} others "
                               f"but dims {dims} allow at most {sum(d - 1 for d in dims)}")
    order = []
    for j in range(1, n):
        order += [(int(i), j) for i in rng.permutation(j)]
    colors: dict[tuple[int, int], int] = {}
    back = np.zeros((n, len(dims)), dtype=int)
    steps = 0

    def place(k: int) -> bool:
        nonlocal steps
        if k == len(order):
            return True
        steps += 1
        if steps > budget:
            return False
        i, j = order[k]
        options = [int(p) for p in rng.permutation(len(dims))
                   if back[j, p] < dims[p] - 1 and allowed(colors, i, j, int(p))]
        for p in options:
            colors[(i, j)] = p
            back[j, p] += 1
            if place(k + 1):
                return True
            back[j, p] -= 1
            del colors[(i, j)]
            if steps > budget:
                return False
        return False

    return dict(colors) if place(0) else None


def _realize(colors: dict, n: int, dims, rng) -> list[list[np.ndarray]] | None:
    vectors: list[list[np.ndarray]] = [[None] * len(dims) for _ in range(n)]
    for p, d in enumerate(dims):
        for j in range(n):
            nbrs = [vectors[i][p] for i in range(j) if colors.get((i, j)) == p]
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            if nbrs:
                q, _ = np.linalg.qr(np.array(nbrs).T)
                v = v - q @ (q.conj().T @ v)
            norm = np.linalg.norm(v)
            if norm < 1e-6:
                return None
            vectors[j][p] = v / norm
    for i, j in combinations(range(n), 2):
        for p in range(len(dims)):
            if colors[(i, j)] != p and abs(np.vdot(vectors[i][p], vectors[j][p])) < MIN_OVERLAP:
                return None
    return vectors


def _adj_from(colors: dict, n: int, p: int) -> list[set[int]]:
    adj = [set() for _ in range(n)]
    for (i, j), c in colors.items():
        if c == p:
            adj[i].add(j)
            adj[j].add(i)
    return adj


def _clique_mix(params: GeneratorParams, rng) -> StateSet:
    n, dims = params.n_states, params.dims
    m = params.clique
    # cliques capped at 2 everywhere means triangle-free in every partite
    lowest = 3 if n >= TRIANGLE_RAMSEY.get(len(dims), n + 1) else 2
    if m is None:
        m = int(rng.integers(lowest, min(dims[0], n) + 1))
    if not 1 <= m <= min(dims[0], n):
        raise InfeasibleParams(f"clique size {m} needs dims[0] >= {m} and n_states >= {m}")
    if m < lowest:
        raise InfeasibleParams(f"every {len(dims)}-coloring of K{n} has a monochromatic triangle")
    planted = set(combinations(range(m), 2))

    def allowed(colors, i, j, p):
        a, b = min(i, j), max(i, j)
        if (a, b) in planted:
            return p == 0
        if b < m:
            return False
        adj = _adj_from(colors, n, p)
        common = adj[a] & adj[b]
        if len(common) + 2 <= m:
            return True
        return len(max_clique(adj, common)) + 2 <= m

    for _ in range(MAX_ATTEMPTS):
        colors = _random_coloring(params, rng, allowed)
        if colors is None:
            continue
        vectors = _realize(colors, n, dims, rng)
        if vectors is None:
            continue
        vectors = _rotate(vectors, dims, rng)
        return _to_state_set(vectors, dims)
    raise InfeasibleParams(f"could not realize a clique_mix instance for {params}")


def _p4_forced(params: GeneratorParams, rng) -> StateSet:
    n, dims = params.n_states, params.dims
    forbid_p4 = bool(params.forbid_p4)
    ramsey = TRIANGLE_RAMSEY.get(len(dims))
    if ramsey is not None and n >= ramsey:
        raise InfeasibleParams(f"every {len(dims)}-coloring of K{n} has a monochromatic triangle")

    def allowed(colors, i, j, p):
        adj = _adj_from(colors, n, p)
        if adj[i] & adj[j]:
            return False
        if forbid_p4:
            if adj[i] and adj[j]:
                return False
            # (i, j) must not extend an existing edge into a P4
            if any(adj[k] - {i} for k in adj[i]) or any(adj[k] - {j} for k in adj[j]):
                return False
        return True

    for _ in range(MAX_ATTEMPTS):
        colors = _random_coloring(params, rng, allowed)
        if colors is None:
            continue
        vectors = _realize(colors, n, dims, rng)
        if vectors is None:
            continue
        vectors = _rotate(vectors, dims, rng)
        return _to_state_set(vectors, dims)
    raise InfeasibleParams(f"could not realize a p4_forced instance for {params}")


def gen_random(params: GeneratorParams) -> StateSet:
    rng = np.random.default_rng(params.seed)
    if params.family == "domino_like":
        out = _domino_like(params, rng)
    elif params.family == "clique_mix":
        out = _clique_mix(params, rng)
    else:
        out = _p4_forced(params, rng)
    return out


def triangle_free_everywhere(s: StateSet) -> bool:
    from .orthograph import local_adjacency
    for p in range(s.n_partites):
        w = find_patterns_in_relation(local_adjacency(s, p), range(len(s)))
        if w is not None and w.kind == TRIANGLE:
            return False
    return True
