"""Edge-colored complete graphs of pairwise orthogonality, and the polygon lemmas.

Vertices are state indices.  Colorings are flat arrays indexed by the
lexicographic pair order (0,1), (0,2), ..., (n-2,n-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .states import StateSet

TRIANGLE = "triangle"
P4 = "p4"


@lru_cache(maxsize=None)
def pair_list(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(combinations(range(n), 2))


@lru_cache(maxsize=None)
def pair_index_map(n: int) -> dict[tuple[int, int], int]:
    return {pq: k for k, pq in enumerate(pair_list(n))}


def pair_index(i: int, j: int, n: int) -> int:
    if i > j:
        i, j = j, i
    return pair_index_map(n)[(i, j)]


@dataclass(frozen=True)
class OrthoGraph:
    n: int
    edge_labels: Mapping[tuple[int, int], frozenset[int]]
    partite_names: tuple[str, ...] = ()
    state_labels: tuple[str, ...] = ()

    def label(self, i: int, j: int) -> frozenset[int]:
        return self.edge_labels[(i, j) if i < j else (j, i)]

    def is_complete(self) -> bool:
        return all(self.edge_labels.get(pq) for pq in pair_list(self.n))

    def adjacency(self, partite: int) -> list[set[int]]:
        """Neighbour sets of the single-partite orthogonality graph."""
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for (i, j), lab in self.edge_labels.items():
            if partite in lab:
                adj[i].add(j)
                adj[j].add(i)
        return adj


def build_ortho_graph(s: StateSet) -> OrthoGraph:
    labels = {(i, j): s.witnesses(i, j) for i, j in pair_list(len(s))}
    return OrthoGraph(len(s), labels, s.signature.names, tuple(s.labels))


@dataclass(frozen=True)
class EdgeColoring:
    n: int
    colors: tuple[int, ...]

    def __post_init__(self):
        if len(self.colors) != len(pair_list(self.n)):
            raise ValueError(f"a coloring of K{self.n} needs {len(pair_list(self.n))} colors, "
                             f"got {len(self.colors)}")

    def color(self, i: int, j: int) -> int:
        return self.colors[pair_index(i, j, self.n)]

    @classmethod
    def from_function(cls, n: int, fn) -> "EdgeColoring":
        return cls(n, tuple(int(fn(i, j)) for i, j in pair_list(n)))


def canonical_coloring(g: OrthoGraph) -> EdgeColoring:
    """Color each edge by the lowest partite index in its label set."""
    return EdgeColoring(g.n, tuple(min(g.label(i, j)) for i, j in pair_list(g.n)))


@dataclass(frozen=True)
class PatternWitness:
    kind: str
    vertices: tuple[int, ...]
    color: int

    def edges(self) -> tuple[tuple[int, int], ...]:
        v = self.vertices
        if self.kind == TRIANGLE:
            return ((v[0], v[1]), (v[0], v[2]), (v[1], v[2]))
        return ((v[0], v[1]), (v[0], v[2]), (v[1], v[3]))

    def holds_in(self, c: EdgeColoring) -> bool:
        if len(set(self.vertices)) != len(self.vertices):
            return False
        return all(c.color(i, j) == self.color for i, j in self.edges())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "vertices": list(self.vertices), "color": self.color}


def find_mono_triangle(c: EdgeColoring) -> PatternWitness | None:
    """Lexicographically smallest monochromatic triangle, or None."""
    for i, j, k in combinations(range(c.n), 3):
        col = c.color(i, j)
        if c.color(i, k) == col and c.color(j, k) == col:
            return PatternWitness(TRIANGLE, (i, j, k), col)
    return None


def find_p4(c: EdgeColoring) -> PatternWitness | None:
    """Smallest ordered (v1, v2, v3, v4) with (v1,v2), (v1,v3), (v2,v4) one color."""
    for v1, v2, v3, v4 in permutations(range(c.n), 4):
        col = c.color(v1, v2)
        if c.color(v1, v3) == col and c.color(v2, v4) == col:
            return PatternWitness(P4, (v1, v2, v3, v4), col)
    return None


def find_triangle_or_p4(c: EdgeColoring) -> PatternWitness | None:
    return find_mono_triangle(c) or find_p4(c)


def find_patterns_in_relation(adj: Sequence[set[int]], among: Iterable[int], color: int = 0
                              ) -> PatternWitness | None:
    """Triangle-or-P4 detector on a single (uncolored) relation graph restricted to ``among``."""
    verts = sorted(among)
    for i, j, k in combinations(verts, 3):
        if j in adj[i] and k in adj[i] and k in adj[j]:
            return PatternWitness(TRIANGLE, (i, j, k), color)
    for v1, v2, v3, v4 in permutations(verts, 4):
        if v2 in adj[v1] and v3 in adj[v1] and v4 in adj[v2]:
            return PatternWitness(P4, (v1, v2, v3, v4), color)
    return None


def max_clique(adj: Sequence[set[int]], among: Iterable[int] | None = None) -> list[int]:
    """Exact maximum clique; ties go to the lexicographically smallest vertex list."""
    verts = sorted(range(len(adj)) if among is None else among)
    best: list[int] = []

    def extend(current: list[int], cands: list[int]):
        nonlocal best
        if len(current) > len(best):
            best = list(current)
        for pos, v in enumerate(cands):
            rest = [w for w in cands[pos + 1:] if w in adj[v]]
            if len(current) + 1 + len(rest) <= len(best):
                continue
            current.append(v)
            extend(current, rest)
            current.pop()

    extend([], verts)
    return best


def local_adjacency(s: StateSet, partite: int) -> list[set[int]]:
    table = s.orth_table[partite]
    n = len(s)
    return [{j for j in range(n) if j != i and table[i, j]} for i in range(n)]


def max_local_orthonormal_clique(s: StateSet, partite: int,
                                 among: Iterable[int] | None = None) -> list[int]:
    """Largest set of states whose locals in ``partite`` are pairwise orthogonal."""
    return max_clique(local_adjacency(s, partite), among)


# ---------------------------------------------------------------------------
# Batch machinery for the verifiers.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _triangle_edges(n: int) -> np.ndarray:
    idx = pair_index_map(n)
    return np.array([[idx[(i, j)], idx[(i, k)], idx[(j, k)]]
                     for i, j, k in combinations(range(n), 3)], dtype=np.intp).reshape(-1, 3)


@lru_cache(maxsize=None)
def _p4_tuples(n: int) -> tuple[np.ndarray, np.ndarray]:
    tuples = list(permutations(range(n), 4))
    edges = np.array([[pair_index(a, b, n), pair_index(a, c, n), pair_index(b, d, n)]
                      for a, b, c, d in tuples], dtype=np.intp).reshape(-1, 3)
    return np.array(tuples, dtype=np.intp).reshape(-1, 4), edges


def _mono(colors: np.ndarray, edges: np.ndarray) -> np.ndarray:
    a = colors[:, edges[:, 0]]
    return (a == colors[:, edges[:, 1]]) & (a == colors[:, edges[:, 2]])


def batch_witnesses(colors: np.ndarray, n: int):
    """Vectorized find_triangle_or_p4 over rows of ``colors``.

    Returns ``(kind, index)`` arrays: kind 0 = none, 1 = triangle, 2 = p4; index
    points into the lexicographic triple list or the ordered 4-tuple list.
    """
    colors = np.asarray(colors)
    tri = _mono(colors, _triangle_edges(n))
    has_tri = tri.any(axis=1)
    kind = np.where(has_tri, 1, 0)
    index = np.where(has_tri, tri.argmax(axis=1), -1)
    rest = np.flatnonzero(~has_tri)
    if rest.size and n >= 4:
        _, p4_edges = _p4_tuples(n)
        p4 = _mono(colors[rest], p4_edges)
        has_p4 = p4.any(axis=1)
        kind[rest[has_p4]] = 2
        index[rest[has_p4]] = p4.argmax(axis=1)[has_p4]
    return kind, index


def witness_from_batch(colors_row, n: int, kind: int, index: int) -> PatternWitness | None:
    if kind == 0:
        return None
    if kind == 1:
        verts = list(combinations(range(n), 3))[index]
        return PatternWitness(TRIANGLE, tuple(verts), int(colors_row[pair_index(verts[0], verts[1], n)]))
    tuples, _ = _p4_tuples(n)
    verts = tuple(int(v) for v in tuples[index])
    return PatternWitness(P4, verts, int(colors_row[pair_index(verts[0], verts[1], n)]))


def _adjacency_oracle(colors: np.ndarray, n: int, n_colors: int):
    """Independent pattern existence check via adjacency matrices.

    A monochromatic triangle exists iff trace(A^3) > 0 for some color class A.
    Without triangles, the P4 pattern exists iff some edge joins two vertices
    of degree >= 2 in its color.
    """
    pairs = np.array(pair_list(n), dtype=np.intp).reshape(-1, 2)
    m = colors.shape[0]
    has_tri = np.zeros(m, dtype=bool)
    has_p4 = np.zeros(m, dtype=bool)
    for x in range(n_colors):
        a = np.zeros((m, n, n), dtype=np.int64)
        on = (colors == x).astype(np.int64)
        a[:, pairs[:, 0], pairs[:, 1]] = on
        a[:, pairs[:, 1], pairs[:, 0]] = on
        a3 = np.einsum("kij,kjl,kli->k", a, a, a)
        has_tri |= a3 > 0
        deg = a.sum(axis=2)
        both = (deg[:, pairs[:, 0]] >= 2) & (deg[:, pairs[:, 1]] >= 2) & (on == 1)
        has_p4 |= both.any(axis=1)
    return has_tri, has_p4


def _revalidate(colors: np.ndarray, n: int, n_colors: int, kind: np.ndarray, index: np.ndarray) -> int:
    """Count rows where the batch witness disagrees with the independent oracle."""
    has_tri, has_p4 = _adjacency_oracle(colors, n, n_colors)
    bad = (kind == 1) != has_tri
    bad |= (kind == 2) != (~has_tri & has_p4)
    tri_rows = np.flatnonzero(kind == 1)
    if tri_rows.size:
        e = _triangle_edges(n)[index[tri_rows]]
        c = colors[tri_rows]
        r = np.arange(tri_rows.size)
        ok = (c[r, e[:, 0]] == c[r, e[:, 1]]) & (c[r, e[:, 0]] == c[r, e[:, 2]])
        bad[tri_rows[~ok]] = True
    p4_rows = np.flatnonzero(kind == 2)
    if p4_rows.size:
        tuples, edges = _p4_tuples(n)
        e = edges[index[p4_rows]]
        c = colors[p4_rows]
        r = np.arange(p4_rows.size)
        ok = (c[r, e[:, 0]] == c[r, e[:, 1]]) & (c[r, e[:, 0]] == c[r, e[:, 2]])
        bad[p4_rows[~ok]] = True
    return int(bad.sum())


def verify_lemma3_exhaustive(n: int = 6) -> dict:
    """Check every 2-coloring of K_n for a monochromatic triangle.

    ``n=6`` is the lemma; smaller n is a diagnostic mode that should report
    counterexamples.
    """
    m = len(pair_list(n))
    codes = np.arange(2 ** m, dtype=np.int64)
    colors = ((codes[:, None] >> np.arange(m)) & 1).astype(np.int8)
    tri = _mono(colors, _triangle_edges(n)).any(axis=1)
    return {
        "n": n,
        "colorings_checked": int(colors.shape[0]),
        "counterexamples": int((~tri).sum()),
    }


BLOCK = 1 << 16


def _sample_block(seed: int, block: int, size: int, n_edges: int, n_colors: int) -> np.ndarray:
    rng = np.random.default_rng([seed, block])
    return rng.integers(0, n_colors, size=(size, n_edges), dtype=np.int64).astype(np.int8)


def verify_lemma4_sampled(samples: int, seed: int, n: int = 7, n_colors: int = 3) -> dict:
    """Uniform seeded 3-colorings of K7; every one must contain a triangle or P4.

    Samples are drawn in fixed blocks of 65536, block b from generator seeded
    with ``[seed, b]``, so the report does not depend on how blocks are split
    across workers.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n_edges = len(pair_list(n))
    hist = {TRIANGLE: 0, P4: 0}
    counterexamples = 0
    mismatches = 0
    first_counterexample = None
    done = 0
    block = 0
    while done < samples:
        size = min(BLOCK, samples - done)
        colors = _sample_block(seed, block, size, n_edges, n_colors)
        kind, index = batch_witnesses(colors, n)
        hist[TRIANGLE] += int((kind == 1).sum())
        hist[P4] += int((kind == 2).sum())
        none = np.flatnonzero(kind == 0)
        counterexamples += int(none.size)
        if none.size and first_counterexample is None:
            first_counterexample = [int(x) for x in colors[none[0]]]
        mismatches += _revalidate(colors, n, n_colors, kind, index)
        done += size
        block += 1
    report = {
        "colorings_checked": samples,
        "samples": samples,
        "seed": seed,
        "counterexamples": counterexamples,
        "histogram": hist,
        "oracle_mismatches": mismatches,
    }
    if first_counterexample is not None:
        report["first_counterexample"] = first_counterexample
    return report


def verify_lemma4_exhaustive(n: int = 7, n_colors: int = 3, chunk: int = 1 << 18,
                             limit: int | None = None) -> dict:
    """Walk every n_colors-coloring of K_n in base-n_colors order (3^21 for K7).

    ``limit`` caps the number of colorings examined; the full space is large.
    """
    n_edges = len(pair_list(n))
    total = n_colors ** n_edges
    stop = total if limit is None else min(total, limit)
    hist = {TRIANGLE: 0, P4: 0}
    counterexamples = 0
    weights = n_colors ** np.arange(n_edges, dtype=np.int64)
    start = 0
    while start < stop:
        codes = np.arange(start, min(stop, start + chunk), dtype=np.int64)
        colors = ((codes[:, None] // weights) % n_colors).astype(np.int8)
        kind, _ = batch_witnesses(colors, n)
        hist[TRIANGLE] += int((kind == 1).sum())
        hist[P4] += int((kind == 2).sum())
        counterexamples += int((kind == 0).sum())
        start += chunk
    return {"colorings_checked": int(stop), "counterexamples": counterexamples,
            "histogram": hist, "complete": stop == total}


def polygon_stats(n: int, n_colors: int, samples: int, seed: int) -> dict:
    """Experiment hook: distribution of the largest monochromatic clique in random colorings of K_n."""
    rng = np.random.default_rng(seed)
    pairs = pair_list(n)
    counts: dict[int, int] = {}
    for _ in range(samples):
        colors = rng.integers(0, n_colors, size=len(pairs))
        best = 0
        for x in range(n_colors):
            adj = [set() for _ in range(n)]
            for (i, j), col in zip(pairs, colors):
                if col == x:
                    adj[i].add(j)
                    adj[j].add(i)
            best = max(best, len(max_clique(adj)))
        counts[best] = counts.get(best, 0) + 1
    return {"n": n, "colors": n_colors, "samples": samples, "seed": seed,
            "max_mono_clique_histogram": {str(k): counts[k] for k in sorted(counts)}}


def export_dot(g: OrthoGraph) -> str:
    names = g.partite_names or tuple(str(p) for p in range(1 + max(
        (max(l) for l in g.edge_labels.values() if l), default=0)))
    labels = g.state_labels or tuple(f"phi{k + 1}" for k in range(g.n))
    lines = ["graph ortho {"]
    for k in range(g.n):
        lines.append(f'  {k + 1} [label="{labels[k]}"];')
    for i, j in pair_list(g.n):
        lab = ",".join(names[p] for p in sorted(g.label(i, j)))
        lines.append(f'  {i + 1} -- {j + 1} [label="{lab}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
