"""Single-copy exclusion protocols and small-set distinguishers.

The constructive case analyses for seven states (two partites, or three
and more) are transcribed as tree builders; anything they do not cover is
handed to an exhaustive bounded search.  Every tree is checked by the
simulator before it is returned.

State indices always refer to the full StateSet, so a tree built for a
subset of candidates can be run against the whole set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable

import numpy as np

from .orthograph import find_patterns_in_relation, local_adjacency, max_clique, TRIANGLE
from .sim import Current, split, verify_exclusion_guarantee
from .states import StateSet, state_set_to_dict
from .tree import (DEFAULT_DEPTH_LIMIT, REST, Leaf, Measurement, ProtocolTree, SynthesisGoal,
                   leaf, make_node, measure)


class SynthesisError(RuntimeError):
    """A synthesizer could not produce a verified tree."""

    def __init__(self, message: str, s: StateSet | None = None, candidates=None):
        self.instance = None
        if s is not None:
            self.instance = {"state_set": state_set_to_dict(s),
                             "candidates": [c + 1 for c in (candidates or range(len(s)))]}
        super().__init__(message)

    def dump(self) -> str:
        return json.dumps(self.instance, indent=1)


class SearchExhausted(SynthesisError):
    """Bounded search found nothing where a protocol is guaranteed to exist."""


class SearchClassFailure(SynthesisError):
    """No protocol in the searched class distinguishes a small candidate set."""


class _NoPattern(Exception):
    pass


# ---------------------------------------------------------------------------
# Bounded search
# ---------------------------------------------------------------------------

def _fingerprint(cands, current: Current) -> tuple:
    out = []
    for t in cands:
        row = current.get(t)
        if row:
            out.append((t, tuple((p, np.round(row[p], 9).tobytes()) for p in sorted(row))))
    return tuple(out)


def _parallel(u: np.ndarray, v: np.ndarray) -> bool:
    return abs(abs(np.vdot(u, v)) - 1.0) < 1e-9


class _Search:
    def __init__(self, s: StateSet, limit: int, anchor_limit: int):
        self.s = s
        self.limit = limit
        self.anchor_limit = anchor_limit
        self.memo: dict = {}
        self.adj = [local_adjacency(s, p) for p in range(s.n_partites)]
        self.nodes = 0

    def measurements(self, cands: tuple[int, ...]) -> Iterable[Measurement]:
        s = self.s
        for p in range(s.n_partites):
            reps: list[int] = []
            for t in cands:
                if not any(_parallel(s.local(r, p), s.local(t, p)) for r in reps):
                    reps.append(t)
            cap = min(self.anchor_limit, s.signature.dims[p])
            cliques: list[tuple[int, ...]] = []

            def grow(cur: list[int], pool: list[int]):
                cliques.append(tuple(cur))
                if len(cur) == cap:
                    return
                for k, v in enumerate(pool):
                    grow(cur + [v], [w for w in pool[k + 1:] if w in self.adj[p][v]])

            for k, v in enumerate(reps):
                grow([v], [w for w in reps[k + 1:] if w in self.adj[p][v]])
            cliques.sort(key=lambda c: (-len(c), c))
            for c in cliques:
                yield Measurement(p, c)

    def solve(self, cands: tuple[int, ...], current: Current, depth: int) -> ProtocolTree | None:
        if len(cands) <= self.limit:
            return leaf(cands)
        if depth == 0:
            return None
        key = (cands, depth, _fingerprint(cands, current))
        if key in self.memo:
            return self.memo[key]
        self.nodes += 1
        result = None
        for m in self.measurements(cands):
            parts = split(m, cands, self.s, current)
            sizes = [len(surv) for surv, _ in parts.values()]
            if min(z for z in sizes if z) == len(cands):
                continue
            if depth == 1 and max(sizes) > self.limit:
                continue
            branches = {}
            order = sorted(parts, key=lambda o: (-len(parts[o][0]), -1 if o is REST else o))
            for o in order:
                surv, cur = parts[o]
                sub = self.solve(surv, cur, depth - 1)
                if sub is None:
                    break
                branches[o] = sub
            else:
                result = make_node(m, branches)
                break
        self.memo[key] = result
        return result


def bounded_protocol_search(s: StateSet, candidates, goal: SynthesisGoal, depth_limit: int = 3,
                            anchor_limit: int = 5, current: Current | None = None
                            ) -> ProtocolTree | None:
    """Exhaustive backtracking over anchored local measurements.

    Depths are tried in increasing order.  Measurements are tried partite by
    partite; within a partite larger anchor sets come first, ties in
    lexicographic order.  Returns the first tree of the smallest sufficient
    depth whose every reachable leaf meets ``goal``, or None.
    """
    root = tuple(sorted(candidates))
    if not root:
        raise ValueError("candidates must be non-empty")
    if depth_limit < 1 or anchor_limit < 1:
        raise ValueError("limits must be >= 1")
    search = _Search(s, goal.max_leaf_size(len(root)), anchor_limit)
    tree = None
    for depth in range(1, depth_limit + 1):
        tree = search.solve(root, dict(current or {}), depth)
        if tree is not None:
            break
    if tree is not None and current is None:
        _require_verified(tree, s, goal, root)
    return tree


def _require_verified(tree, s, goal, root):
    bad = verify_exclusion_guarantee(tree, s, goal, candidates=root)
    if bad is not None:
        raise SynthesisError(f"synthesized tree failed verification: {bad}", s, list(root))
    return tree


# ---------------------------------------------------------------------------
# Literal case builders
# ---------------------------------------------------------------------------

# A follow-up decides what happens on one branch: None for a leaf, or the
# next measurement together with the follow-up for its own branches.
Follow = Callable[[object, tuple], "tuple[Measurement, Follow] | None"]


def _stop(outcome, surv):
    return None


@dataclass
class _Builder:
    s: StateSet
    limit: int
    depth_limit: int = 3
    used_search: bool = False

    def ortho(self, i: int, j: int, p: int) -> bool:
        return self.s.orthogonal_in(i, j, p)

    def witness(self, i: int, j: int, avoid: Iterable[int]) -> int | None:
        avoid = set(avoid)
        for p in range(self.s.n_partites):
            if p not in avoid and self.ortho(i, j, p):
                return p
        return None

    def grow(self, m: Measurement, cands: tuple, current: Current, follow: Follow, depth: int
             ) -> ProtocolTree:
        branches = {}
        for o, (surv, cur) in split(m, cands, self.s, current).items():
            branches[o] = self.branch(o, surv, cur, follow, depth - 1)
        return make_node(m, branches)

    def branch(self, o, surv, cur, follow, depth) -> ProtocolTree:
        if len(surv) <= self.limit:
            return leaf(surv)
        try:
            nxt = follow(o, surv)
        except _NoPattern:
            nxt = None
        if nxt is None or depth <= 0:
            return self.fallback(surv, cur, depth)
        m, follow2 = nxt
        return self.grow(m, surv, cur, follow2, depth)

    def fallback(self, surv, cur, depth) -> ProtocolTree:
        self.used_search = True
        search = _Search(self.s, self.limit, 5)
        sub = search.solve(tuple(surv), cur, max(depth, 1))
        if sub is None:
            raise SearchExhausted("no protocol found for a sub-branch", self.s, list(surv))
        return sub

    # -- follow-up patterns --------------------------------------------------

    def one_more(self, surv, used, pivot=None):
        """Measure a pair of survivors on an unused partite: excludes at least one."""
        pairs = []
        if pivot is not None:
            pairs += [(pivot, l) for l in surv if l != pivot]
        pairs += [pq for pq in combinations(surv, 2) if pivot not in pq]
        for i, j in pairs:
            p = self.witness(i, j, used)
            if p is not None:
                return measure(self.s, p, sorted((i, j))), _stop
        raise _NoPattern

    def two_more_pivot(self, j, surv, used):
        """Two more exclusions around the collapsed anchor j (all survivors non-orthogonal to j)."""
        used = set(used)
        others = [t for t in surv if t != j]
        pair = None
        for p_, q_ in combinations(others, 2):
            if any(self.ortho(p_, q_, x) for x in used):
                continue
            y = self.witness(p_, q_, used)
            if y is not None:
                pair = (p_, q_, y)
                break
        if pair is None:
            raise _NoPattern
        p_, q_, y = pair
        s = self.s
        jp, jq = self.ortho(j, p_, y), self.ortho(j, q_, y)
        if jp and jq:
            return measure(s, y, sorted((j, p_, q_))), _stop
        if jq and not jp:
            p_, q_ = q_, p_
            jp, jq = jq, jp
        after = used | {y}
        z_p = None if jp else self.witness(j, p_, after)
        z_q = self.witness(j, q_, after)
        if (not jp and z_p is None) or z_q is None:
            raise _NoPattern

        def follow(o, sv):
            if o == p_ and z_p is not None:
                return measure(s, z_p, sorted((j, p_))), _stop
            if o == q_:
                return measure(s, z_q, sorted((j, q_))), _stop
            return None

        return measure(s, y, sorted((p_, q_))), follow

    def two_of_three(self, triple, used):
        """Exclude two of three mutually orthogonal states not orthogonal in the used partites."""
        s = self.s
        used = set(used)
        for pivot in triple:
            a, b = [t for t in triple if t != pivot]
            for y in range(s.n_partites):
                if y in used or not (self.ortho(pivot, a, y) and self.ortho(pivot, b, y)):
                    continue
                w = None if self.ortho(a, b, y) else self.witness(a, b, used | {y})
                if not self.ortho(a, b, y) and w is None:
                    continue

                def follow(o, sv, a=a, b=b, w=w):
                    if o in (a, b) and w is not None:
                        return measure(s, w, sorted((a, b))), _stop
                    return None

                return measure(s, y, sorted((pivot, a))), follow
        # every edge of the triple in its own partite
        a, b, c = sorted(triple)
        y = self.witness(a, b, used)
        z = self.witness(a, c, used | {y} if y is not None else used)
        w = self.witness(b, c, used | {y} if y is not None else used)
        if y is None or z is None or w is None:
            raise _NoPattern

        def follow(o, sv):
            if o == a:
                return measure(s, z, (a, c)), _stop
            if o == b:
                return measure(s, w, (b, c)), _stop
            return None

        return measure(s, y, (a, b)), follow


def _clique_protocol(b: _Builder, cands: tuple, x: int, clique: list[int]) -> ProtocolTree:
    """Measure partite x on a local orthonormal clique, then finish each branch."""
    s = b.s

    def follow(o, surv):
        need = len(surv) - b.limit
        if o is REST:
            if need == 1:
                return b.one_more(surv, {x})
            raise _NoPattern
        if need == 1:
            return b.one_more(surv, {x}, pivot=o)
        if need == 2:
            return b.two_more_pivot(o, surv, {x})
        raise _NoPattern

    return b.grow(measure(s, x, clique), cands, {}, follow, b.depth_limit)


def _p4_protocol(b: _Builder, cands: tuple, x: int, p4: tuple[int, ...]) -> ProtocolTree:
    """Measure x on the first edge of a P4 pattern, then finish each branch."""
    s = b.s
    v1, v2 = p4[0], p4[1]
    adj = local_adjacency(s, x)

    def after_rest(surv):
        need = len(surv) - b.limit
        if need == 1:
            return b.one_more(surv, {x})
        if need != 2:
            raise _NoPattern
        for r in surv:
            nbrs = [t for t in surv if t in adj[r]]
            for triple in combinations(nbrs, 3):
                if not any(t2 in adj[t1] for t1, t2 in combinations(triple, 2)):
                    try:
                        return b.two_of_three(triple, {x})
                    except _NoPattern:
                        pass
        for p_, q_ in combinations(surv, 2):
            if q_ in adj[p_]:
                continue
            y = b.witness(p_, q_, {x})
            if y is None:
                continue

            def follow(o, sv, y=y):
                if o is REST:
                    return None
                for l in sv:
                    if l != o:
                        z = b.witness(o, l, {x, y})
                        if z is not None:
                            return measure(s, z, sorted((o, l))), _stop
                raise _NoPattern

            return measure(s, y, (p_, q_)), follow
        raise _NoPattern

    def follow(o, surv):
        if o is REST:
            return after_rest(surv)
        need = len(surv) - b.limit
        if need == 1:
            return b.one_more(surv, {x}, pivot=o)
        if need == 2:
            return b.two_more_pivot(o, surv, {x})
        raise _NoPattern

    return b.grow(measure(s, x, (v1, v2)), cands, {}, follow, b.depth_limit)


def _candidates(s: StateSet, candidates) -> tuple[int, ...]:
    return tuple(sorted(range(len(s)) if candidates is None else candidates))


def _best_clique(s: StateSet, cands) -> tuple[int, list[int]]:
    best_p, best = 0, []
    for p in range(s.n_partites):
        q = max_clique(local_adjacency(s, p), cands)
        if len(q) > len(best):
            best_p, best = p, q
    return best_p, best


@dataclass(frozen=True)
class Synthesis:
    tree: ProtocolTree
    case: str
    goal: SynthesisGoal
    candidates: tuple[int, ...]


def theorem3_plan(s: StateSet, candidates=None) -> tuple[int, list[int], int]:
    """(partite, clique, guaranteed exclusions) for a bipartite candidate set."""
    cands = _candidates(s, candidates)
    x, clique = _best_clique(s, cands)
    m, n = len(clique), len(cands)
    return x, clique, (m + 1 if n >= 2 * m + 1 else m)


def bipartite_case(s: StateSet, candidates=None) -> tuple[str, int, tuple[int, ...]]:
    """Which branch of the seven-state bipartite analysis applies: (case, partite, clique)."""
    x, clique = _best_clique(s, _candidates(s, candidates))
    m = len(clique)
    case = "case1" if m >= 5 else "case2" if m == 4 else "case3" if m == 3 else "none"
    return case, x, tuple(clique)


def _check_bipartite(s: StateSet, cands):
    if s.n_partites != 2:
        raise ValueError(f"expected a bipartite state set, got {s.n_partites} partites")


def synthesize_theorem3_case(s: StateSet, candidates=None) -> Synthesis:
    cands = _candidates(s, candidates)
    _check_bipartite(s, cands)
    if len(cands) < 2:
        raise ValueError("need at least 2 states")
    x, clique, k = theorem3_plan(s, cands)
    if len(cands) < len(clique) + 1:
        raise ValueError(f"need N >= m + 1 (N={len(cands)}, m={len(clique)})")
    goal = SynthesisGoal.exclude(k)
    b = _Builder(s, len(cands) - k, depth_limit=3)
    tree = _clique_protocol(b, cands, x, clique)
    case = f"theorem3 m={len(clique)} partite={s.signature.names[x]}"
    if b.used_search:
        case += " +search"
    _require_verified(tree, s, goal, cands)
    return Synthesis(tree, case, goal, cands)


def synthesize_theorem3(s: StateSet, candidates=None) -> ProtocolTree:
    return synthesize_theorem3_case(s, candidates).tree


def synthesize_bipartite_seven_case(s: StateSet, candidates=None) -> Synthesis:
    cands = _candidates(s, candidates)
    if len(cands) != 7:
        raise ValueError(f"expected 7 states, got {len(cands)}")
    _check_bipartite(s, cands)
    case, x, clique = bipartite_case(s, cands)
    if case == "none":
        raise SynthesisError("no 3-clique in either partite among 7 bipartite states", s, list(cands))
    goal = SynthesisGoal.exclude(4)
    b = _Builder(s, 3, depth_limit=3)
    tree = _clique_protocol(b, cands, x, list(clique))
    if b.used_search:
        case += " +search"
    _require_verified(tree, s, goal, cands)
    return Synthesis(tree, case, goal, cands)


def synthesize_bipartite_seven(s: StateSet, candidates=None) -> ProtocolTree:
    return synthesize_bipartite_seven_case(s, candidates).tree


def multipartite_case(s: StateSet, candidates=None) -> tuple[str, int, tuple[int, ...]]:
    """Which branch of the seven-state multipartite analysis applies: (case, partite, vertices)."""
    cands = _candidates(s, candidates)
    x, clique = _best_clique(s, cands)
    if len(clique) >= 4:
        return "case1", x, tuple(clique)
    if len(clique) == 3:
        return "case2", x, tuple(clique)
    for p in range(s.n_partites):
        w = find_patterns_in_relation(local_adjacency(s, p), cands, p)
        if w is not None and w.kind != TRIANGLE:
            return "case3", p, w.vertices
    return "case4", -1, ()


# Star-forest instances (no triangle, no P4 anywhere) can need four rounds.
CASE4_DEPTH = 4


def synthesize_multipartite_seven_case(s: StateSet, candidates=None) -> Synthesis:
    cands = _candidates(s, candidates)
    if len(cands) != 7:
        raise ValueError(f"expected 7 states, got {len(cands)}")
    if s.n_partites < 3:
        raise ValueError("expected at least 3 partites")
    goal = SynthesisGoal.exclude(4)
    case, x, verts = multipartite_case(s, cands)
    b = _Builder(s, 3, depth_limit=3)
    if case in ("case1", "case2"):
        tree = _clique_protocol(b, cands, x, list(verts))
    elif case == "case3":
        tree = _p4_protocol(b, cands, x, verts)
    else:
        tree = bounded_protocol_search(s, cands, goal, depth_limit=CASE4_DEPTH, anchor_limit=5)
        if tree is None:
            raise SearchExhausted(f"no depth-{CASE4_DEPTH} exclusion protocol found for "
                                  "seven states (falsification candidate)", s, list(cands))
        case = "case4 search"
    if b.used_search:
        case += " +search"
    _require_verified(tree, s, goal, cands)
    return Synthesis(tree, case, goal, cands)


def synthesize_multipartite_seven(s: StateSet, candidates=None) -> ProtocolTree:
    return synthesize_multipartite_seven_case(s, candidates).tree


def synthesize_seven(s: StateSet, candidates=None) -> Synthesis:
    if s.n_partites == 2:
        return synthesize_bipartite_seven_case(s, candidates)
    return synthesize_multipartite_seven_case(s, candidates)


def small_set_distinguisher(s: StateSet, candidates=None) -> ProtocolTree:
    """Full distinguishing tree for at most 4 (bipartite) or 3 (multipartite) states."""
    cands = _candidates(s, candidates)
    cap = 4 if s.n_partites == 2 else 3
    if len(cands) > cap:
        raise ValueError(f"at most {cap} candidates for {s.n_partites} partites, got {len(cands)}")
    if len(cands) <= 1:
        return Leaf(cands)
    goal = SynthesisGoal.full()
    tree = bounded_protocol_search(s, cands, goal, depth_limit=min(2 * len(cands), DEFAULT_DEPTH_LIMIT),
                                   anchor_limit=len(cands))
    if tree is None:
        raise SearchClassFailure(
            f"no anchored projective protocol distinguishes states {[c + 1 for c in cands]}",
            s, list(cands))
    return tree
