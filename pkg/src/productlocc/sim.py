"""Born-rule simulation of measurement trees against product states.

A measurement only acts on one partite, so the simulator tracks, for each
true state, the post-measurement local vector of every partite measured so
far.  Everything else stays at the state's original local vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .states import StateSet
from .tree import (DEFAULT_DEPTH_LIMIT, REST, Leaf, Measurement, Node, ProtocolTree,
                   SynthesisGoal, TreeError, iter_nodes, outcome_key)

# state index -> {partite: current normalized local vector}
Current = Mapping[int, Mapping[int, np.ndarray]]


class SimulationError(RuntimeError):
    pass


@dataclass
class SimStats:
    """Running checks over every distribution and reached leaf (instrumentation only)."""

    distributions: int = 0
    max_normalization_error: float = 0.0
    leaves_checked: int = 0
    soundness_violations: int = 0

    def reset(self):
        self.distributions = 0
        self.max_normalization_error = 0.0
        self.leaves_checked = 0
        self.soundness_violations = 0


STATS = SimStats()


def current_local(s: StateSet, state: int, partite: int, current: Current | None) -> np.ndarray:
    if current:
        row = current.get(state)
        if row is not None and partite in row:
            return row[partite]
    return s.local(state, partite)


def _amplitudes(m: Measurement, v: np.ndarray, s: StateSet):
    anchors = np.array([s.local(a, m.partite) for a in m.anchors])
    amps = anchors.conj() @ v
    resid = v - amps @ anchors
    return anchors, amps, resid


def _distribution(m: Measurement, amps, resid, s: StateSet, what) -> dict:
    probs = {a: float(abs(amp) ** 2) for a, amp in zip(m.anchors, amps)}
    rest = float(np.vdot(resid, resid).real)
    total = sum(probs.values()) + rest
    err = abs(total - 1.0)
    STATS.distributions += 1
    STATS.max_normalization_error = max(STATS.max_normalization_error, err)
    if err > s.tol.prob:
        raise SimulationError(f"{m.describe(s)} on state {what}: probabilities sum to {total!r}")
    out = {REST: rest}
    out.update(probs)
    return {k: (0.0 if p < 0 else min(p, 1.0)) for k, p in out.items()}


def outcome_distribution(m: Measurement, true_state: int, s: StateSet,
                         current: Current | None = None) -> dict:
    """Outcome probabilities of ``m`` when the unknown state is ``true_state``.

    Anchor outcome j has probability |<x_j|x_true>|^2; the completion outcome
    gets the squared norm of the projection onto the complement of the anchors.
    """
    if not 0 <= m.partite < s.n_partites:
        raise TreeError(f"partite {m.partite} out of range")
    v = current_local(s, true_state, m.partite, current)
    _, amps, resid = _amplitudes(m, v, s)
    return _distribution(m, amps, resid, s, true_state + 1)


def _collapse(m: Measurement, outcome, anchors, resid) -> np.ndarray:
    if outcome is REST:
        return resid / np.linalg.norm(resid)
    return anchors[m.anchors.index(outcome)]


def post_measurement(m: Measurement, outcome, v: np.ndarray, s: StateSet) -> np.ndarray:
    anchors, _, resid = _amplitudes(m, v, s)
    return _collapse(m, outcome, anchors, resid)


def split(m: Measurement, cands, s: StateSet, current: Current | None = None) -> dict:
    """Branch a candidate set on every outcome of ``m``.

    Returns ``outcome -> (surviving candidates, updated current vectors)``.
    A candidate survives a branch iff its outcome probability is >= tol.prob.
    """
    per_outcome: dict = {o: ([], {}) for o in m.outcomes()}
    for t in cands:
        v = current_local(s, t, m.partite, current)
        anchors, amps, resid = _amplitudes(m, v, s)
        dist = _distribution(m, amps, resid, s, t + 1)
        for o, p in dist.items():
            if p >= s.tol.prob:
                survivors, cur = per_outcome[o]
                survivors.append(t)
                row = dict(current.get(t, {})) if current else {}
                row[m.partite] = _collapse(m, o, anchors, resid)
                cur[t] = row
    return {o: (tuple(surv), cur) for o, (surv, cur) in per_outcome.items()}


def apply_exclusion(m: Measurement, outcome, cands, s: StateSet,
                    current: Current | None = None) -> tuple[int, ...]:
    """Drop the candidates for which ``outcome`` has (numerically) zero probability."""
    if outcome is not REST and outcome not in m.anchors:
        raise TreeError(f"outcome {outcome} is not an outcome of {m.describe(s)}")
    return tuple(t for t in cands
                 if outcome_distribution(m, t, s, current)[outcome] >= s.tol.prob)


def simulate(tree: ProtocolTree, s: StateSet, candidates=None) -> dict[int, list[tuple[Leaf, float]]]:
    """Every leaf reachable by each true state, with its path probability."""
    if candidates is None:
        candidates = tree.all_candidates
    for node in iter_nodes(tree):
        node.measurement.check(s)
    out: dict[int, list[tuple[Leaf, float]]] = {}
    for t in candidates:
        reached: list[tuple[Leaf, float]] = []
        _walk(tree, t, s, {}, 1.0, reached)
        for lf, _ in reached:
            STATS.leaves_checked += 1
            if t not in lf.candidates:
                STATS.soundness_violations += 1
        out[t] = reached
    return out


def _walk(tree, t, s, row, prob, reached):
    if isinstance(tree, Leaf):
        reached.append((tree, prob))
        return
    if not isinstance(tree, Node):
        raise TreeError(f"malformed tree element {tree!r}")
    m = tree.measurement
    v = current_local(s, t, m.partite, {t: row})
    anchors, amps, resid = _amplitudes(m, v, s)
    dist = _distribution(m, amps, resid, s, t + 1)
    for o in sorted(dist, key=outcome_key):
        p = dist[o]
        if p < s.tol.prob:
            continue
        new_row = dict(row)
        new_row[m.partite] = _collapse(m, o, anchors, resid)
        _walk(tree.branch(o), t, s, new_row, prob * p, reached)


@dataclass(frozen=True)
class Violation:
    true_state: int
    leaf: Leaf
    reason: str

    def __str__(self):
        return (f"true state {self.true_state + 1} reaches leaf "
                f"{[c + 1 for c in self.leaf.candidates]}: {self.reason}")


def verify_exclusion_guarantee(tree: ProtocolTree, s: StateSet, goal: SynthesisGoal,
                               candidates=None, depth_limit: int = DEFAULT_DEPTH_LIMIT
                               ) -> Violation | None:
    """None if the tree is sound and meets ``goal`` on every reachable leaf."""
    root = tuple(sorted(tree.all_candidates if candidates is None else candidates))
    if tree.depth > depth_limit:
        raise TreeError(f"tree depth {tree.depth} exceeds limit {depth_limit}")
    limit = goal.max_leaf_size(len(root))
    runs = simulate(tree, s, root)
    for t in root:
        total = math.fsum(p for _, p in runs[t])
        if abs(total - 1.0) > s.tol.prob * max(1, len(runs[t])):
            return Violation(t, runs[t][0][0] if runs[t] else Leaf(()),
                             f"path probabilities sum to {total}")
        for lf, _ in runs[t]:
            if t not in lf.candidates:
                return Violation(t, lf, "true state excluded (unsound)")
            if not set(lf.candidates) <= set(root):
                return Violation(t, lf, "leaf lists states outside the root candidates")
            if len(lf.candidates) > limit:
                return Violation(t, lf, f"{len(root) - len(lf.candidates)} exclusions, goal {goal}")
    return None


def copy_bound(n: int, partite_count: int) -> int:
    """Copies sufficient to distinguish n orthogonal product states."""
    if n < 0 or partite_count < 2:
        raise ValueError("need n >= 0 and at least 2 partites")
    if n <= 1:
        return 0
    base = -(-n // 4)
    if partite_count > 2 and n % 4 == 0:
        return base + 1
    return base
