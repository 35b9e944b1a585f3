"""Distinguish one of N orthogonal product states using several copies.

Each copy runs one exclusion tree on the current candidates; the outcome
path is sampled from the Born distribution of the true state.  Once at most
four (bipartite) or three (multipartite) candidates remain, a final copy
runs a full distinguishing tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .sim import copy_bound, outcome_distribution, split
from .states import StateSet
from .synth import (SearchExhausted, bounded_protocol_search, small_set_distinguisher,
                    synthesize_seven)
from .tree import REST, Leaf, Measurement, Node, ProtocolTree, SynthesisGoal, outcome_key

# Search depth when fewer than seven states exist and nothing can be padded in.
SHORT_SET_DEPTH = 4


@dataclass(frozen=True)
class TraceEntry:
    copy: int
    measurement: Measurement
    outcome: object
    excluded: tuple[int, ...]

    def to_dict(self, s: StateSet) -> dict:
        return {
            "copy": self.copy,
            "measurement": self.measurement.describe(s),
            "partite": self.measurement.partite,
            "anchors": [a + 1 for a in self.measurement.anchors],
            "outcome": 0 if self.outcome is REST else self.outcome + 1,
            "excluded": [e + 1 for e in self.excluded],
        }


@dataclass
class DistinguishReport:
    true_state: int
    copies_used: int
    trace: list[TraceEntry]
    final_candidates: tuple[int, ...]
    n_states: int
    partite_count: int
    seed: int
    plans: list[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.final_candidates == (self.true_state,)

    @property
    def bound(self) -> int:
        return copy_bound(self.n_states, self.partite_count)

    @property
    def within_bound(self) -> bool:
        return self.copies_used <= self.bound

    def to_dict(self, s: StateSet) -> dict:
        doc = {
            "true_state": self.true_state + 1,
            "true_label": s.labels[self.true_state],
            "seed": self.seed,
            "copies_used": self.copies_used,
            "copy_bound": self.bound,
            "trace": [e.to_dict(s) for e in self.trace],
            "plans": list(self.plans),
            "final_candidates": [c + 1 for c in self.final_candidates],
            "success": self.success,
        }
        if not self.within_bound:
            doc["bound_violation"] = (f"used {self.copies_used} copies, "
                                      f"bound for N={self.n_states} is {self.bound}")
        return doc

    def to_json(self, s: StateSet) -> str:
        return json.dumps(self.to_dict(s), indent=1)


def small_set_threshold(partite_count: int) -> int:
    return 4 if partite_count == 2 else 3


def exclusion_plan(s: StateSet, cands: tuple[int, ...], excluded: tuple[int, ...]
                   ) -> tuple[ProtocolTree, str]:
    """Tree for one copy that leaves at most the small-set threshold of ``cands`` alive,
    or (when that is out of reach) at least shrinks them."""
    threshold = small_set_threshold(s.n_partites)
    if len(cands) >= 7:
        target = cands[:7]
        return synthesize_seven(s, target).tree, f"seven {[c + 1 for c in target]}"
    pad = 7 - len(cands)
    if len(excluded) >= pad:
        target = tuple(sorted(cands + tuple(sorted(excluded)[:pad])))
        return synthesize_seven(s, target).tree, f"padded seven {[c + 1 for c in target]}"
    goal = SynthesisGoal.exclude(len(cands) - threshold)
    tree = bounded_protocol_search(s, cands, goal, depth_limit=SHORT_SET_DEPTH, anchor_limit=5)
    if tree is not None:
        return tree, f"search {goal} depth {tree.depth}"
    # Fall back to shrinking by one; the copy budget check reports any overrun.
    goal = SynthesisGoal.exclude(1)
    tree = bounded_protocol_search(s, cands, goal, depth_limit=SHORT_SET_DEPTH, anchor_limit=5)
    if tree is None:
        raise SearchExhausted(f"no single-copy exclusion found for {len(cands)} candidates",
                              s, list(cands))
    return tree, f"search {goal} depth {tree.depth}"


def run_copy(tree: ProtocolTree, s: StateSet, cands: tuple[int, ...], true_state: int,
             rng: np.random.Generator, copy_no: int) -> tuple[tuple[int, ...], list[TraceEntry]]:
    """Run ``tree`` on a fresh copy, sampling each outcome; prune ``cands`` along the way."""
    current: dict = {}
    trace = []
    node = tree
    while isinstance(node, Node):
        m = node.measurement
        dist = outcome_distribution(m, true_state, s, current)
        outcomes = sorted(dist, key=outcome_key)
        probs = np.array([dist[o] for o in outcomes])
        o = outcomes[int(rng.choice(len(outcomes), p=probs / probs.sum()))]
        survivors, current = split(m, cands, s, current)[o]
        trace.append(TraceEntry(copy_no, m, o, tuple(c for c in cands if c not in survivors)))
        cands = survivors
        node = node.branch(o)
    if not isinstance(node, Leaf):
        raise TypeError(f"malformed tree element {node!r}")
    return cands, trace


def distinguish_multicopy(s: StateSet, true_state: int, seed: int, candidates=None,
                          plan_cache: dict | None = None) -> DistinguishReport:
    """Identify ``true_state`` copy by copy; outcomes are drawn with ``seed``."""
    cands = tuple(sorted(range(len(s)) if candidates is None else set(candidates)))
    if true_state not in cands:
        raise IndexError(f"true state {true_state} is not among the candidates")
    rng = np.random.default_rng(seed)
    cache = {} if plan_cache is None else plan_cache
    threshold = small_set_threshold(s.n_partites)
    report = DistinguishReport(true_state, 0, [], cands, len(cands), s.n_partites, seed)
    excluded: tuple[int, ...] = ()

    def consume(tree: ProtocolTree, label: str):
        nonlocal cands, excluded
        report.copies_used += 1
        report.plans.append(label)
        after, trace = run_copy(tree, s, cands, true_state, rng, report.copies_used)
        report.trace += trace
        excluded = tuple(sorted(set(excluded) | (set(cands) - set(after))))
        cands = after

    while len(cands) > threshold:
        key = ("exclude", cands, excluded if len(cands) < 7 else ())
        if key not in cache:
            cache[key] = exclusion_plan(s, cands, excluded)
        consume(*cache[key])
    if len(cands) > 1:
        key = ("full", cands)
        if key not in cache:
            cache[key] = (small_set_distinguisher(s, cands), "distinguish")
        consume(*cache[key])
    report.final_candidates = cands
    return report


__all__ = ["DistinguishReport", "TraceEntry", "distinguish_multicopy", "exclusion_plan",
           "run_copy", "small_set_threshold"]
