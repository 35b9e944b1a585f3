"""End-to-end acceptance checks, one test per criterion.

Each test is tagged with ``criterion``; conftest prints a PASS/FAIL line per
criterion in the terminal summary.  Criterion 8 audits the simulator counters
accumulated by criteria 1-7 and therefore must stay last in this file.
"""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from oracles import brute_has_pattern, dense_leaf_probabilities, witness_valid
from productlocc.gen import GeneratorParams, gen_random
from productlocc.multicopy import distinguish_multicopy
from productlocc.orthograph import (BLOCK, EdgeColoring, _sample_block, find_triangle_or_p4,
                                    pair_list, verify_lemma3_exhaustive, verify_lemma4_sampled)
from productlocc.sim import STATS, copy_bound, split, verify_exclusion_guarantee
from productlocc.states import fixture, global_overlap, make_state_set
from productlocc.synth import (bounded_protocol_search, synthesize_bipartite_seven_case,
                               synthesize_multipartite_seven_case)
from productlocc.tree import Measurement, SynthesisGoal

EXCLUDE4 = SynthesisGoal.exclude(4)


@pytest.fixture(scope="module", autouse=True)
def fresh_counters():
    STATS.reset()
    yield


def leaf_sound(tree, s, cands):
    """Dense-oracle soundness: the true state survives at every leaf it reaches."""
    for t in cands:
        for leaf_cands, p in dense_leaf_probabilities(tree, s, t):
            assert t in leaf_cands
            assert len(cands) - len(leaf_cands) >= 4


@pytest.mark.criterion(1, "domino: one Alice Z measurement, two copies suffice")
def test_criterion_1_domino():
    start = time.perf_counter()
    s = fixture("domino")
    eight = tuple(range(8))
    # anchors phi1, phi9, phi5 carry |0>, |1>, |2> on Alice's side
    alice_z = Measurement(0, (0, 8, 4))
    survivors, _ = split(alice_z, eight, s, {})[0]
    assert set(eight) - set(survivors) == {4, 5, 6, 7}
    for true in eight:
        r = distinguish_multicopy(s, true, seed=true, candidates=eight)
        assert r.success and r.copies_used <= 2
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(2, "every 2-coloring of K6 has a monochromatic triangle")
def test_criterion_2_lemma3():
    start = time.perf_counter()
    rep = verify_lemma3_exhaustive()
    assert rep["colorings_checked"] == 32768 and rep["counterexamples"] == 0
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(3, "10^6 sampled 3-colorings of K7 contain a triangle or P4")
def test_criterion_3_lemma4():
    start = time.perf_counter()
    rep = verify_lemma4_sampled(10 ** 6, seed=42)
    elapsed = time.perf_counter() - start
    assert rep["colorings_checked"] == 10 ** 6
    assert rep["counterexamples"] == 0 and rep["oracle_mismatches"] == 0
    assert sum(rep["histogram"].values()) == 10 ** 6
    # scalar witnesses and a permutation scan on a slice of the same stream
    colors = _sample_block(42, 0, BLOCK, len(pair_list(7)), 3)
    for row in colors[:2000].tolist():
        w = find_triangle_or_p4(EdgeColoring(7, tuple(row)))
        assert w is not None and witness_valid(w, row, 7) and brute_has_pattern(row, 7)
    assert elapsed < 60.0


BIPARTITE_PLAN = (
    [("case1", GeneratorParams(2, (7, 7), 7, seed, "clique_mix", clique=5)) for seed in range(25)]
    + [("case2", GeneratorParams(2, (6, 6), 7, seed, "clique_mix", clique=4)) for seed in range(25)]
    + [("case3", GeneratorParams(2, (5, 5), 7, seed, "clique_mix", clique=3)) for seed in range(25)]
    + [(None, GeneratorParams(2, (3, 3), 7, seed, "domino_like")) for seed in range(25)]
)


@pytest.mark.criterion(4, "bipartite seven-state trees exclude four, all cases")
def test_criterion_4_bipartite_seven():
    start = time.perf_counter()
    seen = set()
    for expected, params in BIPARTITE_PLAN:
        s = gen_random(params)
        syn = synthesize_bipartite_seven_case(s)
        if expected is not None:
            assert syn.case == expected, params
        seen.add(syn.case)
        assert verify_exclusion_guarantee(syn.tree, s, EXCLUDE4) is None, params
        leaf_sound(syn.tree, s, tuple(range(7)))
    assert {"case1", "case2", "case3"} <= seen
    assert len(BIPARTITE_PLAN) >= 100
    assert time.perf_counter() - start < 60.0


MULTIPARTITE_CONFIGS = [
    ("clique_mix", (5, 5, 5)), ("clique_mix", (4, 4, 4, 4)),
    ("p4_forced", (4, 4, 4)), ("p4_forced", (4, 4, 4, 4)),
    ("domino_like", (3, 3, 2)), ("domino_like", (2, 2, 2, 2)),
]


@pytest.mark.criterion(5, "three- and four-partite seven-state trees exclude four")
def test_criterion_5_multipartite_seven():
    start = time.perf_counter()
    count = 0
    for family, dims in MULTIPARTITE_CONFIGS:
        for seed in range(17):
            s = gen_random(GeneratorParams(len(dims), dims, 7, seed, family))
            # SearchExhausted propagates and fails the criterion
            syn = synthesize_multipartite_seven_case(s)
            assert verify_exclusion_guarantee(syn.tree, s, EXCLUDE4) is None, (family, dims, seed)
            leaf_sound(syn.tree, s, tuple(range(7)))
            count += 1
    assert count >= 100
    assert time.perf_counter() - start < 300.0


def copy_bound_instance(n, parts, seed):
    if parts == 2:
        family = ("clique_mix", "domino_like")[seed % 2]
    else:
        family = ("clique_mix", "domino_like", "p4_forced")[seed % 3]
    if family == "domino_like":
        dims = {2: (4, 4), 3: (3, 3, 2), 4: (2, 2, 2, 2)}[parts]
    else:
        dims = {2: (7, 7), 3: (5, 5, 5), 4: (4, 4, 4, 4)}[parts]
    return gen_random(GeneratorParams(parts, dims, n, seed, family))


@pytest.mark.criterion(6, "multi-copy runs succeed within the copy bound")
def test_criterion_6_copy_bounds():
    assert copy_bound(8, 2) == 2 and copy_bound(8, 3) == 3 and copy_bound(7, 3) == 2
    for n in range(2, 40):
        assert copy_bound(n, 2) == math.ceil(n / 4)
    failures = []
    for parts in (2, 3, 4):
        for n in range(5, 13):
            for seed in range(100):
                s = copy_bound_instance(n, parts, seed)
                r = distinguish_multicopy(s, seed % n, seed)
                if not (r.success and r.copies_used <= copy_bound(n, parts)):
                    failures.append((parts, n, seed, r.copies_used))
    assert failures == []


def joint_overlap(s, i, j, partites):
    return math.prod(abs(np.vdot(s.local(i, p), s.local(j, p))) for p in partites)


def rotated(s, seed):
    """The same set after an independent random unitary on every partite."""
    us = [unitary_group.rvs(d, random_state=seed + p) for p, d in enumerate(s.signature.dims)]
    return make_state_set(list(s.signature.dims),
                          [[us[p] @ s.local(i, p) for p in range(s.n_partites)]
                           for i in range(len(s))])


@pytest.mark.criterion(7, "four-state tripartite set: B(x)C non-orthogonality, no protocol found")
@given(st.integers(0, 2 ** 16))
@settings(max_examples=20, deadline=None)
def test_criterion_7_lemma2(seed):
    base = fixture("lemma2")
    s = base if seed == 0 else rotated(base, seed)
    eps = s.tol.orth
    assert all(abs(global_overlap(s[i], s[j])) < eps for i in range(4) for j in range(i + 1, 4))
    overlaps = {(i + 1, j + 1): joint_overlap(s, i, j, (1, 2))
                for i, j in ((1, 2), (1, 3), (2, 3))}
    tree = bounded_protocol_search(s, range(4), SynthesisGoal.full(), depth_limit=6)
    problems = []
    small = {k: v for k, v in overlaps.items() if v <= eps}
    if small:
        problems.append(f"B(x)C overlaps at or below {eps}: {small}")
    if tree is not None:
        problems.append(f"search found a depth-{tree.depth} distinguishing tree")
    assert problems == []


@pytest.mark.criterion(8, "simulator: normalized distributions, no sound-leaf violations")
def test_criterion_8_simulator_audit():
    assert STATS.distributions > 0 and STATS.leaves_checked > 0
    assert STATS.max_normalization_error <= 1e-9
    assert STATS.soundness_violations == 0
