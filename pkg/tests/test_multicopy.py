import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from productlocc.gen import GeneratorParams, gen_random
from productlocc.multicopy import distinguish_multicopy, run_copy, small_set_threshold
from productlocc.sim import copy_bound
from productlocc.states import fixture, make_state_set
from productlocc.synth import synthesize_seven
from productlocc.tree import REST

DOMINO = fixture("domino")


class TestDomino:
    @pytest.mark.parametrize("true", range(8))
    @pytest.mark.parametrize("seed", range(4))
    def test_eight_subset_two_copies(self, true, seed):
        r = distinguish_multicopy(DOMINO, true, seed, candidates=range(8))
        assert r.success and r.copies_used <= 2

    @pytest.mark.parametrize("true", range(9))
    def test_full_basis(self, true):
        r = distinguish_multicopy(DOMINO, true, 3)
        assert r.success and r.within_bound

    def test_report_json(self):
        r = distinguish_multicopy(DOMINO, 2, 7, candidates=range(8))
        doc = json.loads(r.to_json(DOMINO))
        assert doc["true_label"] == "phi3" and doc["success"]
        assert all(set(e) == {"copy", "measurement", "partite", "anchors", "outcome", "excluded"}
                   for e in doc["trace"])
        assert "bound_violation" not in doc


class TestEdges:
    def test_singleton(self):
        s = make_state_set([2, 2], [[[1, 0], [1, 0]]])
        r = distinguish_multicopy(s, 0, 0)
        assert r.success and r.copies_used == 0 and r.trace == []

    def test_true_state_must_be_candidate(self):
        with pytest.raises(IndexError):
            distinguish_multicopy(DOMINO, 8, 0, candidates=range(8))

    def test_thresholds(self):
        assert small_set_threshold(2) == 4 and small_set_threshold(3) == 3

    def test_deterministic(self):
        s = gen_random(GeneratorParams(3, (5, 5, 5), 10, 4, "clique_mix"))
        a = distinguish_multicopy(s, 6, 123).to_json(s)
        b = distinguish_multicopy(s, 6, 123).to_json(s)
        assert a == b


class TestRunCopy:
    def test_trace_exclusions_are_consistent(self):
        s = gen_random(GeneratorParams(2, (5, 5), 9, 1, "clique_mix", clique=3))
        tree = synthesize_seven(s, range(7)).tree
        rng = np.random.default_rng(0)
        cands, trace = run_copy(tree, s, tuple(range(9)), 4, rng, 1)
        assert 4 in cands
        removed = set()
        for e in trace:
            assert not removed & set(e.excluded)
            removed |= set(e.excluded)
            assert e.outcome is REST or e.outcome in e.measurement.anchors
        assert removed == set(range(9)) - set(cands)
        assert len(set(cands) & set(range(7))) <= 3


@given(st.integers(5, 12), st.sampled_from([2, 3, 4]), st.integers(0, 2 ** 16))
@settings(max_examples=60, deadline=None)
def test_copy_bound_property(n, parts, seed):
    dims = {2: (7, 7), 3: (5, 5, 5), 4: (4, 4, 4, 4)}[parts]
    family = ["clique_mix", "domino_like", "p4_forced"][seed % (2 if parts == 2 else 3)]
    if family == "domino_like":
        dims = {2: (4, 4), 3: (3, 3, 2), 4: (2, 2, 2, 2)}[parts]
    s = gen_random(GeneratorParams(parts, dims, n, seed, family))
    r = distinguish_multicopy(s, seed % n, seed)
    assert r.success
    assert r.copies_used <= copy_bound(n, parts)
