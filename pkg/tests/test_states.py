import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from productlocc.states import (DEFAULT_TOL, OrthogonalityError, StateSetError, SystemSignature,
                                Tolerance, as_vector, fixture, inner_product,
                                is_orthogonal_in_partite, make_state_set, parse_state_set,
                                serialize_state_set)

R2 = 1 / math.sqrt(2)


def _doc(dims, states):
    return json.dumps({
        "partites": [{"name": n, "dim": d} for n, d in zip("ABCD", dims)],
        "states": [{"label": f"phi{k + 1}", "locals": loc} for k, loc in enumerate(states)],
    })


class TestSignature:
    def test_defaults(self):
        sig = SystemSignature.of(3, 2)
        assert sig.names == ("A", "B")
        assert sig.dims == (3, 2)

    @pytest.mark.parametrize("dims", [(3,), (1, 2), (2, 0)])
    def test_rejects_small(self, dims):
        with pytest.raises(StateSetError):
            SystemSignature.of(*dims)

    def test_rejects_duplicate_names(self):
        with pytest.raises(StateSetError):
            SystemSignature.of(2, 2, names=["A", "A"])

    @pytest.mark.parametrize("bad", [0.0, -1e-9, 1e-3, 0.5])
    def test_tolerance_bounds(self, bad):
        with pytest.raises(ValueError):
            Tolerance(orth=bad)


class TestInnerProduct:
    def test_plus_minus(self):
        assert abs(inner_product([R2, R2], [R2, -R2])) < 1e-15

    def test_self(self):
        assert inner_product([1, 0], [1, 0]) == 1

    def test_domino_pair(self):
        # |1+2> against |0> in dim 3
        assert inner_product([0, R2, R2], [1, 0, 0]) == 0

    def test_conjugate_linear_first_argument(self):
        v = as_vector([[0, 1], [0, 0]])   # i|0>
        w = as_vector([1, 0])
        assert inner_product(v, w) == pytest.approx(-1j)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            inner_product([1, 0], [1, 0, 0])

    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=4, max_size=4),
           st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=4, max_size=4))
    def test_hermitian_symmetry(self, a, b):
        v, w = np.array(a), np.array(b)
        assert inner_product(v, w) == np.conj(inner_product(w, v))


class TestParse:
    def test_domino_document(self):
        s = parse_state_set(serialize_state_set(fixture("domino")))
        assert len(s) == 9 and s.signature.dims == (3, 3)

    def test_two_states_orthogonal_on_b(self):
        s = parse_state_set(_doc((2, 2), [[[1, 0], [1, 0]], [[1, 0], [0, 1]]]))
        assert len(s) == 2

    def test_orthogonality_violation_names_pair(self):
        with pytest.raises(OrthogonalityError) as info:
            parse_state_set(_doc((2, 2), [[[1, 0], [1, 0]], [[1, 0], [1, 1]]]))
        assert info.value.pair == (0, 1)
        assert "1" in str(info.value) and "2" in str(info.value)
        assert info.value.magnitude == pytest.approx(R2)

    def test_unnormalized_input_normalized(self):
        s = parse_state_set(_doc((2, 2), [[[3, 0], [1, 1]], [[0, 2], [1, -1]]]))
        for st_ in s.states:
            for v in st_.locals:
                assert abs(np.linalg.norm(v) - 1) < DEFAULT_TOL.norm

    def test_complex_pairs(self):
        s = parse_state_set(_doc((2, 2), [[[[1, 0], [0, 1]], [1, 0]], [[[1, 0], [0, -1]], [0, 1]]]))
        assert s.local(0, 0)[1] == pytest.approx(1j * R2)

    @pytest.mark.parametrize("doc", [
        "{not json",
        json.dumps({"states": []}),
        json.dumps({"partites": [{"name": "A", "dim": 2}, {"name": "B", "dim": 2}],
                    "states": [{"label": "x"}]}),
    ])
    def test_malformed(self, doc):
        with pytest.raises(StateSetError):
            parse_state_set(doc)

    def test_dimension_mismatch(self):
        with pytest.raises(StateSetError):
            parse_state_set(_doc((2, 2), [[[1, 0, 0], [1, 0]]]))

    def test_duplicate_labels(self):
        with pytest.raises(StateSetError):
            make_state_set([2, 2], [[[1, 0], [1, 0]], [[0, 1], [0, 1]]], labels=["x", "x"])

    def test_round_trip(self):
        s = fixture("lemma2")
        again = parse_state_set(serialize_state_set(s))
        assert again.labels == s.labels
        for a, b in zip(s.states, again.states):
            assert a == b


class TestOrthogonality:
    def test_domino_examples(self):
        d = fixture("domino")
        p1, p3 = d.states[0], d.states[2]
        assert is_orthogonal_in_partite(p1, p3, 1, DEFAULT_TOL)
        assert not is_orthogonal_in_partite(p1, p3, 0, DEFAULT_TOL)

    def test_self_never_orthogonal(self):
        d = fixture("domino")
        for st_ in d.states:
            assert not any(is_orthogonal_in_partite(st_, st_, p, DEFAULT_TOL) for p in range(2))

    def test_bad_partite(self):
        d = fixture("domino")
        with pytest.raises(IndexError):
            is_orthogonal_in_partite(d.states[0], d.states[1], 2, DEFAULT_TOL)


class TestFixtures:
    @pytest.mark.parametrize("name,n,dims", [("domino", 9, (3, 3)), ("lemma2", 4, (2, 2, 2))])
    def test_shape(self, name, n, dims):
        s = fixture(name)
        assert len(s) == n and s.signature.dims == dims

    @pytest.mark.parametrize("name", ["domino", "lemma2"])
    def test_every_pair_has_a_witness(self, name):
        s = fixture(name)
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                assert s.witnesses(i, j)

    def test_lemma2_joint_bc_overlaps(self):
        # phi2 and phi3 (also phi2 and phi4) are orthogonal through B: <0-1|0+1> = 0
        s = fixture("lemma2")
        ov = {(i, j): abs(inner_product(s.local(i, 1), s.local(j, 1))
                          * inner_product(s.local(i, 2), s.local(j, 2)))
              for i, j in [(1, 2), (1, 3), (2, 3)]}
        assert ov[(1, 2)] < 1e-12
        assert ov[(1, 3)] < 1e-12
        assert ov[(2, 3)] == pytest.approx(1.0)
        assert s.witnesses(2, 3) == frozenset({0})

    def test_unknown(self):
        with pytest.raises(KeyError):
            fixture("upb")


@st.composite
def product_sets(draw):
    """Random computational-basis-with-phases product sets (always orthogonal)."""
    dims = draw(st.lists(st.integers(2, 3), min_size=2, max_size=3))
    cells = draw(st.lists(st.tuples(*[st.integers(0, d - 1) for d in dims]),
                          min_size=2, max_size=6, unique=True))
    phases = draw(st.lists(st.floats(0, 2 * math.pi), min_size=len(cells), max_size=len(cells)))
    states = []
    for cell, ph in zip(cells, phases):
        row = []
        for c, d in zip(cell, dims):
            v = np.zeros(d, dtype=complex)
            v[c] = np.exp(1j * ph)
            row.append(v)
        states.append(row)
    return make_state_set(dims, states)


class TestProperties:
    @given(product_sets())
    @settings(max_examples=60, deadline=None)
    def test_valid_sets_have_witness_partites(self, s):
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                assert any(is_orthogonal_in_partite(s.states[i], s.states[j], p, s.tol)
                           for p in range(s.n_partites))

    @given(product_sets())
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, s):
        again = parse_state_set(serialize_state_set(s))
        for a, b in zip(s.states, again.states):
            for u, v in zip(a.locals, b.locals):
                assert np.max(np.abs(u - v)) < 1e-12
                assert abs(np.linalg.norm(v) - 1) < DEFAULT_TOL.norm
