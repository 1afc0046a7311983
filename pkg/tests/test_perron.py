import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from growthrate.cones import build_cone_automaton
from growthrate.perron import (
    NotNonnegative,
    RateEnclosure,
    char_poly,
    char_poly_roots_check,
    fekete_enclosure,
    fingerprint,
    perron_enclosure,
    recurrent_components,
)
from growthrate.words import GenTuple

GOLDEN = (1 + math.sqrt(5)) / 2


def test_scalar():
    e = perron_enclosure([[2]])
    assert e.lo == e.hi == 2.0 and e.converged


def test_golden_ratio():
    e = perron_enclosure([[1, 1], [1, 0]], tol=1e-12)
    assert e.lo <= GOLDEN <= e.hi and e.width <= 1e-11
    assert abs(e.mid - 1.6180339887) < 1e-9


def test_f2_basis_rate_is_three(F2):
    A = build_cone_automaton(F2, GenTuple.parse("a b"), N_validate=6)
    e = perron_enclosure(A.transfer_matrix(), tol=1e-10)
    assert abs(e.lo - 3) < 1e-9 and abs(e.hi - 3) < 1e-9


def test_permutation_matrix_exactly_one():
    P = np.roll(np.eye(5, dtype=int), 1, axis=1)
    e = perron_enclosure(P)
    assert e.lo == e.hi == 1.0


def test_periodic_block_converges():
    # bipartite block with spectral radius sqrt(6)
    M = [[0, 2], [3, 0]]
    e = perron_enclosure(M, tol=1e-12)
    assert e.converged and e.lo <= math.sqrt(6) <= e.hi


def test_nilpotent_and_transient_parts():
    assert perron_enclosure([[0, 1], [0, 0]]).hi == 0.0
    # a transient state feeding a loop of weight 3
    e = perron_enclosure([[0, 5, 0], [0, 3, 1], [0, 0, 0]])
    assert e.lo == e.hi == 3.0
    assert [list(c) for c in recurrent_components(np.array([[0, 5], [0, 3]]))] == [[1]]


def test_bad_input():
    with pytest.raises(NotNonnegative):
        perron_enclosure([[1, -1], [0, 1]])
    with pytest.raises(ValueError):
        perron_enclosure([[1, 2, 3]])
    with pytest.raises(ValueError):
        perron_enclosure([[0.5]])


def test_iteration_cap_flags_partial():
    e = perron_enclosure([[1, 1], [1, 0]], tol=0.0, max_iter=3)
    assert not e.converged and e.lo <= GOLDEN <= e.hi


def test_enclosure_serialization():
    e = perron_enclosure([[1, 1], [1, 0]])
    assert RateEnclosure.from_dict(e.to_dict()) == e
    assert e.fingerprint == fingerprint([[1, 1], [1, 0]]) != fingerprint([[1, 1], [0, 1]])
    f = fekete_enclosure(3.5, 3.0)
    assert f.method == "fekete-upper-only" and f.intersects(e) is False
    with pytest.raises(ValueError):
        RateEnclosure(2, 1, "x", 0, "")


@pytest.mark.parametrize(
    "M, coeffs",
    [
        ([[2]], [1, -2]),
        ([[1, 1], [1, 0]], [1, -1, -1]),
        ([[0, 1, 0], [0, 0, 1], [1, 0, 0]], [1, 0, 0, -1]),
        ([[1, 3, 3], [1, 1, 3], [1, 1, 1]], [1, -3, -6, -4]),
    ],
)
def test_char_poly(M, coeffs):
    assert char_poly(M) == coeffs
    assert [round(c) for c in np.poly(np.array(M, dtype=float))] == coeffs


def _nonneg(n):
    return arrays(np.int64, (n, n), elements=st.integers(0, 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(_nonneg))
def test_perron_agrees_with_char_poly(M):
    e = perron_enclosure(M, tol=1e-9)
    _, (a, b) = char_poly_roots_check(M, eps=1e-12)
    rho = max(abs(np.linalg.eigvals(M.astype(float))))
    assert e.lo - 1e-7 <= rho <= e.hi + 1e-7
    if e.hi > 0:
        assert e.lo - 1e-7 <= b and a <= e.hi + 1e-7


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(_nonneg), st.data())
def test_adding_an_entry_never_lowers_rate(M, data):
    i = data.draw(st.integers(0, M.shape[0] - 1))
    j = data.draw(st.integers(0, M.shape[0] - 1))
    old = perron_enclosure(M, tol=1e-9)
    M2 = M.copy()
    M2[i, j] += 1
    new = perron_enclosure(M2, tol=1e-9)
    assert new.hi >= old.lo


def test_char_poly_dimension_cap():
    with pytest.raises(ValueError):
        char_poly_roots_check(np.ones((61, 61), dtype=int))


def test_root_bracket_with_touching_intervals():
    # roots sqrt(6) and 3 get isolating intervals (2, 3) and (3, 3)
    M = [[0, 0, 2, 0, 0], [0, 0, 0, 0, 0], [3, 0, 0, 0, 0], [0, 0, 0, 0, 0], [0, 0, 0, 0, 3]]
    coeffs, (a, b) = char_poly_roots_check(M)
    assert coeffs == [1, -3, -6, 18, 0, 0]
    assert a == b == 3.0
