import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthrate import census as census_mod
from growthrate.census import (
    BudgetExceeded,
    UnknownElement,
    best_upper_bound,
    enumerate_ball,
    geodesic_word,
    rate_upper_bounds,
)
from growthrate.subgroup import stallings_fold
from growthrate.words import FreeGroup, GenTuple, format_word, free_reduce, inverse, parse_word, surface_group

P = parse_word


def naive_spheres(t: GenTuple, N: int):
    """Independent BFS over Python sets of reduced words."""
    gens = t.effective()
    seen = {()}
    frontier = {()}
    sizes = [1]
    for _ in range(N):
        nxt = set()
        for x in frontier:
            for g in gens:
                y = free_reduce(x + g)
                if y not in seen:
                    nxt.add(y)
        seen |= nxt
        frontier = nxt
        sizes.append(len(nxt))
    return sizes


def test_f2_basis_spheres(F2):
    c = enumerate_ball(F2, GenTuple.parse("a b"), 3)
    assert c.sphere_sizes == [1, 4, 12, 36]
    assert c.ball_sizes[-1] == 53


@pytest.mark.parametrize("k", [2, 3])
def test_free_basis_closed_form(k):
    t = GenTuple.parse(" ".join("abc"[:k]))
    c = enumerate_ball(FreeGroup.of_rank(k), t, 5)
    assert c.sphere_sizes == [1] + [2 * k * (2 * k - 1) ** (n - 1) for n in range(1, 6)]


def test_free_semigroup_powers_of_two(F2):
    c = enumerate_ball(F2, GenTuple.parse("a b", symmetric=False), 5)
    assert c.sphere_sizes == [2**n for n in range(6)] and c.mode == "semigroup"


def test_three_generators_frozen(F2):
    # naive BFS oracle, frozen
    t = GenTuple.parse("a b ab")
    c = enumerate_ball(F2, t, 5)
    assert c.sphere_sizes == [1, 6, 24, 96, 384, 1536]
    assert c.sphere_sizes == naive_spheres(t, 5)
    assert sorted(format_word(w) for w in c.elements(1)) == sorted(["a", "A", "b", "B", "ab", "BA"])


@pytest.mark.parametrize("text", ["a bb", "ab ba", "a b aab", "aB bba", "Abba bA B"])
def test_matches_naive_enumeration(F2, text):
    t = GenTuple.parse(text)
    assert enumerate_ball(F2, t, 5).sphere_sizes == naive_spheres(t, 5)


def test_forced_hash_collisions_stay_exact(F2, monkeypatch):
    t = GenTuple.parse("a b ab")
    ref = enumerate_ball(F2, t, 5, record_edges=True)
    orig = census_mod._FreeStore.hash
    monkeypatch.setattr(census_mod._FreeStore, "hash", lambda self, cols: orig(self, cols) % np.uint64(3))
    c = enumerate_ball(F2, t, 5, record_edges=True)
    assert c.sphere_sizes == ref.sphere_sizes
    assert np.array_equal(c.edges, ref.edges)


def test_edges_are_products(F2):
    t = GenTuple.parse("a b ab")
    c = enumerate_ball(F2, t, 4, record_edges=True)
    n_inner = c.ball_sizes[-2]
    assert c.edges.shape == (n_inner, len(c.generators))
    for x in range(0, n_inner, 7):
        for g, gw in enumerate(c.generators):
            assert c.element(int(c.edges[x, g])) == free_reduce(c.element(x) + gw)


def test_combing_is_geodesic(F2):
    t = GenTuple.parse("a b ab")
    c = enumerate_ball(F2, t, 4)
    sphere = c.sphere_of()
    for i in range(c.n_elements):
        path = c.combing_indices(i)
        assert len(path) == sphere[i]
        assert c.spell(path) == c.element(i)
    assert geodesic_word(c, ()) == ()
    assert len(geodesic_word(c, P("abab"))) == 2
    assert c.spell(geodesic_word(c, P("B"))) == P("B")
    with pytest.raises(UnknownElement):
        geodesic_word(c, P("aaaaaaaaaa"))


def test_symmetric_ball_closed_under_inversion(F2):
    c = enumerate_ball(F2, GenTuple.parse("a bb ab"), 4)
    sphere = c.sphere_of()
    for i in range(c.n_elements):
        assert sphere[c.index_of(inverse(c.element(i)))] == sphere[i]


def test_subgroup_soundness(F2):
    ws = [P("ab"), P("ba")]
    g = stallings_fold(ws, 2)
    c = enumerate_ball(F2, GenTuple(tuple(ws)), 5)
    assert all(g.contains(w) for w in c.elements())


@pytest.mark.filterwarnings("ignore:generator")
@settings(max_examples=25, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=1, max_size=3), min_size=1, max_size=3), st.booleans())
def test_submultiplicative(raw, sym):
    ws = [free_reduce(w) for w in raw]
    ws = [w for w in ws if w] or [P("a")]
    c = enumerate_ball(FreeGroup.of_rank(2), GenTuple(tuple(ws), symmetric=sym), 6)
    b = c.ball_sizes
    for m in range(len(b)):
        for n in range(len(b) - m):
            assert b[m + n] <= b[m] * b[n]


def test_upper_bounds(F2):
    c = enumerate_ball(F2, GenTuple.parse("a b"), 8)
    ub = rate_upper_bounds(c)
    assert ub[0] == (1, 5.0)
    assert all(v >= 3 for _, v in ub)
    assert [v for _, v in ub] == sorted([v for _, v in ub], reverse=True)
    s = enumerate_ball(F2, GenTuple.parse("a b", symmetric=False), 8)
    assert all(v >= 2 for _, v in rate_upper_bounds(s))
    assert best_upper_bound(s) == rate_upper_bounds(s)[-1][1]


def test_budget(F2):
    c = enumerate_ball(F2, GenTuple.parse("a b"), 10, max_elements=200)
    # radius 5 would need 161 + 108 * 4 candidates
    assert not c.complete and c.radius == 4
    with pytest.raises(BudgetExceeded) as exc:
        enumerate_ball(F2, GenTuple.parse("a b"), 10, max_elements=200, strict_budget=True)
    assert exc.value.census.radius == 4


def test_redundant_generators_dropped(F2):
    with pytest.warns(UserWarning):
        c = enumerate_ball(F2, GenTuple.parse("a b a"), 3)
    assert c.sphere_sizes == [1, 4, 12, 36]


def test_csv_export(F2, tmp_path):
    c = enumerate_ball(F2, GenTuple.parse("a b"), 3)
    path = tmp_path / "c.csv"
    c.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["n", "s_n", "beta_n", "upper_bound"]
    assert rows[-1][:3] == ["3", "36", "53"]
    assert float(rows[-1][3]) == pytest.approx(53 ** (1 / 3))


def test_surface_equality_procedures_agree():
    G = surface_group(2)
    t = GenTuple.parse("a b c d")
    a = enumerate_ball(G, t, 5, equality="canonical")
    b = enumerate_ball(G, t, 5, equality="pairwise")
    # known growth series of the genus-2 surface group
    assert a.sphere_sizes == b.sphere_sizes == [1, 8, 56, 392, 2736, 19096]
