import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import reduced_words
from growthrate.cones import build_cone_automaton
from growthrate.treelab import (
    KernelSpec,
    SeparatorSet,
    TreeMetric,
    ball_words,
    classify_forbidden,
    conjugate_pair_separators,
    count_feasible,
    end_germ,
    feasible_injectivity_check,
    find_separators,
    guaranteed_bound,
    lifted_injectivity_check,
    m_threshold,
    max_overlap,
    rate_lower_bound_pipeline,
    start_germ,
    verify,
)
from growthrate.treelab.feasible import SegmentRegistry, split_forbidden
from growthrate.treelab.geometry import SuffixAutomaton, cancellation, junction_reduced, overlap_in_window
from growthrate.treelab.manifest import Manifest, run_manifest
from growthrate.treelab.separators import pigeonhole_ok
from growthrate.words import GenTuple, format_word, free_reduce, inverse, parse_word

P = parse_word


@pytest.fixture(scope="module")
def group_seps():
    return find_separators([P("a"), P("b")], "group")


@pytest.fixture(scope="module")
def kernel_spec():
    return KernelSpec.parse(["a", "b", "ab"], "cBA")


@pytest.fixture(scope="module")
def kernel_seps(kernel_spec):
    return find_separators([P("a"), P("b"), P("c")], "kernel", kernel=kernel_spec)


@pytest.fixture(scope="module")
def semigroup_seps():
    return find_separators([P("a"), P("b")], "semigroup")


# -- geometry -----------------------------------------------------------------


def test_germs_and_metric():
    w = P("abA")
    assert start_germ(w) == P("a")[0] and end_germ(w) == P("a")[0]
    assert start_germ(()) is None
    assert junction_reduced(P("ab"), P("ba")) and not junction_reduced(P("ab"), P("Ba"))
    assert cancellation(P("abc"), P("CBa")) == 2
    m = TreeMetric.for_tuple([P("ab"), P("a")])
    assert m.rho == 2 and m.length(P("abab")) == 2 and m.dist(P("a"), P("ab")) == Fraction(1, 2)


def test_suffix_automaton():
    s = SuffixAutomaton(P("abcabca"))
    assert s.longest_repeat() == 4  # abca
    assert s.longest_common(P("bcab")) == 4
    assert s.longest_common(P("BBB")) == 0


@settings(max_examples=40, deadline=None)
@given(reduced_words(2, 4, 1), reduced_words(2, 4, 1), st.booleans())
def test_max_overlap_matches_brute_force(u, v, same):
    if same:
        v = u
    assert max_overlap(u, v, same) == overlap_in_window(u, v, len(u) + len(v), 2, same)


# -- separators ---------------------------------------------------------------


def test_group_separators_verify(group_seps):
    s = group_seps
    assert s.mode == "group" and sorted(s.elements) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    res = verify(s)
    assert res.ok and res.min_length > 10 and res.overlap_fraction <= Fraction(1, 10)
    for (i, j), u in s.elements.items():
        assert start_germ(u) == s.germs[i - 1] and end_germ(u) == s.germs[j - 1]
    assert s.window == "all translates" and s.provenance in ("search", "recipe")


def test_kernel_separators_die_under_h(kernel_seps, kernel_spec):
    assert verify(kernel_seps).ok
    for v in kernel_seps.elements.values():
        assert kernel_spec.apply(v) == ()
    assert kernel_spec.apply(P("c")) == P("ab")


def test_semigroup_separators(semigroup_seps):
    s = semigroup_seps
    res = verify(s)
    assert res.ok and res.min_length > 20 and res.overlap_fraction <= Fraction(1, 20)
    assert sorted(s.elements) == [1, 2, 3]
    # positive words in the generators a, b
    assert all(x % 2 == 0 for z in s.elements.values() for x in z)
    assert pigeonhole_ok([s.elements[k] for k in s.keys])[0]


def test_pigeonhole_failure_has_witness():
    z = P("ab" * 50)
    ok, wit = pigeonhole_ok([z, z, z])
    assert not ok and wit is not None


def test_verify_rejects_damaged_sets(group_seps, kernel_seps):
    short = dict(group_seps.elements)
    short[(1, 1)] = short[(1, 1)][:5] + short[(1, 1)][-5:]
    bad = SeparatorSet("group", short, 1, group_seps.germs)
    assert not verify(bad).ok
    # same word twice violates the overlap bound
    dup = dict(group_seps.elements)
    dup[(1, 2)] = dup[(1, 1)][:-1] + dup[(1, 2)][-1:]
    assert not verify(SeparatorSet("group", dup, 1, group_seps.germs)).ok
    broken = conjugate_pair_separators(kernel_seps)
    assert broken.provenance == "broken" and not verify(broken).ok


def test_find_separators_bad_input():
    with pytest.raises(ValueError):
        find_separators([P("a"), P("b")], "tree")
    with pytest.raises(ValueError):
        find_separators([P("a"), P("b")], "kernel")


# -- forbidden elements -------------------------------------------------------


def _random_group_seps(rng, max_len):
    germs = (0, 2)
    el = {}
    for i in (1, 2):
        for j in (1, 2):
            while True:
                n = rng.randint(2, max_len)
                w = free_reduce([germs[i - 1]] + [rng.randrange(4) for _ in range(n - 2)] + [germs[j - 1] ^ 1])
                if w and w[0] == germs[i - 1] and w[-1] == germs[j - 1] ^ 1:
                    el[(i, j)] = w
                    break
    return SeparatorSet("group", el, 1, germs)


def _brute_forbidden(ball, seps):
    out = []
    for w1 in ball:
        if not w1:
            continue
        for key in seps.keys:
            u = seps.elements[key]
            if seps.mode == "semigroup":
                if 40 * cancellation(w1, u) > len(u):
                    continue
                lim = lambda d: 20 * d <= 3 * len(u)
            else:
                if seps.germs[key[0] - 1] == w1[-1] ^ 1:
                    continue
                lim = lambda d: 5 * d <= len(u)
            p = free_reduce(w1 + u)
            if any(lim(len(free_reduce(inverse(x) + p))) for x in ball):
                out.append(w1)
                break
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_forbidden_matches_definition(seed, m):
    rng = random.Random(seed)
    seps = _random_group_seps(rng, 12)
    ball = ball_words(GenTuple.parse("a b"), m)
    rep = classify_forbidden(ball, seps, m)
    assert rep.forbidden == _brute_forbidden(ball, seps)
    assert () not in rep.forbidden


def test_short_separators_forbid_something():
    seps = SeparatorSet("group", {(1, 1): P("abA"), (1, 2): P("a"), (2, 1): P("A"), (2, 2): P("Aba")}, 1, (0, 1))
    ball = ball_words(GenTuple.parse("a b"), 2)
    rep = classify_forbidden(ball, seps, 2)
    assert rep.forbidden == _brute_forbidden(ball, seps)
    assert len(rep.forbidden) > 0 and format_word(rep.forbidden[0]) in rep.witnesses


def test_semigroup_forbidden_matches_definition():
    z = {1: P("aab"), 2: P("abb"), 3: P("bab")}
    seps = SeparatorSet("semigroup", z, 1, (), {1: 3, 2: 3, 3: 3})
    ball = ball_words(GenTuple.parse("a b", symmetric=False), 4)
    rep = classify_forbidden(ball, seps, 4)
    assert rep.forbidden == _brute_forbidden(ball, seps)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_real_separators_forbid_nothing_small_m(group_seps, m):
    rep = classify_forbidden(ball_words(GenTuple.parse("a b"), m), group_seps, m)
    assert rep.forbidden == [] and rep.ok and rep.bound == Fraction(1, 6)


def test_semigroup_bound_constant(semigroup_seps):
    rep = classify_forbidden(ball_words(GenTuple.parse("a b", symmetric=False), 5), semigroup_seps, 5)
    assert rep.bound == Fraction(1, 14) and rep.ok and rep.beta_m == 63


# -- feasible words and injectivity --------------------------------------------


def test_count_feasible():
    assert count_feasible(10, 3) == 1000
    assert count_feasible(7, 1) == 7
    with pytest.raises(ValueError):
        count_feasible(10, 0)


def test_type2_words_distinct_in_f2(group_seps):
    ball = ball_words(GenTuple.parse("a b"), 2)
    rep = classify_forbidden(ball, group_seps, 2)
    assert rep.beta_prime >= math.ceil(Fraction(5, 6) * rep.beta_m)
    bad = set(rep.forbidden)
    inj = feasible_injectivity_check(group_seps, [w for w in ball if w not in bad], 2)
    assert inj.ok and inj.n_words == inj.n_distinct == count_feasible(rep.beta_prime, 2)


def test_semigroup_type3_words_distinct(semigroup_seps):
    ball = ball_words(GenTuple.parse("a b", symmetric=False), 2)
    inj = feasible_injectivity_check(semigroup_seps, ball, 3)
    assert inj.ok and inj.n_words == 7**3


def test_too_short_separators_collide():
    seps = SeparatorSet("group", {(1, 1): P("a"), (1, 2): P("a"), (2, 1): P("b"), (2, 2): P("b")}, 1, (0, 2))
    ball = ball_words(GenTuple.parse("a b"), 1)
    inj = feasible_injectivity_check(seps, ball, 2)
    assert not inj.ok and inj.collisions


def test_segment_registry_exact_on_hash_ties():
    reg = SegmentRegistry()
    a, b = reg.add(P("abab")), reg.add(P("BAba"))
    s = reg.reduce([a, b])
    assert reg.spell(s) == free_reduce(P("abab") + P("BAba")) == P("abba")
    assert reg.key(reg.reduce([reg.add(P("ab")), reg.add(P("ba"))])) == reg.key(s)


def test_split_forbidden_examples():
    # a(aa) lands exactly on the prefix aaa of the block
    assert split_forbidden(P("aaa"), 1, P("aa")) is True
    # a long separator ends far from every prefix
    assert split_forbidden(P("aab"), 2, P("a" * 20)) is False


def test_lifted_injectivity_and_negative_control(kernel_seps, kernel_spec, F2):
    quotient = GenTuple(tuple(kernel_spec.images))
    A = build_cone_automaton(F2, quotient, N_validate=8)
    rep = lifted_injectivity_check(kernel_seps, A, quotient.words, 3, 2)
    assert rep.ok and rep.checks["separators_in_kernel"] and rep.checks["images_match_geodesics"]
    assert rep.n_words == rep.n_distinct > 0
    bad = lifted_injectivity_check(conjugate_pair_separators(kernel_seps), A, quotient.words, 3, 2)
    assert not bad.ok and len(bad.collisions) > 0


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_triangle_equality_spine(group_seps, data):
    ball = ball_words(GenTuple.parse("a b"), 3)
    w1 = data.draw(st.sampled_from(ball))
    w2 = data.draw(st.sampled_from(ball))
    key = group_seps.choose(w1, w2)
    u = group_seps.elements[key]
    d = group_seps.metric
    assert d.length(w1 + u + w2) == d.length(w1) + d.length(u) + d.length(w2)


# -- numbers ------------------------------------------------------------------


def test_pipeline_numbers():
    assert rate_lower_bound_pipeline(3, 0, 27) == pytest.approx(math.log(3))
    with pytest.raises(ValueError):
        rate_lower_bound_pipeline(0, 1, 5)
    assert guaranteed_bound(3, 0, 27, "semigroup") == pytest.approx((math.log(27) + math.log(13 / 14)) / 3)


def test_pipeline_f2_grows_with_m(group_seps):
    b = group_seps.b
    vals = []
    for m in range(1, 7):
        rep = classify_forbidden(ball_words(GenTuple.parse("a b"), m), group_seps, m)
        vals.append(rate_lower_bound_pipeline(m, b, rep.beta_prime))
    assert all(v < math.log(3) for v in vals)
    assert vals == sorted(vals)


@pytest.mark.parametrize("b, r, m", [(1, 2, 5), (5, 3, 70859), (1, 1 + 1e-12, 2)])
def test_m_threshold(b, r, m):
    got = m_threshold(b, r)
    assert got == m
    x = 2 * b * math.log(r) - math.log(5 / 6)
    assert math.log(got) > x and (got == 2 or math.log(got - 1) <= x)


def test_m_threshold_limits():
    with pytest.raises(OverflowError):
        m_threshold(13000, 3)
    with pytest.raises(ValueError):
        m_threshold(0, 3)


def test_manifest_round_trip_and_run():
    man = Manifest(["a", "b"], ms=[1, 2], q=2)
    assert Manifest.from_json(man.to_json()) == man
    rep = run_manifest(man)
    assert [lv["n_forbidden"] for lv in rep["levels"]] == [0, 0]
    assert rep["levels"][1]["injectivity"]["ok"]
    assert str(rep["m_threshold"]).startswith("overflow")
