import itertools
import json

import numpy as np
import pytest

from growthrate.census import enumerate_ball
from growthrate.cones import (
    HONESTY_FLAG,
    UnsupportedInstance,
    ValidationMismatch,
    build_cone_automaton,
    transfer_counts,
)
from growthrate.words import GenTuple, free_reduce, surface_group


def accepted_words(A, n):
    G = A.delta.shape[1]
    return [w for w in itertools.product(range(G), repeat=n) if A.accepts(w)]


def test_f2_basis_automaton(F2):
    A = build_cone_automaton(F2, GenTuple.parse("a b"), N_validate=6)
    assert A.n_states == 5
    out = (A.delta >= 0).sum(axis=1)
    assert out[A.start] == 4
    assert sorted(out[i] for i in range(5) if i != A.start) == [3, 3, 3, 3]
    assert [transfer_counts(A, n) for n in range(7)] == [1] + [4 * 3 ** (n - 1) for n in range(1, 7)]
    assert transfer_counts(A, 3) == 36 and transfer_counts(A, 0) == 1
    assert A.to_json()["flag"] == HONESTY_FLAG


def test_free_semigroup_automaton(F2):
    A = build_cone_automaton(F2, GenTuple.parse("a b", symmetric=False), N_validate=6)
    assert A.n_states == 1
    assert A.transfer_matrix().tolist() == [[2]]
    assert transfer_counts(A, 7) == 128


def test_three_generators_match_census(F2):
    t = GenTuple.parse("a b ab")
    A = build_cone_automaton(F2, t, N_validate=10)
    c = enumerate_ball(F2, t, 10)
    assert A.counts(10) == c.sphere_sizes
    assert A.validation_radius == 10


@pytest.mark.parametrize("text", ["a b ab", "a bb", "a b aB"])
def test_one_geodesic_per_element(F2, text):
    t = GenTuple.parse(text)
    A = build_cone_automaton(F2, t, N_validate=7)
    c = enumerate_ball(F2, t, 4)
    for n in range(5):
        words = accepted_words(A, n)
        spelled = {c.spell(w) for w in words}
        assert len(spelled) == len(words)
        assert spelled == set(c.elements(n))


def test_prefix_closed_and_trimmed(F2):
    A = build_cone_automaton(F2, GenTuple.parse("a b ab"), N_validate=8)
    for w in accepted_words(A, 4):
        assert A.accepts(w[:-1])
    # every state is reachable from the start
    seen, stack = {A.start}, [A.start]
    while stack:
        s = stack.pop()
        for j in A.delta[s]:
            if j >= 0 and int(j) not in seen:
                seen.add(int(j))
                stack.append(int(j))
    assert seen == set(range(A.n_states))


def test_rebuild_is_identical(F2):
    t = GenTuple.parse("a b aab")
    A = build_cone_automaton(F2, t, N_validate=8)
    B = build_cone_automaton(F2, t, N_validate=8)
    assert np.array_equal(A.delta, B.delta) and A.witnesses == B.witnesses
    assert A.to_json() == B.to_json()


def test_witnesses_spell_shortlex_representatives(F2):
    A = build_cone_automaton(F2, GenTuple.parse("a b ab"), N_validate=8)
    for i, w in enumerate(A.witnesses):
        s = A.start
        for g in w:
            s = int(A.delta[s, g])
        assert s == i


def test_exports(F2, tmp_path):
    A = build_cone_automaton(F2, GenTuple.parse("a b"), N_validate=5)
    path = tmp_path / "a.json"
    A.dump_json(path)
    d = json.loads(path.read_text())
    assert d["matrix"] == A.transfer_matrix().tolist()
    assert len(d["states"]) == 5 and d["generators"] == ["a", "A", "b", "B"]
    dot = A.to_dot()
    assert dot.startswith("digraph") and dot.count("->") == 1 + 4 + 12


def test_fixed_k_tail_too_small_fails(F2):
    # a bigon of width 3 needs more than one step of history
    with pytest.raises(UnsupportedInstance):
        build_cone_automaton(F2, GenTuple.parse("Abba bA B"), k_tail=1, N_validate=6)


def test_validation_mismatch_reported(F2):
    from growthrate.cones import automaton_from_census, validate

    t = GenTuple.parse("Abba bA B")
    c = enumerate_ball(F2, t, 6, record_edges=True)
    A = automaton_from_census(c, F2, 1)
    with pytest.raises(ValidationMismatch):
        validate(A, c, 6)


def test_surface_automaton_prediction():
    G = surface_group(2)
    A = build_cone_automaton(G, GenTuple.parse("a b c d"), N_validate=6)
    assert A.counts(6) == [1, 8, 56, 392, 2736, 19096, 133288]
    # accepted language is a superset of the geodesic normal forms
    assert A.counts(7)[7] >= 930328


def test_negative_n_rejected(F2):
    A = build_cone_automaton(F2, GenTuple.parse("a b"), N_validate=4)
    with pytest.raises(ValueError):
        transfer_counts(A, -1)


def test_accepted_words_reduce_to_distinct(F2):
    t = GenTuple.parse("a b")
    A = build_cone_automaton(F2, t, N_validate=5)
    gens = A.generators
    words = accepted_words(A, 4)
    assert len({free_reduce(sum((gens[g] for g in w), ())) for w in words}) == 4 * 27
