import math
import random

import pytest

from growthrate.perron import RateEnclosure
from growthrate.ratescan import (
    EmptyStratum,
    RateRecord,
    ScanConfig,
    candidate_words,
    census_consistent,
    class_key,
    clusters,
    compute_rate,
    load_records,
    random_reduced_word,
    report_dn,
    report_wellorder,
    save_records,
    scan,
    tower_experiment,
)
from growthrate.subgroup import whitehead_type2
from growthrate.words import GenTuple, format_word, parse_word, substitute

pytestmark = pytest.mark.filterwarnings("ignore:generator")


@pytest.fixture(scope="module")
def f2_scan():
    return scan(ScanConfig(max_card=3, max_len=2, radius=8))


@pytest.fixture(scope="module")
def semigroup_scan():
    return scan(ScanConfig(mode="semigroup", max_card=2, max_len=2, radius=8))


def by_tuple(records):
    return {" ".join(r.tuple): r for r in records}


def test_scan_contains_basis_at_three(f2_scan):
    r = by_tuple(f2_scan)["a b"]
    assert abs(r.enclosure.lo - 3) < 1e-9 and abs(r.enclosure.hi - 3) < 1e-9
    assert r.canonical == ["a", "b"] and r.status == "ok" and r.validation_radius == 8


def test_scan_three_generators(f2_scan):
    r = by_tuple(f2_scan)["a b ab"]
    assert 3 < r.enclosure.lo and r.enclosure.hi < 5
    # frozen: spheres 6 * 4^(n-1)
    assert r.enclosure.lo == pytest.approx(4.0, abs=1e-9)
    assert by_tuple(f2_scan)["a b aa"].enclosure.lo == pytest.approx(1 + 2 * math.sqrt(2), abs=1e-9)


def test_scan_records_are_consistent(f2_scan):
    for r in f2_scan:
        assert census_consistent(r)
        assert (r.canonical is not None) == (r.mode == "group")
    keys = [r.class_key for r in f2_scan]
    assert len(keys) == len(set(keys))


def test_semigroup_scan(semigroup_scan):
    r = by_tuple(semigroup_scan)["a b"]
    assert r.enclosure.lo == r.enclosure.hi == 2.0
    assert report_dn(semigroup_scan, 2)["d_n"]["hi"] == 2.0


def test_wellorder_minimum(f2_scan):
    rep = report_wellorder(f2_scan)
    assert rep["minimum"]["rate"] == pytest.approx(3.0)
    assert rep["minimum"]["multiplicity"] == 1 and rep["minimum"]["tuples"] == [["a", "b"]]
    rates = [row["rate"] for row in rep["rows"]]
    assert rates == sorted(rates) and len(rep["gaps"]) == len(rates) - 1


def test_wellorder_singleton_and_empty(f2_scan):
    rep = report_wellorder(f2_scan[:1])
    assert len(rep["rows"]) == 1 and rep["gaps"] == []
    with pytest.raises(EmptyStratum):
        report_wellorder([])


def test_dn(f2_scan):
    assert report_dn(f2_scan, 2)["d_n"]["hi"] == pytest.approx(3.0)
    d3 = report_dn(f2_scan, 3)
    assert d3["d_n"]["lo"] == pytest.approx(1 + 2 * math.sqrt(2), abs=1e-9)
    assert d3["minimizers"][0]["tuple"] == ["a", "b", "aa"]
    with pytest.raises(EmptyStratum):
        report_dn(f2_scan, 7)


def test_whitehead_duplicate_is_one_class(tmp_path):
    moves = list(whitehead_type2(2))
    base = [parse_word("a"), parse_word("b"), parse_word("ab")]
    img = [substitute(w, moves[3]) for w in base]
    assert class_key(base, 2, "group") == class_key(img, 2, "group")
    assert class_key(base, 2, "group") != class_key(base[:2] + [parse_word("aa")], 2, "group")


def test_equal_classes_give_intersecting_enclosures(F2):
    moves = list(whitehead_type2(2))
    rng = random.Random(4)
    base = [parse_word(s) for s in ("a", "b", "aa")]
    ref = compute_rate(F2, GenTuple(tuple(base)), 8).enclosure
    for _ in range(3):
        mv = rng.choice(moves)
        img = [substitute(w, mv) for w in base]
        assert compute_rate(F2, GenTuple(tuple(img)), 8).enclosure.intersects(ref)


def test_semigroup_key_ignores_order_and_letters():
    a = [parse_word(s) for s in ("a", "ab")]
    b = [parse_word(s) for s in ("ba", "b")]
    assert class_key(a, 2, "semigroup") == class_key(b, 2, "semigroup")


def test_candidate_words():
    assert [format_word(w) for w in candidate_words(2, 1)] == ["a", "b"]
    assert len(candidate_words(2, 2)) == 2 + 6
    assert all(x % 2 == 0 for w in candidate_words(2, 3, positive=True) for x in w)


def test_persistence_round_trip(tmp_path, f2_scan):
    path = tmp_path / "rates.jsonl"
    save_records(f2_scan, path)
    assert load_records(path) == f2_scan
    save_records(f2_scan[:1], path, append=True)
    assert len(load_records(path)) == len(f2_scan) + 1


def test_scan_writes_file(tmp_path):
    path = tmp_path / "out.jsonl"
    recs = scan(ScanConfig(max_card=2, max_len=1, radius=6), out=path)
    assert load_records(path) == recs and len(recs) == 1


def test_failed_record_keeps_fekete_bound():
    r = RateRecord("F2", ["a"], None, 1, "group", RateEnclosure(0, 3.2, "fekete-upper-only", math.inf, ""), 0, None, 0.0, 0, status="failed")
    assert clusters([r]) == []
    assert census_consistent(r)


def test_tower_degenerate_word(F2):
    # adding b again changes nothing
    assert compute_rate(F2, GenTuple.parse("a b b"), 6).enclosure.hi == pytest.approx(3.0)


def test_tower_small():
    res = tower_experiment(1, (2, 4), seed=0, radius=7)
    lev = res["levels"][0]
    assert lev["limit"] == 5 and lev["all_below_limit"]
    assert [p["length"] for p in lev["points"]] == [2, 4]
    with pytest.raises(ValueError):
        tower_experiment(4)


def test_tower_level_two_below_seven():
    res = tower_experiment(2, (2, 3), seed=1, radius=6)
    lev2 = res["levels"][1]
    assert lev2["limit"] == 7 and lev2["all_below_limit"]


def test_random_reduced_word():
    w = random_reduced_word(random.Random(0), 2, 30)
    assert len(w) == 30 and all(w[i] != w[i + 1] ^ 1 for i in range(29))
