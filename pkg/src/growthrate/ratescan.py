"""Scanning generating tuples, persisting rate records, and the reports built on them."""

from __future__ import annotations

import itertools
import json
import logging
import random
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .census import best_upper_bound, enumerate_ball
from .cones import build_cone_automaton
from .perron import RateEnclosure, fekete_enclosure, perron_enclosure
from .subgroup import generates_free_group, normalize_tuple, tuple_key
from .words import FreeGroup, GenTuple, GroupOracle, format_word, free_reduce, group_from_label, shortlex_key

log = logging.getLogger(__name__)

MODES = ("group", "subgroup", "semigroup")


class EmptyStratum(ValueError):
    pass


@dataclass
class RateRecord:
    group: str
    tuple: list  # words as strings
    canonical: list | None  # Whitehead form, only for tuples generating the whole group
    cardinality: int
    mode: str
    enclosure: RateEnclosure | None
    validation_radius: int
    k_tail: int | None
    timestamp: float
    seed: int
    class_key: str = ""
    status: str = "ok"
    error: str = ""
    n_states: int | None = None
    census_upper: float | None = None
    class_size: int = 1  # scanned tuples that fell into this class

    def to_json(self) -> str:
        d = asdict(self)
        d["enclosure"] = None if self.enclosure is None else self.enclosure.to_dict()
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "RateRecord":
        d = json.loads(line)
        if d.get("enclosure") is not None:
            d["enclosure"] = RateEnclosure.from_dict(d["enclosure"])
        return cls(**d)


def save_records(records: Iterable[RateRecord], path, append: bool = False) -> None:
    with open(path, "a" if append else "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def load_records(path) -> list:
    with open(path) as fh:
        return [RateRecord.from_json(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# single rates


@dataclass
class RateResult:
    enclosure: RateEnclosure
    automaton: object
    census_upper: float


def compute_rate(oracle: GroupOracle, t: GenTuple, radius: int = 10, tol: float = 1e-10, **kw) -> RateResult:
    """Certified growth rate of ``<t>`` via a validated cone automaton."""
    census = enumerate_ball(oracle, t, radius, record_edges=True, equality=kw.pop("equality", "canonical"))
    A = build_cone_automaton(oracle, t, N_validate=radius, census=census, **kw)
    enc = perron_enclosure(A.transfer_matrix(), tol=tol)
    return RateResult(enc, A, best_upper_bound(census))


# ---------------------------------------------------------------------------
# scanning


@dataclass
class ScanConfig:
    group: str = "F2"
    mode: str = "group"
    max_card: int = 2
    max_len: int = 2
    radius: int = 8
    tol: float = 1e-10
    seed: int = 0
    min_card: int = 1
    sample: int | None = None  # random subset of candidate tuples, drawn with ``seed``


def candidate_words(rank: int, max_len: int, positive: bool = False) -> list:
    """Reduced words up to ``max_len``: one of each inverse pair, or positive words only."""
    letters = range(0, 2 * rank, 2) if positive else range(2 * rank)
    out, frontier = [], [()]
    for _ in range(max_len):
        frontier = [w + (x,) for w in frontier for x in letters if not w or x != w[-1] ^ 1]
        out.extend(frontier)
    if not positive:
        out = sorted({normalize_tuple([w])[0] for w in out}, key=shortlex_key)
    return out


def semigroup_key(words: Sequence, rank: int) -> tuple:
    """Positive tuples up to reordering and permutations of the letters."""
    best = None
    for perm in itertools.permutations(range(rank)):
        img = tuple(sorted((tuple(2 * perm[x // 2] for x in w) for w in words), key=shortlex_key))
        key = (tuple(map(len, img)), tuple(map(shortlex_key, img)))
        if best is None or key < best[0]:
            best = (key, img)
    return ("semigroup", best[1])


def class_key(words: Sequence, rank: int, mode: str) -> tuple:
    if mode == "semigroup":
        return semigroup_key(words, rank)
    return tuple_key(words, rank)


def _key_str(key: tuple) -> str:
    return key[0] + ":" + ",".join(format_word(w) for w in key[1])


def candidate_tuples(cfg: ScanConfig, rank: int):
    words = candidate_words(rank, cfg.max_len, positive=cfg.mode == "semigroup")
    out = []
    for k in range(cfg.min_card, cfg.max_card + 1):
        out.extend(itertools.combinations(words, k))
    if cfg.sample is not None and cfg.sample < len(out):
        out = random.Random(cfg.seed).sample(out, cfg.sample)
    return out


def _generating(words, rank: int, mode: str) -> bool:
    if mode == "semigroup":
        return all((2 * i,) in set(map(tuple, words)) for i in range(rank))
    return generates_free_group(words, rank)


def scan(cfg: ScanConfig, out=None, progress: bool = False) -> list:
    """One record per class of tuples; failures are recorded, never raised.

    Group mode keeps tuples that generate the whole free group, subgroup
    mode keeps every tuple, semigroup mode uses positive words.  With
    ``out`` each record is appended to the JSON-lines file as it completes,
    and the file is rewritten at the end with the final class sizes.
    """
    if cfg.mode not in MODES:
        raise ValueError(f"unknown mode {cfg.mode!r}")
    oracle = group_from_label(cfg.group)
    if not oracle.is_free:
        raise ValueError("scanning enumerates tuples of a free group")
    rank = oracle.alphabet.rank
    if out is not None:
        Path(out).write_text("")
    records: dict = {}
    for words in candidate_tuples(cfg, rank):
        gen = _generating(words, rank, cfg.mode)
        if cfg.mode == "group" and not gen:
            continue
        key = class_key(words, rank, cfg.mode)
        if key in records:
            records[key].class_size += 1
            continue
        rec = _scan_one(oracle, words, key, cfg)
        records[key] = rec
        if out is not None:
            save_records([rec], out, append=True)
        if progress:
            log.info("%s %s %s", rec.status, rec.tuple, rec.enclosure and rec.enclosure.hi)
    recs = list(records.values())
    if out is not None:
        save_records(recs, out)  # final pass carries the class sizes
    return recs


def _scan_one(oracle, words, key, cfg: ScanConfig) -> RateRecord:
    t = GenTuple(tuple(words), symmetric=cfg.mode != "semigroup")
    rec = RateRecord(
        group=cfg.group,
        tuple=[format_word(w) for w in words],
        canonical=[format_word(w) for w in key[1]] if key[0] == "aut" else None,
        cardinality=len(words),
        mode=cfg.mode,
        enclosure=None,
        validation_radius=cfg.radius,
        k_tail=None,
        timestamp=time.time(),
        seed=cfg.seed,
        class_key=_key_str(key),
    )
    try:
        res = compute_rate(oracle, t, cfg.radius, cfg.tol)
        rec.enclosure, rec.k_tail = res.enclosure, res.automaton.k_tail
        rec.n_states, rec.census_upper = res.automaton.n_states, res.census_upper
    except Exception as exc:  # recorded, the scan goes on
        rec.status, rec.error = "failed", f"{type(exc).__name__}: {exc}"[:500]
        try:
            c = enumerate_ball(oracle, t, cfg.radius)
            rec.census_upper = best_upper_bound(c)
            rec.enclosure = fekete_enclosure(rec.census_upper)
        except Exception:
            pass
    return rec


# ---------------------------------------------------------------------------
# reports


def _ok(records: Iterable[RateRecord]) -> list:
    return [r for r in records if r.status == "ok" and r.enclosure is not None]


def clusters(records: Sequence[RateRecord]) -> list:
    """Chains of records with pairwise-linked (intersecting) enclosures, in rate order."""
    rs = sorted(_ok(records), key=lambda r: (r.enclosure.lo, r.enclosure.hi))
    out: list = []
    for r in rs:
        if out and r.enclosure.lo <= out[-1]["hi"]:
            c = out[-1]
            c["members"].append(r)
            c["hi"] = max(c["hi"], r.enclosure.hi)
        else:
            out.append({"lo": r.enclosure.lo, "hi": r.enclosure.hi, "members": [r]})
    return out


def report_wellorder(records: Sequence[RateRecord], width_flag: float = 1e-6) -> dict:
    """Sorted distinct rates with multiplicities, gaps and accumulation candidates.

    A cluster is flagged when its members are too wide to be ordered, which
    happens for failed or unconverged enclosures.
    """
    cs = clusters(records)
    if not cs:
        raise EmptyStratum("no certified records")
    rows = []
    for c in cs:
        rows.append(
            {
                "rate": 0.5 * (c["lo"] + c["hi"]),
                "lo": c["lo"],
                "hi": c["hi"],
                "multiplicity": len(c["members"]),
                "classes": [r.class_key for r in c["members"]],
                "tuples": [r.tuple for r in c["members"]],
                "flagged": (c["hi"] - c["lo"]) > width_flag,
            }
        )
    gaps = [rows[i + 1]["lo"] - rows[i]["hi"] for i in range(len(rows) - 1)]
    # heuristic: a value approached from below by strictly shrinking gaps
    accum = [
        rows[i + 1]["rate"]
        for i in range(2, len(gaps))
        if gaps[i] < gaps[i - 1] < gaps[i - 2]
    ]
    return {
        "n_records": len(_ok(records)),
        "n_failed": sum(r.status != "ok" for r in records),
        "rows": rows,
        "gaps": gaps,
        "accumulation_candidates": accum,
        "minimum": rows[0],
    }


def report_dn(records: Sequence[RateRecord], n: int) -> dict:
    """Smallest rate among generating classes of cardinality ``n`` (ties reported together)."""
    stratum = [
        r
        for r in _ok(records)
        if r.cardinality == n and (r.canonical is not None or (r.mode == "semigroup" and _covers(r)))
    ]
    if not stratum:
        raise EmptyStratum(f"no generating records of cardinality {n}")
    best = min(stratum, key=lambda r: r.enclosure.hi)
    ties = [r for r in stratum if r.enclosure.intersects(best.enclosure)]
    return {
        "n": n,
        "d_n": {"lo": best.enclosure.lo, "hi": best.enclosure.hi},
        "minimizers": [{"tuple": r.tuple, "class": r.class_key, "lo": r.enclosure.lo, "hi": r.enclosure.hi} for r in ties],
    }


def _covers(r: RateRecord) -> bool:
    rank = group_from_label(r.group).alphabet.rank
    letters = {chr(ord("a") + i) for i in range(rank)}
    return letters <= set(r.tuple)


def census_consistent(r: RateRecord, slack: float = 1e-9) -> bool:
    """Reported rate respects the census upper bound of the same run."""
    return r.enclosure is None or r.census_upper is None or r.enclosure.hi <= r.census_upper + slack


# ---------------------------------------------------------------------------
# towers


def random_reduced_word(rng: random.Random, rank: int, length: int) -> tuple:
    w: list = []
    while len(w) < length:
        x = rng.randrange(2 * rank)
        if w and x == w[-1] ^ 1:
            continue
        w.append(x)
    return tuple(w)


def tower_experiment(
    depth: int = 1,
    lengths: Sequence[int] = (2, 4, 8, 16),
    *,
    seed: int = 0,
    radius: int | None = None,
    tol: float = 1e-10,
    rank: int = 2,
) -> dict:
    """Rates of ``F_rank`` with the basis plus ``level`` random words, per word length.

    Each level's rates stay below the rate of the free group of rank
    ``rank + level`` with its basis, ``2 (rank + level) - 1``, and should
    climb towards it as the words get longer.
    """
    if not 1 <= depth <= 3:
        raise ValueError("depth must be between 1 and 3")
    oracle = FreeGroup.of_rank(rank)
    rng = random.Random(seed)
    basis = [(2 * i,) for i in range(rank)]
    levels = []
    for level in range(1, depth + 1):
        limit = 2 * (rank + level) - 1
        R = radius or {1: 9, 2: 7, 3: 6}[level]
        points = []
        for L in lengths:
            extra = []
            while len(extra) < level:
                w = random_reduced_word(rng, rank, L)
                if w not in extra and len(free_reduce(w)) == L:
                    extra.append(w)
            t = GenTuple(tuple(basis + extra))
            point = {"length": L, "words": [format_word(w) for w in extra], "radius": R}
            try:
                res = compute_rate(oracle, t, R, tol)
                point.update(lo=res.enclosure.lo, hi=res.enclosure.hi, k_tail=res.automaton.k_tail, n_states=res.automaton.n_states)
            except Exception as exc:
                point.update(lo=None, hi=None, error=f"{type(exc).__name__}: {exc}"[:300])
            points.append(point)
        his = [p["hi"] for p in points if p["hi"] is not None]
        levels.append(
            {
                "level": level,
                "limit": limit,
                "points": points,
                "all_below_limit": all(p["hi"] is not None and p["hi"] < limit for p in points),
                "final_above_first": len(his) >= 2 and points[-1]["lo"] is not None and points[0]["hi"] is not None and points[-1]["lo"] > points[0]["hi"],
            }
        )
    return {"depth": depth, "lengths": list(lengths), "seed": seed, "rank": rank, "levels": levels}

