"""Separators: long elements that glue ball elements without collisions.

Three shapes are supported, all verified exactly before they are returned:

``group``
    a 2x2 grid ``u[i, j] = s_i^b w^(n_1) z w^(n_2) z ... w^(n_K) s_j^-b`` with
    ``n_k = a_1 + i + 3j + 6k``; ``u[i, j]`` leaves the base point along
    germ ``i`` and arrives along germ ``j``.
``kernel``
    the same grid built from conjugates ``z_k r^(n_k) z_k^-1`` of a kernel
    element ``r``, so every separator dies under the given epimorphism.
``semigroup``
    three positive words ``z_i = u1 u2^(a_1 + i) u1 u2^(a_2 + i) ...`` with
    ``a_k = a_1 + 4(k - 1)``.

The overlap test is exact over *all* translates (see
:func:`~growthrate.treelab.geometry.max_overlap`), not over a finite window.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..words import (
    Word,
    cyclic_reduce,
    format_word,
    free_reduce,
    inverse,
    parse_word,
    substitute,
)
from .geometry import SuffixAutomaton, TreeMetric, end_germ, start_germ

# constant packs: (overlap fraction, minimum length)
GROUP_CONSTANTS = (Fraction(1, 10), 10)
SEMIGROUP_CONSTANTS = (Fraction(1, 20), 20)
MODES = ("group", "kernel", "semigroup")


class SearchExhausted(RuntimeError):
    def __init__(self, msg: str, params: dict):
        super().__init__(msg)
        self.params = params


class VerificationFailed(RuntimeError):
    def __init__(self, msg: str, witness):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class KernelSpec:
    """An epimorphism of free groups given on generators, and a kernel element."""

    images: tuple  # image word of each domain generator
    r: Word

    def apply(self, w: Sequence[int]) -> Word:
        return substitute(w, self.images)

    @classmethod
    def parse(cls, images: Sequence[str], r: str) -> "KernelSpec":
        return cls(tuple(free_reduce(parse_word(x)) for x in images), free_reduce(parse_word(r)))


@dataclass
class SeparatorSet:
    mode: str
    elements: dict  # (i, j) -> word for group/kernel, i -> word for semigroup
    rho: int
    germs: tuple = ()  # germ letters, indexed from 1 through germs[i - 1]
    gen_lengths: dict = field(default_factory=dict)  # length as a product of tuple generators
    provenance: str = "search"
    params: dict = field(default_factory=dict)
    kernel: KernelSpec | None = None
    min_length: Fraction | None = None  # certified: min d_Y(y0, u y0)
    overlap_fraction: Fraction | None = None  # certified: max overlap / length
    window: str = "all translates"

    @property
    def keys(self) -> list:
        return sorted(self.elements)

    @property
    def metric(self) -> TreeMetric:
        return TreeMetric(self.rho)

    @property
    def b(self) -> int:
        """Longest separator, measured in tuple generators."""
        return max(self.gen_lengths.values()) if self.gen_lengths else max(map(len, self.elements.values()))

    def constants(self) -> tuple:
        return SEMIGROUP_CONSTANTS if self.mode == "semigroup" else GROUP_CONSTANTS

    def admissible(self, left: Sequence[int], right: Sequence[int]) -> list:
        """Separators that can sit between ``left`` and ``right`` without cancellation."""
        if self.mode == "semigroup":
            return self.keys
        e, s = end_germ(left), start_germ(right)
        return [
            (i, j)
            for (i, j) in self.keys
            if self.germs[i - 1] != e and self.germs[j - 1] != s
        ]

    def choose(self, left: Sequence[int], right: Sequence[int]):
        """The first admissible separator key (the canonical choice)."""
        keys = self.admissible(left, right)
        if not keys:
            raise VerificationFailed("no admissible separator", (format_word(left), format_word(right)))
        return keys[0]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rho": self.rho,
            "germs": [format_word((g,)) for g in self.germs],
            "elements": {
                ",".join(map(str, k if isinstance(k, tuple) else (k,))): format_word(w)
                for k, w in sorted(self.elements.items())
            },
            "lengths": {
                ",".join(map(str, k if isinstance(k, tuple) else (k,))): len(w)
                for k, w in sorted(self.elements.items())
            },
            "gen_lengths": {
                ",".join(map(str, k if isinstance(k, tuple) else (k,))): n
                for k, n in sorted(self.gen_lengths.items())
            },
            "provenance": self.provenance,
            "params": self.params,
            "kernel": None
            if self.kernel is None
            else {"images": [format_word(x) for x in self.kernel.images], "r": format_word(self.kernel.r)},
            "min_length": None if self.min_length is None else str(self.min_length),
            "overlap_fraction": None if self.overlap_fraction is None else str(self.overlap_fraction),
            "window": self.window,
        }


# ---------------------------------------------------------------------------
# verification


@dataclass
class Verification:
    ok: bool
    failures: list
    min_length: Fraction
    overlap_fraction: Fraction


def _overlaps(elements: dict):
    """Yield ``(k1, k2, overlap)`` for every ordered pair of separators."""
    keys = sorted(elements)
    sams = {k: SuffixAutomaton(elements[k]) for k in keys}
    for k1 in keys:
        s = sams[k1]
        rep = s.longest_repeat()
        for k2 in keys:
            v = elements[k2]
            ov = s.longest_common(inverse(v))
            ov = max(ov, rep if k1 == k2 else s.longest_common(v))
            yield k1, k2, ov


def pigeonhole_ok(zs: Sequence[Word]):
    """Exact check of the three-way extension property over all ``w1, w2``.

    ``w1 z`` loses more than ``|z|/40`` letters exactly when ``w1^-1`` starts
    with the first ``|z|//40 + 1`` letters of ``z``; likewise on the right
    with ``z^-1``.  A pair ``(w1, w2)`` defeats every ``z_i`` iff the indices
    split into a left part whose prefixes form a chain and a right part whose
    suffix words form a chain.  Returns ``(ok, witness)``.
    """
    n = len(zs)
    P = [z[: len(z) // 40 + 1] for z in zs]
    Q = [inverse(z)[: len(z) // 40 + 1] for z in zs]

    def chain(words):
        ws = sorted(words, key=len)
        return all(ws[k + 1][: len(ws[k])] == ws[k] for k in range(len(ws) - 1))

    for r in range(n + 1):
        for A in itertools.combinations(range(n), r):
            B = [i for i in range(n) if i not in A]
            if chain([P[i] for i in A]) and chain([Q[i] for i in B]):
                return False, (A, tuple(B))
    return True, None


def verify(seps: SeparatorSet) -> Verification:
    """Check every invariant of the separator mode; never assumes them."""
    failures = []
    frac, min_len = seps.constants()
    lengths = {k: len(w) for k, w in seps.elements.items()}
    for k, w in seps.elements.items():
        if free_reduce(w) != tuple(w):
            failures.append(("not reduced", k))
    if seps.mode in ("group", "kernel"):
        for (i, j), u in seps.elements.items():
            if not u or start_germ(u) != seps.germs[i - 1] or end_germ(u) != seps.germs[j - 1]:
                failures.append(("germ", (i, j), format_word(u[:1]), format_word(u[-1:])))
    if seps.mode == "kernel":
        for k, v in seps.elements.items():
            if seps.kernel is None or seps.kernel.apply(v):
                failures.append(("kernel", k))
    if seps.mode == "semigroup":
        if any(k not in seps.gen_lengths for k in seps.elements):
            failures.append(("positivity not recorded", None))
        ok, wit = pigeonhole_ok([seps.elements[k] for k in seps.keys])
        if not ok:
            failures.append(("pigeonhole", wit))
    for k, n in lengths.items():
        if n <= min_len * seps.rho:
            failures.append(("length", k, n))
    worst = Fraction(0)
    if not failures:
        for k1, k2, ov in _overlaps(seps.elements):
            # the bound is relative to the shorter segment of the pair
            ref = min(lengths[k1], lengths[k2])
            worst = max(worst, Fraction(ov, ref))
            if Fraction(ov, ref) > frac:
                failures.append(("overlap", k1, k2, ov))
                break
    return Verification(
        not failures,
        failures,
        Fraction(min(lengths.values()), seps.rho),
        worst,
    )


# ---------------------------------------------------------------------------
# constructions


def _power(w: Word, n: int) -> Word:
    return free_reduce(w * n) if n >= 0 else free_reduce(inverse(w) * (-n))


def _mu(w: Word, rho: int) -> Fraction:
    return Fraction(len(free_reduce(w)), rho)


def _tr(w: Word, rho: int) -> Fraction:
    return Fraction(len(cyclic_reduce(w)), rho)


def _commute(u: Word, v: Word) -> bool:
    return free_reduce(u + v) == free_reduce(v + u)


def _germ_pair(words: Sequence[Word]):
    """Two tuple generators leaving the base point in distinct directions."""
    for a, b in itertools.combinations(range(len(words)), 2):
        if words[a][0] != words[b][0]:
            return a, b
    return None


def group_grid(s1, s2, w, z, beta, alpha1, blocks, step=6, germs=None) -> dict:
    """``u[i, j]`` of the group shape, as reduced words."""
    s = {1: s1, 2: s2}
    out = {}
    for i in (1, 2):
        for j in (1, 2):
            parts = [_power(s[i], beta)]
            for k in range(1, blocks + 1):
                if k > 1:
                    parts.append(z)
                parts.append(_power(w, alpha1 + step * (k - 1) + i + 3 * j))
            parts.append(_power(s[j], -beta))
            out[(i, j)] = free_reduce(itertools.chain.from_iterable(parts))
    return out


def kernel_grid(s1, s2, r, conj, beta, alpha1, blocks, step=6) -> dict:
    """``v[i, j]``: products of conjugates of ``r``, bracketed by powers of ``s_i``, ``s_j``."""
    s = {1: s1, 2: s2}
    out = {}
    for i in (1, 2):
        for j in (1, 2):
            parts = []
            for k in range(1, blocks + 1):
                c = conj[k - 1]
                block = c + _power(r, alpha1 + step * (k - 1) + i + 3 * j) + inverse(c)
                if k == 1:
                    block = _power(s[i], beta) + block + _power(s[i], -beta)
                elif k == blocks:
                    block = _power(s[j], beta) + block + _power(s[j], -beta)
                parts.append(block)
            out[(i, j)] = free_reduce(itertools.chain.from_iterable(parts))
    return out


def semigroup_triple(u1, u2, alpha1, blocks, step=4) -> dict:
    out = {}
    for i in (1, 2, 3):
        parts = []
        for k in range(1, blocks + 1):
            parts.append(u1)
            parts.append(_power(u2, alpha1 + step * (k - 1) + i))
        out[i] = free_reduce(itertools.chain.from_iterable(parts))
    return out


def _conjugators(r: Word, rank: int, count: int, rng: random.Random) -> list:
    """Distinct short conjugators whose blocks ``c r^n c^-1`` stay reduced and chain cleanly."""
    letters = range(2 * rank)
    cands = [
        (x, y)
        for x in letters
        for y in letters
        if y != x ^ 1 and y != r[0] ^ 1 and y != r[-1]
    ]
    rng.shuffle(cands)
    out: list = []
    for length in (2, 3, 4):
        if length > 2:
            cands = [
                c + (y,)
                for c in cands
                for y in letters
                if y != c[-1] ^ 1 and y != r[0] ^ 1 and y != r[-1]
            ]
            rng.shuffle(cands)
        for c in cands:
            if len(out) == count:
                return out
            if c in out or (out and out[-1][0] == c[0]):
                continue
            out.append(c)
    if len(out) < count:
        raise SearchExhausted("not enough conjugators", {"count": count})
    return out


def find_separators(
    words: Sequence[Word],
    mode: str = "group",
    *,
    rank: int | None = None,
    kernel: KernelSpec | None = None,
    seed: int = 0,
    blocks: Sequence[int] | None = None,
    alphas: Sequence[int] = (1, 2, 4, 8, 16, 32, 64, 128, 256),
    use_recipe: bool = True,
) -> SeparatorSet:
    """A verified separator set for the tuple ``words`` (tuple generators as words).

    The search walks over block counts and first exponents, smallest first,
    and returns the first candidate that passes :func:`verify`.  If none
    does, the recipe constants are tried; ``provenance`` records which path
    produced the set.
    """
    if mode not in MODES:
        raise ValueError(f"unknown separator mode {mode!r}")
    words = [free_reduce(w) for w in words]
    rank = rank or max(max(w) for w in words) // 2 + 1
    if rank < 2:
        raise ValueError("ambient free group must have rank at least 2")
    rho = max(len(w) for w in words)
    rng = random.Random(seed)
    tried = []

    if mode == "semigroup":
        if len(words) < 2:
            raise ValueError("semigroup separators need two generators")
        pairs = [(a, b) for a in range(len(words)) for b in range(len(words)) if a != b]
        a, b = pairs[0]
        u1, u2 = words[a] + words[b], words[b] + words[a]
        g1 = g2 = 2  # both are products of two tuple generators
        if _commute(u1, u2) or not cyclic_reduce(u2):
            raise SearchExhausted("no hyperbolic non-commuting pair", {"pair": (a, b)})
        ladder = blocks or (20, 30, 40, 50, 60, 80, 100)

        def build(K, a1):
            el = semigroup_triple(u1, u2, a1, K)
            gl = {i: K * g1 + g2 * sum(a1 + 4 * k + i for k in range(K)) for i in (1, 2, 3)}
            return SeparatorSet("semigroup", el, rho, (), gl, params={"u1": format_word(u1), "u2": format_word(u2), "blocks": K, "alpha1": a1, "step": 4})

        def recipe():
            a1 = max(200, _ceil(max(20 * (_mu(u1, rho) + _mu(u2, rho)), 1) / _tr(u2, rho)))
            return build(50, a1)

    else:
        pair = _germ_pair(words)
        if pair is None:
            raise SearchExhausted("tuple leaves the base point in a single direction", {})
        a, b = pair
        s1, s2 = words[a], words[b]
        germs = (s1[0], s2[0])
        if mode == "group":
            w, z = _pick_wz(words, s1, s2, rng)
            gw, gz = w[1], z[1]
            w, z = w[0], z[0]
            ladder = blocks or (10, 20, 30, 40, 50)

            def build(K, a1, beta=None):
                beta = beta or _beta(s1, s2, w, rho)
                el = group_grid(s1, s2, w, z, beta, a1, K)
                gl = {
                    (i, j): 2 * beta + (K - 1) * gz + gw * sum(a1 + 6 * k + i + 3 * j for k in range(K))
                    for i in (1, 2)
                    for j in (1, 2)
                }
                return SeparatorSet("group", el, rho, germs, gl, params={"w": format_word(w), "z": format_word(z), "beta": beta, "alpha1": a1, "blocks": K, "step": 6, "s": [format_word(s1), format_word(s2)]})

            def recipe():
                beta = _beta(s1, s2, w, rho)
                rhs = max(200 * _mu(w, rho), 20 * beta * (_mu(s1, rho) + _mu(s2, rho)), 20 * _mu(z, rho), 1)
                return build(30, _ceil(rhs / _tr(w, rho)), beta)

        else:
            if kernel is None:
                raise ValueError("kernel mode needs a KernelSpec")
            r = free_reduce(kernel.r)
            if not r or kernel.apply(r):
                raise ValueError("kernel element must be nontrivial and die under the epimorphism")
            r = cyclic_reduce(r)
            if r != free_reduce(kernel.r):
                raise ValueError("kernel element must be cyclically reduced")
            conj_all = _conjugators(r, rank, 64, rng)
            ladder = blocks or (10, 15, 20, 30)

            def build(K, a1, beta=None):
                conj = conj_all[:K]
                beta = beta or _beta(s1, s2, r + conj[0] + conj[-1], rho)
                el = kernel_grid(s1, s2, r, conj, beta, a1, K)
                return SeparatorSet("kernel", el, rho, germs, {}, params={"r": format_word(r), "beta": beta, "alpha1": a1, "blocks": K, "step": 6, "conjugators": [format_word(c) for c in conj], "s": [format_word(s1), format_word(s2)]}, kernel=kernel)

            def recipe():
                conj = conj_all[:30]
                mus = _mu(r, rho) + sum(_mu(c, rho) for c in (conj[0], conj[1], conj[-2], conj[-1]))
                beta = max(
                    _beta_single(s1, max(5 * _mu(s1, rho), 5 * mus), rho),
                    _beta_single(s2, max(5 * _mu(s2, rho), 5 * mus), rho),
                )
                rhs = max(
                    200 * _mu(r, rho),
                    10 * beta * (_mu(s1, rho) + _mu(s2, rho)),
                    max(10 * _mu(c, rho) for c in conj),
                    1,
                )
                return build(30, _ceil(rhs / _tr(r, rho)), beta)

    for K in ladder:
        for a1 in alphas:
            cand = build(K, a1)
            res = verify(cand)
            tried.append((K, a1, res.failures[:1]))
            if res.ok:
                cand.min_length, cand.overlap_fraction = res.min_length, res.overlap_fraction
                cand.provenance = "search"
                return cand
            if res.failures[0][0] not in ("overlap", "length", "pigeonhole"):
                break  # germ or kernel failures do not improve with larger exponents
    if use_recipe:
        cand = recipe()
        res = verify(cand)
        if res.ok:
            cand.min_length, cand.overlap_fraction = res.min_length, res.overlap_fraction
            cand.provenance = "recipe"
            return cand
        raise VerificationFailed("recipe separators failed verification", res.failures)
    raise SearchExhausted("no separator candidate verified", {"tried": tried[-5:]})


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _beta_single(s: Word, bound: Fraction, rho: int) -> int:
    """Least beta with ``beta * tr(s) > bound``."""
    t = _tr(s, rho)
    return int(bound / t) + 1


def _beta(s1: Word, s2: Word, w: Word, rho: int) -> int:
    return max(
        _beta_single(s, max(5 * _mu(s, rho), 5 * _mu(w, rho)), rho) for s in (s1, s2)
    )


def _pick_wz(words, s1, s2, rng: random.Random):
    """Two products of tuple generators, hyperbolic, with all required pairs non-commuting.

    Returned as ``((word, generator_length), (word, generator_length))``.
    """
    gens = list(words) + [inverse(x) for x in words]
    cands = []
    for n in (2, 3):
        for combo in itertools.product(range(len(gens)), repeat=n):
            w = free_reduce(itertools.chain.from_iterable(gens[c] for c in combo))
            cw = cyclic_reduce(w)
            if cw and cw == w:
                cands.append((w, n))
    rng.shuffle(cands)
    cands.sort(key=lambda c: (c[1], len(c[0])))
    for (w, gw), (z, gz) in itertools.product(cands, repeat=2):
        if w == z or _commute(w, z):
            continue
        if any(_commute(x, y) for x in (w, z) for y in (s1, s2)):
            continue
        # keep the blocks w^n z w^m reduced at the junctions
        if z[0] == w[-1] ^ 1 or z[-1] == w[0] ^ 1:
            continue
        return (w, gw), (z, gz)
    raise SearchExhausted("no admissible pair (w, z)", {})


def conjugate_pair_separators(seps: SeparatorSet) -> SeparatorSet:
    """A deliberately invalid kernel set, for negative controls.

    ``v[1, 2] = g1 r g1^-1`` sits next to ``v[1, 1] = r`` (and symmetrically
    for the second germ), so the splits ``x1 | a x3`` and ``x1 a | x3`` of a
    block can land on the same element.  The set fails :func:`verify`.
    """
    if seps.kernel is None:
        raise ValueError("needs a kernel separator set")
    r = seps.kernel.r
    g1, g2 = seps.germs
    el = {
        (1, 1): r,
        (1, 2): free_reduce((g1,) + r + (g1 ^ 1,)),
        (2, 1): free_reduce((g2,) + r + (g2 ^ 1,)),
        (2, 2): r,
    }
    return SeparatorSet(seps.mode, el, seps.rho, seps.germs, {}, provenance="broken", params={"shape": "conjugate pairs"}, kernel=seps.kernel)
