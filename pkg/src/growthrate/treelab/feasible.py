"""Forbidden elements, feasible words and the counting pipeline.

Separators are thousands of letters long while ball elements are short, so
feasible words are never spelled out in full.  A word is kept as a list of
slices of registered segments; free reduction only touches the junctions,
and equality is decided by polynomial hashes with an exact comparison on
every hash match.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..census import BallCensus, enumerate_ball
from ..words import FreeGroup, GenTuple, Word, common_prefix, format_word, free_reduce, inverse, substitute
from .geometry import cancellation
from .separators import SeparatorSet

GROUP_NONFORBIDDEN = Fraction(5, 6)
SEMIGROUP_NONFORBIDDEN = Fraction(13, 14)
M_THRESHOLD_CAP = 10**12


def guaranteed_fraction(mode: str) -> Fraction:
    return SEMIGROUP_NONFORBIDDEN if mode == "semigroup" else GROUP_NONFORBIDDEN


# ---------------------------------------------------------------------------
# forbidden elements


def ball_words(t: GenTuple, m: int, rank: int | None = None) -> list:
    """``B_m`` of the tuple as reduced words of the ambient free group."""
    rank = rank or max(max(w) for w in t.words) // 2 + 1
    return enumerate_ball(FreeGroup.of_rank(rank), t, m).elements()


class _Nearest:
    """Distance (in letters) from a reduced word to a finite set of reduced words."""

    def __init__(self, words: Iterable[Word]):
        self.hmin: dict = {}
        for w in words:
            w = tuple(w)
            for k in range(len(w) + 1):
                p = w[:k]
                if self.hmin.get(p, 1 << 62) > len(w):
                    self.hmin[p] = len(w)
        self.depth = max((len(p) for p in self.hmin), default=0)

    def within(self, p: Sequence[int], radius: int):
        """A pair ``(distance, k)`` with distance ``<= radius`` if one exists, else ``None``.

        ``|x^-1 p| = |x| + |p| - 2 cp(x, p)``; for a fixed common prefix
        ``p[:k]`` the best ``x`` is the shortest word extending it.
        """
        n = len(p)
        lo = max(0, n - radius)
        best = None
        for k in range(lo, min(n, self.depth) + 1):
            h = self.hmin.get(tuple(p[:k]))
            if h is None:
                break
            d = h + n - 2 * k
            if d <= radius and (best is None or d < best[0]):
                best = (d, k)
        return best


@dataclass
class ForbiddenReport:
    mode: str
    m: int | None
    beta_m: int
    forbidden: list
    witnesses: dict = field(default_factory=dict)

    @property
    def beta_prime(self) -> int:
        return self.beta_m - len(self.forbidden)

    @property
    def fraction(self) -> Fraction:
        return Fraction(len(self.forbidden), self.beta_m)

    @property
    def bound(self) -> Fraction:
        return 1 - guaranteed_fraction(self.mode)

    @property
    def ok(self) -> bool:
        return self.fraction <= self.bound

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "m": self.m,
            "beta_m": self.beta_m,
            "beta_prime": self.beta_prime,
            "n_forbidden": len(self.forbidden),
            "fraction": str(self.fraction),
            "bound": str(self.bound),
            "ok": self.ok,
            "forbidden": [format_word(w) for w in self.forbidden],
            "witnesses": self.witnesses,
        }


def classify_forbidden(ball: BallCensus | Sequence[Word], seps: SeparatorSet, m: int | None = None) -> ForbiddenReport:
    """Split the ball into forbidden and non-forbidden elements.

    Group and kernel modes: ``w1 != 1`` is forbidden when some separator
    ``u`` continues ``w1`` without cancellation and ``w1 u`` lies within
    ``|u|/5`` of the ball.  Semigroup mode: some ``z`` loses at most
    ``|z|/40`` against ``w1`` and ``w1 z`` lies within ``3|z|/20`` of the ball.
    """
    if isinstance(ball, BallCensus):
        if m is None:
            m = ball.radius
        offs = ball.sphere_offsets()
        words = [ball.element(i) for i in range(offs[min(m, ball.radius) + 1])]
    else:
        words = [tuple(w) for w in ball]
    near = _Nearest(words)
    forbidden, witnesses = [], {}
    for w1 in words:
        if not w1:
            continue  # the identity is never forbidden
        hit = None
        for key in seps.keys:
            u = seps.elements[key]
            if seps.mode == "semigroup":
                c = cancellation(w1, u)
                if 40 * c > len(u):
                    continue
                p = w1[: len(w1) - c] + u[c:]
                found = near.within(p, (3 * len(u)) // 20)
            else:
                if seps.germs[key[0] - 1] == (w1[-1] ^ 1):
                    continue
                found = near.within(w1 + u, len(u) // 5)
            if found is not None:
                hit = (key, found[0])
                break
        if hit is not None:
            forbidden.append(w1)
            witnesses[format_word(w1)] = {"separator": list(_as_tuple(hit[0])), "distance_letters": hit[1]}
    return ForbiddenReport(seps.mode, m, len(words), forbidden, witnesses)


def _as_tuple(k):
    return k if isinstance(k, tuple) else (k,)


# ---------------------------------------------------------------------------
# sliced words


class SegmentRegistry:
    """Interned segments with prefix hashes, so any slice hashes in O(1)."""

    P = (1 << 61) - 1
    B = 1_000_003

    def __init__(self):
        self.words: list = []
        self.prefix: list = []
        self._ids: dict = {}

    def add(self, w: Sequence[int]) -> int:
        w = tuple(w)
        i = self._ids.get(w)
        if i is None:
            i = len(self.words)
            self._ids[w] = i
            self.words.append(w)
            h, acc = 0, [0]
            for x in w:
                h = (h * self.B + x + 1) % self.P
                acc.append(h)
            self.prefix.append(acc)
        return i

    def slice_hash(self, i: int, lo: int, hi: int) -> int:
        pre = self.prefix[i]
        return (pre[hi] - pre[lo] * pow(self.B, hi - lo, self.P)) % self.P

    def reduce(self, ids: Iterable[int]) -> list:
        """Freely reduce a product of segments; returns slices ``(id, lo, hi)``."""
        stack: list = []
        W = self.words
        for j in ids:
            lo, hi = 0, len(W[j])
            while stack and lo < hi:
                i, a, b = stack[-1]
                wi, wj = W[i], W[j]
                while a < b and lo < hi and wi[b - 1] ^ 1 == wj[lo]:
                    b -= 1
                    lo += 1
                if a == b:
                    stack.pop()
                else:
                    stack[-1] = (i, a, b)
                    break
            if lo < hi:
                stack.append((j, lo, hi))
        return stack

    def key(self, slices: Sequence[tuple]) -> tuple:
        h, n = 0, 0
        for i, lo, hi in slices:
            h = (h * pow(self.B, hi - lo, self.P) + self.slice_hash(i, lo, hi)) % self.P
            n += hi - lo
        return h, n

    def spell(self, slices: Sequence[tuple]) -> Word:
        return tuple(itertools.chain.from_iterable(self.words[i][lo:hi] for i, lo, hi in slices))


def _collisions(reg: SegmentRegistry, items: Iterable[tuple]):
    """Group ``(label, slices)`` by exact element; yields lists of labels sharing one."""
    buckets: dict = {}
    for label, slices in items:
        buckets.setdefault(reg.key(slices), []).append((label, slices))
    for group in buckets.values():
        if len(group) < 2:
            continue
        exact: dict = {}
        for label, slices in group:
            exact.setdefault(reg.spell(slices), []).append(label)
        for labels in exact.values():
            if len(labels) > 1:
                yield labels


# ---------------------------------------------------------------------------
# feasible words from ball elements


def count_feasible(beta_prime: int, q: int) -> int:
    """Constructive number of type-``q`` feasible words."""
    if q < 1:
        raise ValueError("q must be at least 1")
    return beta_prime**q


def _semigroup_choice(seps: SeparatorSet, left: Word, right: Word):
    for k in seps.keys:
        z = seps.elements[k]
        if 40 * cancellation(left, z) <= len(z) and 40 * cancellation(z, right) <= len(z):
            return k
    raise RuntimeError("no separator extends both sides; separators are not verified")


def separator_between(seps: SeparatorSet, left: Word, right: Word):
    if seps.mode == "semigroup":
        return _semigroup_choice(seps, left, right)
    return seps.choose(left, right)


def feasible_words(nonforbidden: Sequence[Word], seps: SeparatorSet, q: int):
    """All type-``q`` feasible words, as ``(pieces, separator keys)`` pairs."""
    for pieces in itertools.product(nonforbidden, repeat=q):
        keys = tuple(separator_between(seps, pieces[t], pieces[t + 1]) for t in range(q - 1))
        yield pieces, keys


@dataclass
class InjectivityReport:
    mode: str
    n_words: int
    n_distinct: int
    collisions: list  # each a list of labels of words with equal images
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.collisions and all(v for v in self.checks.values() if isinstance(v, bool))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_words": self.n_words,
            "n_distinct": self.n_distinct,
            "n_collisions": len(self.collisions),
            "collisions": self.collisions[:20],
            "checks": self.checks,
            "ok": self.ok,
        }


def feasible_injectivity_check(
    seps: SeparatorSet,
    nonforbidden: Sequence[Word],
    q: int,
    images: Sequence[Word] | None = None,
) -> InjectivityReport:
    """Images of all type-``q`` feasible words under ``h`` are pairwise distinct.

    ``images`` gives ``h`` on the ambient generators; ``None`` is the identity.
    Each collision is reported with the pieces and separators involved.
    """
    reg = SegmentRegistry()
    img = (lambda w: tuple(w)) if images is None else (lambda w: substitute(w, images))
    piece_ids = {w: reg.add(img(w)) for w in nonforbidden}
    sep_ids = {k: reg.add(img(u)) for k, u in seps.elements.items()}
    items = []
    for pieces, keys in feasible_words(nonforbidden, seps, q):
        ids = [piece_ids[pieces[0]]]
        for t, k in enumerate(keys):
            ids += [sep_ids[k], piece_ids[pieces[t + 1]]]
        label = " ".join(
            format_word(p) + (f" [{','.join(map(str, _as_tuple(keys[t])))}]" if t < len(keys) else "")
            for t, p in enumerate(pieces)
        )
        items.append((label, reg.reduce(ids)))
    coll = list(_collisions(reg, items))
    lost = sum(len(c) - 1 for c in coll)
    return InjectivityReport("image", len(items), len(items) - lost, coll)


# ---------------------------------------------------------------------------
# feasible words lifted from a regular language of geodesics


def _lift_letters(automaton_gens: Sequence[Word], tuple_words: Sequence[Word]) -> list:
    """Letter of the domain free group lifting each automaton generator."""
    out = []
    for g in automaton_gens:
        for i, w in enumerate(tuple_words):
            if tuple(g) == tuple(w):
                out.append(2 * i)
                break
            if tuple(g) == inverse(w):
                out.append(2 * i + 1)
                break
        else:
            raise ValueError(f"generator {format_word(g)} is not a tuple word or its inverse")
    return out


def language_words(delta, start: int, length: int):
    """Accepted generator-index words of the given length, in lexicographic order."""
    stack = [(start, ())]
    while stack:
        s, w = stack.pop()
        if len(w) == length:
            yield w
            continue
        row = delta[s]
        for g in range(len(row) - 1, -1, -1):
            if row[g] >= 0:
                stack.append((int(row[g]), w + (g,)))


def split_forbidden(block: Word, k: int, v: Word) -> bool:
    """``w_p^k v`` passes within ``|v|/5`` of some prefix ``w_p^f``, ``1 <= f <= m``."""
    m = len(block)
    c = cancellation(block[:k], v)
    n = k + len(v) - 2 * c
    head = block[: k - c] + tuple(v[c : c + m])  # only the first m letters of w_p^k v matter
    for f in range(1, m + 1):
        x = block[:f]
        if 5 * (f + n - 2 * common_prefix(x, head)) <= len(v):
            return True
    return False


def lifted_injectivity_check(
    seps: SeparatorSet,
    automaton,
    tuple_words: Sequence[Word],
    m: int,
    q: int,
    *,
    strict_choice: bool = True,
) -> InjectivityReport:
    """Exhaustive check that feasible words built from geodesics are distinct.

    Every accepted word of length ``m q`` of ``automaton`` (a geodesic
    language of the quotient, over ``tuple_words`` and inverses) is lifted
    letter by letter to the free group on the tuple, cut into ``q`` blocks,
    and each block ``w`` is split as ``w_p^k v w_s^k`` for every
    non-forbidden ``k``.  The report checks two things.  All feasible words
    are distinct elements upstairs.  The kernel epimorphism sends each one
    to the element of its geodesic, so words from different geodesics have
    different images downstairs.
    """
    if seps.kernel is None:
        raise ValueError("lifted check needs kernel separators")
    lift = _lift_letters(automaton.generators, tuple_words)
    reg = SegmentRegistry()
    sep_ids = {k: reg.add(v) for k, v in seps.elements.items()}
    h = seps.kernel.apply
    nf_gamma = lambda gw: free_reduce(itertools.chain.from_iterable(automaton.generators[g] for g in gw))

    def choose(left, right):
        keys = seps.admissible(left, right)
        if keys:
            return keys[0]
        if strict_choice:
            raise RuntimeError("no admissible separator")
        return seps.keys[0]

    kernel_ok = all(not h(v) for v in seps.elements.values())
    items, images_ok, n_geo = [], True, 0
    image_of: dict = {}
    forbidden_count = 0
    for gw in language_words(automaton.delta, automaton.start, m * q):
        n_geo += 1
        lifted = tuple(lift[g] for g in gw)
        blocks = [lifted[t * m : (t + 1) * m] for t in range(q)]
        options = []
        for b in blocks:
            opts = []
            for k in range(1, m):
                v = choose(b[:k], b[k:])
                if split_forbidden(b, k, seps.elements[v]):
                    forbidden_count += 1
                    continue
                opts.append((k, v))
            options.append(opts)
        target = nf_gamma(gw)
        # separators die under h, so every feasible word maps to h(lifted)
        if h(lifted) != target:
            images_ok = False
        if target in image_of:
            images_ok = False  # two language words name one element
        image_of[target] = gw
        for choice in itertools.product(*options):
            ids, label = [], []
            for t, (b, (k, v)) in enumerate(zip(blocks, choice)):
                if t:
                    prev_b, prev_k = blocks[t - 1], choice[t - 1][0]
                    vh = choose(prev_b[prev_k:], b[:k])
                    ids.append(sep_ids[vh])
                    label.append(f"^{','.join(map(str, vh))}")
                ids += [reg.add(b[:k]), sep_ids[v], reg.add(b[k:])]
                label.append(f"{format_word(b[:k])}|{','.join(map(str, v))}|{format_word(b[k:])}")
            items.append((" ".join(label), reg.reduce(ids)))
    coll = list(_collisions(reg, items))
    lost = sum(len(c) - 1 for c in coll)
    return InjectivityReport(
        "lift",
        len(items),
        len(items) - lost,
        coll,
        checks={
            "separators_in_kernel": kernel_ok,
            "images_match_geodesics": images_ok,
            "geodesics": n_geo,
            "forbidden_splits": forbidden_count,
        },
    )


# ---------------------------------------------------------------------------
# numbers


def rate_lower_bound_pipeline(m: int, b: int, beta_prime: int) -> float:
    """``log(beta') / (m + b)``: a lower bound on the log growth rate."""
    if m < 1 or b < 0 or beta_prime < 1:
        raise ValueError("need m >= 1, b >= 0 and beta' >= 1")
    return math.log(beta_prime) / (m + b)


def guaranteed_bound(m: int, b: int, beta_m: int, mode: str = "group") -> float:
    """The same bound using only the guaranteed non-forbidden fraction."""
    return (math.log(beta_m) + math.log(guaranteed_fraction(mode))) / (m + b)


def m_threshold(b: int, r: float) -> int:
    """Least integer ``m >= 2`` with ``log m > 2 b log r - log(5/6)``."""
    if b < 1 or not r > 1:
        raise ValueError("need b >= 1 and r > 1")
    x = 2 * b * math.log(r) - math.log(5 / 6)
    if x > math.log(M_THRESHOLD_CAP):
        raise OverflowError(f"threshold exp({x:.3g}) exceeds {M_THRESHOLD_CAP:.0e}")
    m = max(2, math.floor(math.exp(x)) + 1)
    while not math.log(m) > x:
        m += 1
    while m > 2 and math.log(m - 1) > x:
        m -= 1
    return m
