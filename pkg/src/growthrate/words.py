"""Words over free-group alphabets and word-problem oracles.

Letters are small integers: generator ``i`` is ``2*i`` and its inverse is
``2*i + 1``, so inversion is ``x ^ 1``.  In text, generators are ``a..z`` and
inverses ``A..Z``; the identity is the empty string.

A word is a plain ``tuple`` of letters.  Two oracles are provided:
:class:`FreeGroup` (normal form = free reduction) and
:class:`DehnPresentation` (a C'(1/6) presentation, word problem by Dehn's
algorithm).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Word = tuple


class MalformedInput(ValueError):
    pass


class SmallCancellationError(ValueError):
    """Raised when a presentation fails the C'(1/6) condition."""


def inv_letter(x: int) -> int:
    return x ^ 1


@dataclass(frozen=True)
class Alphabet:
    rank: int

    def __post_init__(self):
        if not 1 <= self.rank <= 26:
            raise MalformedInput(f"rank must be in 1..26, got {self.rank}")

    @property
    def size(self) -> int:
        return 2 * self.rank

    @property
    def letters(self) -> tuple:
        return tuple(range(2 * self.rank))

    @property
    def generators(self) -> tuple:
        return tuple(range(0, 2 * self.rank, 2))

    def __contains__(self, x) -> bool:
        return isinstance(x, int) and 0 <= x < 2 * self.rank

    def check(self, word: Iterable[int]) -> None:
        for x in word:
            if x not in self:
                raise MalformedInput(f"letter {x!r} not in alphabet of rank {self.rank}")


def letter_char(x: int) -> str:
    c = chr(ord("a") + x // 2)
    return c.upper() if x & 1 else c


def parse_word(text: str, alphabet: Alphabet | None = None) -> Word:
    """Parse ``"abA"`` into a letter tuple (not reduced)."""
    text = text.strip()
    if text in ("", "e", "1", "ε"):
        return ()
    out = []
    for ch in text:
        if "a" <= ch <= "z":
            out.append(2 * (ord(ch) - ord("a")))
        elif "A" <= ch <= "Z":
            out.append(2 * (ord(ch) - ord("A")) + 1)
        else:
            raise MalformedInput(f"bad character {ch!r} in word {text!r}")
    if alphabet is not None:
        alphabet.check(out)
    return tuple(out)


def format_word(w: Sequence[int]) -> str:
    return "".join(letter_char(x) for x in w)


def word_rank(w: Sequence[int]) -> int:
    return max(w) // 2 + 1 if w else 0


def free_reduce(raw: Iterable[int], alphabet: Alphabet | None = None) -> Word:
    """Cancel adjacent letter/inverse pairs with a stack."""
    out: list[int] = []
    for x in raw:
        if alphabet is not None and x not in alphabet:
            raise MalformedInput(f"letter {x!r} not in alphabet of rank {alphabet.rank}")
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse(w: Sequence[int]) -> Word:
    return tuple(x ^ 1 for x in reversed(w))


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i] != w[i + 1] ^ 1 for i in range(len(w) - 1))


def cyclic_reduce(w: Sequence[int]) -> Word:
    w = free_reduce(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == w[j] ^ 1:
        i += 1
        j -= 1
    return tuple(w[i : j + 1])


def shortlex_key(w: Sequence[int]):
    return (len(w), tuple(w))


def concat_reduced(u: Word, v: Word) -> Word:
    """Product of two reduced words (cancellation only at the junction)."""
    k = 0
    n = min(len(u), len(v))
    while k < n and u[-1 - k] == v[k] ^ 1:
        k += 1
    return u[: len(u) - k] + v[k:]


def common_prefix(u: Sequence[int], v: Sequence[int]) -> int:
    n = min(len(u), len(v))
    i = 0
    while i < n and u[i] == v[i]:
        i += 1
    return i


def substitute(w: Sequence[int], images: Sequence[Word]) -> Word:
    """Apply the homomorphism sending generator ``i`` to ``images[i]``."""
    out: list[int] = []
    for x in w:
        img = images[x >> 1]
        if x & 1:
            img = inverse(img)
        for y in img:
            if out and out[-1] == y ^ 1:
                out.pop()
            else:
                out.append(y)
    return tuple(out)


def exponent_vector(w: Sequence[int], rank: int) -> tuple:
    v = [0] * rank
    for x in w:
        v[x >> 1] += -1 if x & 1 else 1
    return tuple(v)


# ---------------------------------------------------------------------------
# oracles


class GroupOracle:
    """Common interface: ``normal_form``, ``mul``, ``is_identity``, ``equal``."""

    alphabet: Alphabet

    def normal_form(self, w: Iterable[int]) -> Word:  # pragma: no cover - interface
        raise NotImplementedError

    def reduce(self, w: Iterable[int]) -> Word:
        return self.normal_form(w)

    def mul(self, u: Sequence[int], v: Sequence[int]) -> Word:
        self.alphabet.check(u)
        self.alphabet.check(v)
        return self.normal_form(tuple(u) + tuple(v))

    def is_identity(self, w: Iterable[int]) -> bool:
        return len(self.reduce(w)) == 0

    def equal(self, u: Sequence[int], v: Sequence[int]) -> bool:
        return self.is_identity(tuple(u) + inverse(v))

    @property
    def is_free(self) -> bool:
        return False


@dataclass(frozen=True)
class FreeGroup(GroupOracle):
    alphabet: Alphabet

    @classmethod
    def of_rank(cls, k: int) -> "FreeGroup":
        return cls(Alphabet(k))

    def normal_form(self, w):
        return free_reduce(w, self.alphabet)

    def geodesic_closure(self, w) -> set:
        return {free_reduce(w, self.alphabet)}

    @property
    def is_free(self) -> bool:
        return True

    @property
    def label(self) -> str:
        return f"F{self.alphabet.rank}"


def symmetrize(relators: Iterable[Word]) -> list:
    """All cyclic permutations of each relator and of its inverse, deduplicated."""
    seen = set()
    out = []
    for r in relators:
        for base in (r, inverse(r)):
            for i in range(len(base)):
                c = base[i:] + base[:i]
                if c not in seen:
                    seen.add(c)
                    out.append(c)
    return out


def max_piece_ratio(relators: Sequence[Word]) -> Fraction:
    """Largest |piece| / |relator| over the symmetrized set (exhaustive)."""
    sym = symmetrize(relators)
    worst = Fraction(0)
    for r1, r2 in itertools.combinations(sym, 2):
        p = common_prefix(r1, r2)
        if p:
            worst = max(worst, Fraction(p, len(r1)), Fraction(p, len(r2)))
    return worst


@dataclass(frozen=True)
class DehnPresentation(GroupOracle):
    """A C'(1/6) presentation; ``reduce`` is Dehn's algorithm.

    Dehn-reduced words are not unique, so ``normal_form`` additionally closes
    the reduced word under length-preserving half-relator swaps and returns
    the shortlex-least word reached (restarting whenever a swap enables a
    further reduction).  Census code validates this against exact pairwise
    equality checks.
    """

    alphabet: Alphabet
    relators: tuple
    name: str = ""
    _long: dict = field(default=None, repr=False, compare=False)
    _half: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        rels = []
        for r in self.relators:
            self.alphabet.check(r)
            c = cyclic_reduce(r)
            if not c:
                raise MalformedInput("empty relator")
            rels.append(c)
        object.__setattr__(self, "relators", tuple(rels))
        ratio = max_piece_ratio(rels)
        if ratio >= Fraction(1, 6):
            raise SmallCancellationError(
                f"presentation fails C'(1/6): a piece covers {ratio} of a relator"
            )
        long_rules: dict = {}
        half_rules: dict = {}
        for r in symmetrize(rels):
            n = len(r)
            for ell in range(n // 2 + 1, n + 1):
                long_rules.setdefault(r[:ell], inverse(r[ell:]))
            if n % 2 == 0:
                half_rules.setdefault(r[: n // 2], []).append(inverse(r[n // 2 :]))
        object.__setattr__(self, "_long", long_rules)
        object.__setattr__(self, "_half", half_rules)

    @property
    def symmetrized(self) -> list:
        return symmetrize(self.relators)

    @property
    def label(self) -> str:
        return self.name or "dehn"

    def _window_lengths(self):
        return sorted({len(k) for k in self._long}, reverse=True)

    def dehn_reduce(self, w: Iterable[int]) -> Word:
        """Replace any subword that is more than half a relator until none is left."""
        w = list(free_reduce(w, self.alphabet))
        lengths = self._window_lengths()
        rules = self._long
        changed = True
        while changed:
            changed = False
            n = len(w)
            for i in range(n):
                for ell in lengths:
                    if i + ell > n:
                        continue
                    rep = rules.get(tuple(w[i : i + ell]))
                    if rep is not None:
                        w = list(free_reduce(w[:i] + list(rep) + w[i + ell :]))
                        changed = True
                        break
                if changed:
                    break
        return tuple(w)

    reduce = dehn_reduce

    def _half_swaps(self, w: Word):
        halves = self._half
        lengths = {len(k) for k in halves}
        for ell in lengths:
            for i in range(len(w) - ell + 1):
                reps = halves.get(w[i : i + ell])
                if reps:
                    for rep in reps:
                        yield w[:i] + rep + w[i + ell :]

    def normal_form(self, w: Iterable[int], cap: int = 100_000) -> Word:
        return min(self.geodesic_closure(w, cap), key=shortlex_key)

    def geodesic_closure(self, w: Iterable[int], cap: int = 100_000) -> set:
        """All words of minimal length reachable from ``w`` by Dehn reductions and half swaps."""
        w = self.dehn_reduce(w)
        while True:
            seen = {w}
            frontier = [w]
            shorter = None
            while frontier and shorter is None:
                nxt = []
                for x in frontier:
                    for y in self._half_swaps(x):
                        y = self.dehn_reduce(y)
                        if len(y) < len(w):
                            shorter = y
                            break
                        if y not in seen:
                            seen.add(y)
                            nxt.append(y)
                    if shorter is not None:
                        break
                frontier = nxt
                if len(seen) > cap:
                    raise RuntimeError("half-swap closure exceeded cap")
            if shorter is None:
                return seen
            w = shorter


def dehn_reduce(w: Sequence[int], oracle: DehnPresentation) -> Word:
    return oracle.dehn_reduce(w)


def mul(u: Sequence[int], v: Sequence[int], oracle: GroupOracle) -> Word:
    return oracle.mul(u, v)


# ---------------------------------------------------------------------------
# text formats


_PRES_RE = re.compile(r"^\s*gens\s*:\s*(?P<gens>[^;]*);\s*rels\s*:\s*(?P<rels>[^;]*);?\s*$")


def parse_presentation(text: str) -> GroupOracle:
    """Parse ``"gens: a,b; rels: abAB;"``.  No relators gives a free group."""
    m = _PRES_RE.match(text)
    if not m:
        raise MalformedInput(f"cannot parse presentation {text!r}")
    gens = [g.strip() for g in m.group("gens").split(",") if g.strip()]
    expected = [chr(ord("a") + i) for i in range(len(gens))]
    if gens != expected:
        raise MalformedInput(f"generators must be {','.join(expected)} in order, got {gens}")
    alphabet = Alphabet(len(gens))
    rels = [parse_word(r, alphabet) for r in m.group("rels").split(",") if r.strip()]
    if not rels:
        return FreeGroup(alphabet)
    return DehnPresentation(alphabet, tuple(rels), name=text.strip())


def surface_group(genus: int) -> DehnPresentation:
    """Standard presentation <a1,b1,...| [a1,b1]...[ag,bg]> with letters a,b,c,d,..."""
    if genus < 2:
        raise MalformedInput("genus must be at least 2 for C'(1/6)")
    rel = []
    for i in range(genus):
        x, y = 4 * i, 4 * i + 2
        rel += [x, y, x ^ 1, y ^ 1]
    return DehnPresentation(Alphabet(2 * genus), (tuple(rel),), name=f"surface{genus}")


def group_from_label(label: str) -> GroupOracle:
    """``F2``, ``F3``, ``surface2`` or a ``gens: ...; rels: ...;`` string."""
    s = label.strip()
    m = re.fullmatch(r"[Ff](\d+)", s)
    if m:
        return FreeGroup(Alphabet(int(m.group(1))))
    m = re.fullmatch(r"surface(\d+)", s)
    if m:
        return surface_group(int(m.group(1)))
    return parse_presentation(s)


@dataclass(frozen=True)
class GenTuple:
    """An ordered tuple of nonempty reduced words.

    ``symmetric=True`` (group/subgroup mode) means the effective generating
    set is the words together with their inverses; the closure is computed by
    :meth:`effective`, never stored.
    """

    words: tuple
    symmetric: bool = True

    def __post_init__(self):
        ws = tuple(tuple(w) for w in self.words)
        for w in ws:
            if not w:
                raise MalformedInput("generating tuple contains the empty word")
        object.__setattr__(self, "words", ws)

    @classmethod
    def parse(cls, text: str | Sequence[str], symmetric: bool = True, alphabet=None) -> "GenTuple":
        if isinstance(text, str):
            parts = [p for p in re.split(r"[\s,{}]+", text) if p]
        else:
            parts = list(text)
        return cls(tuple(free_reduce(parse_word(p, alphabet)) for p in parts), symmetric)

    def __len__(self):
        return len(self.words)

    @property
    def max_length(self) -> int:
        return max(len(w) for w in self.words)

    def effective(self) -> list:
        """Generator words used for the Cayley graph (inverses added when symmetric)."""
        out = []
        for w in self.words:
            out.append(w)
            if self.symmetric:
                out.append(inverse(w))
        return out

    def __str__(self):
        return "{" + ",".join(format_word(w) for w in self.words) + "}"
