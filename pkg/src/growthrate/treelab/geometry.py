"""The Cayley tree of a free group as a metric tree.

Vertices are reduced words; the segment from the base point ``()`` to ``w``
is the path spelled by ``w``.  Distances are word lengths divided by the
rescaling constant ``rho`` (the longest tuple generator), so every tuple
generator moves the base point by at most 1.  Everything is kept in integer
letter counts and compared with exact fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..words import Word, common_prefix, free_reduce, inverse


@dataclass(frozen=True)
class TreeMetric:
    rho: int = 1

    @classmethod
    def for_tuple(cls, words: Sequence[Word]) -> "TreeMetric":
        return cls(max(len(free_reduce(w)) for w in words))

    def length(self, w: Sequence[int]) -> Fraction:
        """``d_Y(y0, w y0)``."""
        return Fraction(len(free_reduce(w)), self.rho)

    def dist(self, u: Sequence[int], v: Sequence[int]) -> Fraction:
        return self.length(inverse(tuple(u)) + tuple(v))


def start_germ(w: Sequence[int]) -> int | None:
    """Direction at the base point in which ``[y0, w y0]`` leaves."""
    return w[0] if w else None


def end_germ(w: Sequence[int]) -> int | None:
    """Direction, translated back to the base point, in which ``[y0, w y0]`` arrives."""
    return w[-1] ^ 1 if w else None


def junction_reduced(u: Sequence[int], v: Sequence[int]) -> bool:
    """True when ``u v`` has no cancellation (``v`` leaves away from where ``u`` arrived)."""
    return not u or not v or start_germ(v) != end_germ(u)


def cancellation(u: Sequence[int], v: Sequence[int]) -> int:
    """Number of letters cancelled in the product of reduced words ``u v``."""
    return common_prefix(inverse(u), v)


# ---------------------------------------------------------------------------
# overlaps of translated segments


class SuffixAutomaton:
    """Suffix automaton of a sequence, with occurrence counts per state."""

    def __init__(self, s: Sequence[int]):
        self.link = [-1]
        self.len = [0]
        self.next: list = [{}]
        self.cnt = [0]
        last = 0
        for x in s:
            cur = len(self.len)
            self.len.append(self.len[last] + 1)
            self.link.append(-1)
            self.next.append({})
            self.cnt.append(1)
            p = last
            while p != -1 and x not in self.next[p]:
                self.next[p][x] = cur
                p = self.link[p]
            if p == -1:
                self.link[cur] = 0
            else:
                q = self.next[p][x]
                if self.len[p] + 1 == self.len[q]:
                    self.link[cur] = q
                else:
                    clone = len(self.len)
                    self.len.append(self.len[p] + 1)
                    self.link.append(self.link[q])
                    self.next.append(dict(self.next[q]))
                    self.cnt.append(0)
                    while p != -1 and self.next[p].get(x) == q:
                        self.next[p][x] = clone
                        p = self.link[p]
                    self.link[q] = clone
                    self.link[cur] = clone
            last = cur
        # endpos sizes, accumulated along suffix links from longest states down
        for v in sorted(range(1, len(self.len)), key=self.len.__getitem__, reverse=True):
            self.cnt[self.link[v]] += self.cnt[v]

    def longest_common(self, t: Sequence[int]) -> int:
        """Length of the longest common factor with ``t``."""
        v, ell, best = 0, 0, 0
        for x in t:
            while v and x not in self.next[v]:
                v = self.link[v]
                ell = self.len[v]
            if x in self.next[v]:
                v = self.next[v][x]
                ell += 1
            best = max(best, ell)
        return best

    def longest_repeat(self) -> int:
        """Length of the longest factor occurring at two or more positions."""
        return max((self.len[v] for v in range(1, len(self.len)) if self.cnt[v] >= 2), default=0)


def max_overlap(u: Word, v: Word, same: bool = False) -> int:
    """Longest common edge path of ``[y0, u y0]`` and ``[w y0, w v y0]`` over all ``w``.

    Two segments in a tree meet in a segment; its label is a common factor of
    ``u`` and either ``v`` or ``v^-1``, and every such factor is realized by a
    suitable translate ``w``.  With ``same=True`` (``u`` and ``v`` are the same
    separator) the translate ``w = 1`` is excluded, which removes exactly the
    aligned occurrence.
    """
    sam = SuffixAutomaton(u)
    best = sam.longest_common(inverse(v))
    if same:
        return max(best, sam.longest_repeat())
    return max(best, sam.longest_common(v))


def _edges(start: Sequence[int], w: Sequence[int]) -> set:
    """Unoriented edges of the path from ``start`` spelled by ``w``."""
    out, cur = set(), free_reduce(start)
    for x in w:
        nxt = free_reduce(cur + (x,))
        out.add(frozenset((cur, nxt)))
        cur = nxt
    return out


def overlap_in_window(u: Word, v: Word, radius: int, rank: int, same: bool = False) -> int:
    """Brute-force overlap of ``[y0, u y0]`` with ``[w y0, w v y0]`` over ``|w| <= radius``.

    Slow; used to cross-check :func:`max_overlap` on short words.
    """
    base = _edges((), u)
    best = 0
    frontier = [()]
    for n in range(radius + 1):
        for w in frontier:
            if same and not w:
                continue
            best = max(best, len(base & _edges(w, v)))
        frontier = [w + (x,) for w in frontier for x in range(2 * rank) if not w or x != w[-1] ^ 1]
    return best
