"""Stallings graphs and Whitehead normal forms for tuples in free groups."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .words import (
    Alphabet,
    MalformedInput,
    Word,
    free_reduce,
    inverse,
    shortlex_key,
    substitute,
)


class NotGeneratingError(ValueError):
    """The tuple does not generate the whole free group."""


@dataclass(frozen=True)
class CoreGraph:
    """Folded core graph of a subgroup of ``F_rank``.

    ``edges`` holds ``(u, letter, v)`` for positive letters only; the inverse
    edge ``(v, letter ^ 1, u)`` is implicit.  Vertex 0 is the base point and
    vertices are numbered in BFS order from it (letters in alphabet order),
    so equal subgroups give equal graphs.
    """

    rank: int
    n_vertices: int
    edges: tuple

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def subgroup_rank(self) -> int:
        return self.n_edges - self.n_vertices + 1

    def adjacency(self) -> list:
        adj = [dict() for _ in range(self.n_vertices)]
        for u, x, v in self.edges:
            adj[u][x] = v
            adj[v][x ^ 1] = u
        return adj

    @property
    def is_complete(self) -> bool:
        return all(len(a) == 2 * self.rank for a in self.adjacency())

    @property
    def index(self) -> int | None:
        """Index in the ambient free group, or ``None`` when infinite."""
        return self.n_vertices if self.is_complete else None

    def contains(self, w: Sequence[int]) -> bool:
        adj = self.adjacency()
        v = 0
        for x in free_reduce(w):
            v = adj[v].get(x)
            if v is None:
                return False
        return v == 0

    @property
    def is_whole_group(self) -> bool:
        return self.n_vertices == 1 and self.n_edges == self.rank


class _Folder:
    def __init__(self):
        self.parent: list = []
        self.out: list = []  # per vertex: letter -> vertex (both orientations)

    def new(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def add_edge(self, u: int, x: int, v: int, pending: list) -> None:
        for a, y, b in ((u, x, v), (v, x ^ 1, u)):
            a = self.find(a)
            t = self.out[a].get(y)
            if t is None:
                self.out[a][y] = b
            else:
                pending.append((t, b))

    def merge(self, a: int, b: int, pending: list) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if len(self.out[a]) < len(self.out[b]):
            a, b = b, a
        self.parent[b] = a
        moved = self.out[b]
        self.out[b] = {}
        for y, t in moved.items():
            s = self.out[a].get(y)
            if s is None:
                self.out[a][y] = t
            else:
                pending.append((s, t))


def stallings_fold(words: Sequence[Word], rank: int) -> CoreGraph:
    """Folded core graph of the subgroup generated by ``words``."""
    alphabet = Alphabet(rank)
    fd = _Folder()
    base = fd.new()
    pending: list = []
    for w in words:
        w = free_reduce(w, alphabet)
        if not w:
            continue
        v = base
        for i, x in enumerate(w):
            nxt = base if i == len(w) - 1 else fd.new()
            fd.add_edge(v, x, nxt, pending)
            v = nxt
        while pending:
            a, b = pending.pop()
            fd.merge(a, b, pending)
    # resolve targets to representatives
    verts = {fd.find(v) for v in range(len(fd.parent))}
    adj = {v: {y: fd.find(t) for y, t in fd.out[v].items()} for v in verts}
    base = fd.find(base)
    # prune hanging trees (degree-1 vertices other than the base point)
    deg = {v: len(adj[v]) for v in verts}
    stack = [v for v in verts if deg[v] <= 1 and v != base]
    alive = set(verts)
    while stack:
        v = stack.pop()
        if v not in alive or v == base or deg[v] > 1:
            continue
        alive.discard(v)
        for y, t in adj[v].items():
            if t in alive:
                del adj[t][y ^ 1]
                deg[t] -= 1
                if deg[t] <= 1 and t != base:
                    stack.append(t)
        adj[v] = {}
    # canonical BFS numbering
    order = {base: 0}
    queue = deque([base])
    while queue:
        v = queue.popleft()
        for y in range(2 * rank):
            t = adj[v].get(y)
            if t is not None and t not in order:
                order[t] = len(order)
                queue.append(t)
    edges = sorted(
        (order[v], y, order[t]) for v in order for y, t in adj[v].items() if y % 2 == 0
    )
    return CoreGraph(rank, len(order), tuple(edges))


def generates_free_group(words: Sequence[Word], rank: int) -> bool:
    return stallings_fold(words, rank).is_whole_group


def nielsen_reduce(words: Sequence[Word], rank: int) -> tuple:
    """A Nielsen-reduced free basis of the subgroup generated by ``words``.

    Read off a BFS spanning tree of the core graph: each non-tree edge gives a
    basis element ``path(u) x path(v)^-1``.  Tree paths are geodesics, so the
    result is Nielsen reduced.  Each element is replaced by the shortlex-least
    of itself and its inverse and the basis is sorted.
    """
    g = stallings_fold(words, rank)
    adj = g.adjacency()
    path = {0: ()}
    tree = set()
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for y in range(2 * rank):
            t = adj[v].get(y)
            if t is not None and t not in path:
                path[t] = path[v] + (y,)
                tree.add((v, y, t))
                tree.add((t, y ^ 1, v))
                queue.append(t)
    basis = []
    for u, x, v in g.edges:
        if (u, x, v) in tree:
            continue
        basis.append(_orient(free_reduce(path[u] + (x,) + inverse(path[v]))))
    return tuple(sorted(basis, key=shortlex_key))


def _orient(w: Word) -> Word:
    return min(w, inverse(w), key=shortlex_key)


def normalize_tuple(words: Sequence[Word]) -> tuple:
    """Each word up to inversion, as a sorted tuple (the generating set is symmetric)."""
    return tuple(sorted((_orient(free_reduce(w)) for w in words), key=shortlex_key))


def tuple_length(words: Sequence[Word]) -> int:
    return sum(len(w) for w in words)


def whitehead_type1(rank: int):
    """Signed permutations of the generators, as images of each generator."""
    for perm in itertools.permutations(range(rank)):
        for signs in itertools.product((0, 1), repeat=rank):
            yield [((2 * perm[i]) ^ signs[i],) for i in range(rank)]


def whitehead_type2(rank: int):
    """Images of generators under the type-2 Whitehead automorphisms (multiplier letter a)."""
    for a in range(2 * rank):
        others = [i for i in range(rank) if i != a >> 1]
        for choice in itertools.product(range(4), repeat=len(others)):
            if not any(choice):
                continue
            images = [(2 * i,) for i in range(rank)]
            for i, c in zip(others, choice):
                x = 2 * i
                if c == 1:
                    images[i] = (x, a)
                elif c == 2:
                    images[i] = (a ^ 1, x)
                elif c == 3:
                    images[i] = (a ^ 1, x, a)
            yield images


def _apply(images, words) -> tuple:
    return normalize_tuple([substitute(w, images) for w in words])


def whitehead_canonical(
    words: Sequence[Word],
    rank: int,
    *,
    cap: int = 1_000_000,
    require_generating: bool = True,
):
    """Canonical representative of the Aut(F_rank)-orbit of a tuple.

    Peak reduction by type-2 Whitehead moves reaches the minimal total length;
    the finitely many minimal tuples are connected by length-preserving moves,
    and the representative is the least of them (after signed permutations).
    Returns ``(tuple, complete)``; ``complete`` is False if the minimal level
    set exceeded ``cap`` and the answer may depend on the input.
    """
    if not words:
        raise MalformedInput("empty tuple")
    if require_generating and not generates_free_group(words, rank):
        raise NotGeneratingError("tuple does not generate the free group")
    moves2 = list(whitehead_type2(rank))
    moves1 = list(whitehead_type1(rank))
    cur = normalize_tuple(words)
    # descend
    improved = True
    while improved:
        improved = False
        L = tuple_length(cur)
        for m in moves2:
            nxt = _apply(m, cur)
            if tuple_length(nxt) < L:
                cur, improved = nxt, True
                break
    L = tuple_length(cur)
    seen = {cur}
    queue = deque([cur])
    complete = True
    while queue:
        x = queue.popleft()
        for m in itertools.chain(moves2, moves1):
            y = _apply(m, x)
            ly = tuple_length(y)
            if ly < L:
                # a move shortened further: restart at the lower level
                return whitehead_canonical(y, rank, cap=cap, require_generating=False)
            if ly == L and y not in seen:
                seen.add(y)
                queue.append(y)
                if len(seen) > cap:
                    complete = False
                    queue.clear()
                    break
    best = min(seen, key=lambda t: (tuple(map(len, t)), tuple(map(shortlex_key, t))))
    return best, complete


def tuple_key(words: Sequence[Word], rank: int) -> tuple:
    """Hashable class key: Whitehead form for generating tuples, else symmetry-normalized."""
    if generates_free_group(words, rank):
        form, _ = whitehead_canonical(words, rank, require_generating=False)
        return ("aut", form)
    best = min(_apply(m, words) for m in whitehead_type1(rank))
    return ("sym", best)
