"""Exact ball and sphere enumeration in Cayley graphs.

The breadth-first search expands each sphere in order of its combing words
and tries generators in order, so the first time an element is discovered its
parent edge spells the shortlex-least geodesic.  The resulting parent
pointers are the geodesic combing used by :mod:`growthrate.cones`.

Free groups use a vectorized engine (words as padded ``uint8`` rows, exact
bit-packed keys for deduplication).  Dehn presentations use either the
half-swap normal form of :class:`~growthrate.words.DehnPresentation`
(``equality="canonical"``) or exact pairwise Dehn checks inside buckets of a
homomorphism invariant (``equality="pairwise"``).
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .words import (
    DehnPresentation,
    GenTuple,
    GroupOracle,
    Word,
    exponent_vector,
    format_word,
    free_reduce,
    inverse,
)

PAD = 255
DEFAULT_MAX_ELEMENTS = 10**8


class BudgetExceeded(RuntimeError):
    def __init__(self, msg, census):
        super().__init__(msg)
        self.census = census


class UnknownElement(KeyError):
    pass


@dataclass
class BallCensus:
    mode: str  # "group" or "semigroup"
    generators: list  # effective generator words, in shortlex-BFS order
    sphere_sizes: list
    parent: np.ndarray  # parent index, -1 for the identity
    gen: np.ndarray  # generator index of the parent edge, -1 for the identity
    radius: int
    complete: bool = True
    oracle_label: str = ""
    edges: np.ndarray | None = field(default=None, repr=False)  # see enumerate_ball
    _store: object = field(default=None, repr=False)
    _index: dict = field(default=None, repr=False)

    @property
    def ball_sizes(self) -> list:
        return list(np.cumsum(self.sphere_sizes).tolist())

    @property
    def n_elements(self) -> int:
        return int(sum(self.sphere_sizes))

    def sphere_offsets(self) -> list:
        offs = [0]
        for s in self.sphere_sizes:
            offs.append(offs[-1] + s)
        return offs

    def sphere_of(self) -> np.ndarray:
        """Sphere index of each element."""
        return np.repeat(np.arange(len(self.sphere_sizes)), self.sphere_sizes)

    def element(self, i: int) -> Word:
        return self._store.word(i)

    def elements(self, n: int | None = None) -> list:
        """Normal forms of the ball (or of sphere ``n``)."""
        offs = self.sphere_offsets()
        lo, hi = (0, offs[-1]) if n is None else (offs[n], offs[n + 1])
        return [self._store.word(i) for i in range(lo, hi)]

    def index_of(self, w: Sequence[int]) -> int:
        if self._index is None:
            self._index = self._store.build_index()
        key = self._store.key_of(tuple(w))
        try:
            return self._index[key]
        except KeyError:
            raise UnknownElement(format_word(w)) from None

    def children_matrix(self) -> np.ndarray:
        """``C[x, g]`` is the child of ``x`` along generator ``g`` in the combing tree, or -1."""
        n = self.n_elements
        C = np.full((n, len(self.generators)), -1, dtype=np.int64)
        idx = np.arange(1, n)
        C[self.parent[1:], self.gen[1:]] = idx
        return C

    def combing_indices(self, i: int) -> tuple:
        out = []
        while i > 0:
            out.append(int(self.gen[i]))
            i = int(self.parent[i])
        return tuple(reversed(out))

    def spell(self, gen_indices: Sequence[int]) -> Word:
        w: list = []
        for g in gen_indices:
            w.extend(self.generators[g])
        return free_reduce(w)

    def to_csv(self, path) -> None:
        bounds = dict(rate_upper_bounds(self))
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["n", "s_n", "beta_n", "upper_bound"])
            for n, (s, b) in enumerate(zip(self.sphere_sizes, self.ball_sizes)):
                ub = bounds.get(n)
                wr.writerow([n, s, b, "" if ub is None else repr(ub)])


# ---------------------------------------------------------------------------
# effective generators


def effective_generators(oracle: GroupOracle, t: GenTuple) -> list:
    """Normal forms of the effective generators; identity and repeats dropped."""
    out = []
    seen = set()
    for w in t.effective():
        nf = oracle.normal_form(w)
        if not nf:
            warnings.warn(f"generator {format_word(w)} is trivial; dropped", stacklevel=3)
            continue
        key = nf
        if key in seen:
            if not (t.symmetric and inverse(nf) == nf):
                warnings.warn(f"generator {format_word(w)} repeated; dropped", stacklevel=3)
            continue
        seen.add(key)
        out.append(nf)
    if not out:
        raise ValueError("generating tuple has no nontrivial generators")
    return out


# ---------------------------------------------------------------------------
# free-group engine


class _FreeStore:
    """Spheres of reduced words packed into uint64 columns.

    Letter ``x`` at position ``p`` is stored as ``x + 1`` in ``bits`` bits of
    column ``p // per``; zero marks the end of the word, so the packing is an
    exact key.
    """

    def __init__(self, rank: int, width: int):
        self.rank = rank
        self.width = width
        self.bits = max(1, int(2 * rank).bit_length())
        self.per = 64 // self.bits
        self.ncols = -(-width // self.per)
        self.mask = np.uint64((1 << self.bits) - 1)
        self.cols: list = []  # per sphere, (n, ncols) uint64
        self.lens: list = []
        self.hashes: list = []
        self._indexes: dict = {}  # sphere -> pd.Index of its hashes, built on first use
        self._cum = [0]

    def _where(self, pos):
        return pos // self.per, ((pos % self.per) * self.bits).astype(np.uint64)

    def pack_word(self, w: Word) -> np.ndarray:
        row = np.zeros(self.ncols, dtype=np.uint64)
        for p, x in enumerate(w):
            row[p // self.per] |= np.uint64(x + 1) << np.uint64((p % self.per) * self.bits)
        return row

    def hash(self, cols: np.ndarray) -> np.ndarray:
        h = np.full(len(cols), 0x9E3779B97F4A7C15, dtype=np.uint64)
        for j in range(self.ncols):
            h = (h ^ cols[:, j]) * np.uint64(0xBF58476D1CE4E5B9)
            h ^= h >> np.uint64(31)
        return h

    def add_sphere(self, cols, lens):
        self.cols.append(cols)
        self.lens.append(lens)
        self.hashes.append(self.hash(cols))
        self._cum.append(self._cum[-1] + len(lens))

    def hash_index(self, s: int) -> pd.Index:
        """Hash table of sphere ``s``, shared by every later lookup."""
        if s not in self._indexes:
            self._indexes[s] = pd.Index(self.hashes[s])
        return self._indexes[s]

    def locate(self, i: int):
        s = int(np.searchsorted(self._cum, i, side="right")) - 1
        return s, i - self._cum[s]

    def word(self, i: int) -> Word:
        s, j = self.locate(i)
        row, n = self.cols[s][j], int(self.lens[s][j])
        return tuple(
            int((row[p // self.per] >> np.uint64((p % self.per) * self.bits)) & self.mask) - 1
            for p in range(n)
        )

    def key_of(self, w: Word) -> bytes:
        if len(w) > self.width:
            return b""
        return self.pack_word(w).tobytes()

    def build_index(self) -> dict:
        idx = {}
        for s, cols in enumerate(self.cols):
            base = self._cum[s]
            for j in range(len(cols)):
                idx[cols[j].tobytes()] = base + j
        return idx

    def multiply(self, cols: np.ndarray, lens: np.ndarray, g: Word):
        """Right-multiply every packed reduced word by the reduced word ``g``."""
        n = len(lens)
        garr = np.array(g, dtype=np.int64)
        ell = len(g)
        c = np.zeros(n, dtype=np.int64)
        active = np.ones(n, dtype=bool)
        for i in range(ell):
            pos = lens - 1 - i
            ok = np.nonzero(active & (pos >= 0))[0]
            col, sh = self._where(pos[ok])
            letter = ((cols[ok, col] >> sh) & self.mask).astype(np.int64) - 1
            hit = np.zeros(n, dtype=bool)
            hit[ok] = letter == (garr[i] ^ 1)
            c += hit
            active = hit
        out = cols.copy()
        for i in range(ell):
            m = np.nonzero(i < c)[0]
            col, sh = self._where(lens[m] - 1 - i)
            out[m, col] &= ~(self.mask << sh)
        start = lens - c
        for j in range(ell):
            m = np.nonzero(j < ell - c)[0]
            col, sh = self._where(start[m] + j)
            out[m, col] |= (garr[c[m] + j] + 1).astype(np.uint64) << sh
        return out, start + (ell - c)


def _dedupe_exact(cols: np.ndarray, earlier: list) -> np.ndarray:
    keys = np.ascontiguousarray(cols).view(np.dtype((np.void, 8 * cols.shape[1]))).ravel()
    _, first = np.unique(keys, return_index=True)
    first.sort()
    fresh = np.ones(len(first), dtype=bool)
    for pc in earlier:
        if len(pc):
            pk = np.ascontiguousarray(pc).view(keys.dtype).ravel()
            fresh &= ~np.isin(keys[first], pk)
    return first[fresh]


def _first_occurrences(h: np.ndarray):
    """``(codes, first)``: dense ids in order of first appearance, and those positions."""
    codes, _ = pd.factorize(h)
    grew = np.diff(np.maximum.accumulate(codes), prepend=-1) > 0
    return codes, np.nonzero(grew)[0]


def _dedupe(store: _FreeStore, cols: np.ndarray, earlier: list):
    """First occurrences of words not in ``earlier`` spheres, and where every candidate lives.

    Returns ``(sel, loc)``: ``sel`` indexes the new words in order, and
    ``loc[c]`` is the global index candidate ``c`` will have once ``sel`` is
    appended as the next sphere.  Works on 64-bit hashes; every hash match is
    confirmed on the full packed words, and any collision falls back to exact
    comparison with ``loc = None``.
    """
    h = store.hash(cols)
    codes, first = _first_occurrences(h)

    def exact():
        return _dedupe_exact(cols, [store.cols[s] for s in earlier]), None

    if not np.array_equal(cols, cols[first[codes]]):
        return exact()
    hf, cf = h[first], cols[first]
    where = np.full(len(first), -1, dtype=np.int64)
    for s in earlier:
        if not len(store.hashes[s]):
            continue
        index = store.hash_index(s)
        if not index.is_unique:
            return exact()
        pos = index.get_indexer(hf)
        hit = np.nonzero(pos >= 0)[0]
        if len(hit) and not np.array_equal(cf[hit], store.cols[s][pos[hit]]):
            return exact()
        where[hit] = store._cum[s] + pos[hit]
    fresh = where < 0
    where[fresh] = store._cum[-1] + np.arange(int(fresh.sum()))
    return first[fresh], where[codes]


def _free_census(oracle, gens, N, semigroup, max_elements, chunk=1 << 18, edges=None):
    rank = oracle.alphabet.rank
    width = max(1, N * max(len(g) for g in gens))
    store = _FreeStore(rank, width)
    store.add_sphere(np.zeros((1, store.ncols), dtype=np.uint64), np.zeros(1, dtype=np.int64))
    sizes = [1]
    parents = [np.array([-1], dtype=np.int64)]
    gen_idx = [np.array([-1], dtype=np.int32)]
    G = len(gens)
    complete = True
    for n in range(1, N + 1):
        pc, pl = store.cols[-1], store.lens[-1]
        P = len(pl)
        if sum(sizes) + P * G > max_elements:
            complete = False
            break
        # candidate p*G + g is (parent p) * (generator g)
        cand = np.empty((P, G, store.ncols), dtype=np.uint64)
        candL = np.empty((P, G), dtype=np.int64)
        for lo in range(0, P, chunk):
            for gi, g in enumerate(gens):
                cand[lo : lo + chunk, gi], candL[lo : lo + chunk, gi] = store.multiply(
                    pc[lo : lo + chunk], pl[lo : lo + chunk], g
                )
        cand = cand.reshape(P * G, store.ncols)
        candL = candL.reshape(P * G)
        earlier = range(len(store.cols)) if semigroup else range(max(0, len(store.cols) - 2), len(store.cols))
        sel, loc = _dedupe(store, cand, list(earlier))
        base_prev = store._cum[-2]
        store.add_sphere(cand[sel], candL[sel])
        sizes.append(len(sel))
        parents.append(base_prev + sel // G)
        gen_idx.append((sel % G).astype(np.int32))
        if edges is not None:
            if loc is None:
                loc = _locate_many(store, cand, list(earlier) + [len(store.cols) - 1])
            edges.append(loc.reshape(P, G))
        if not semigroup:
            # group mode only ever looks back two spheres
            for s in [s for s in store._indexes if s < len(store.cols) - 2]:
                del store._indexes[s]
    return store, sizes, parents, gen_idx, complete


def _locate_many(store: _FreeStore, cols: np.ndarray, spheres: list) -> np.ndarray:
    """Global indices of packed words known to lie in the given spheres."""
    h = store.hash(cols)
    out = np.full(len(cols), -1, dtype=np.int64)
    for s in spheres:
        if not len(store.hashes[s]):
            continue
        index = store.hash_index(s)
        if not index.is_unique:
            break
        pos = index.get_indexer(h)
        hit = np.nonzero((pos >= 0) & (out < 0))[0]
        if len(hit) and not np.array_equal(store.cols[s][pos[hit]], cols[hit]):
            break
        out[hit] = store._cum[s] + pos[hit]
    else:
        if (out >= 0).all():
            return out
    # hash collision: exact lookup
    lookup = {}
    for s in spheres:
        for j, row in enumerate(store.cols[s]):
            lookup[row.tobytes()] = store._cum[s] + j
    return np.array([lookup[row.tobytes()] for row in cols], dtype=np.int64)


# ---------------------------------------------------------------------------
# Dehn engines


class _ListStore:
    def __init__(self):
        self.words: list = []

    def word(self, i):
        return self.words[i]

    def key_of(self, w):
        return w

    def build_index(self):
        return {w: i for i, w in enumerate(self.words)}


class _CanonicalStore(_ListStore):
    def __init__(self, oracle):
        super().__init__()
        self.oracle = oracle

    def key_of(self, w):
        return self.oracle.normal_form(w)

    def build_index(self):
        return {self.oracle.normal_form(w): i for i, w in enumerate(self.words)}


def _dehn_census_canonical(oracle: DehnPresentation, gens, N, semigroup, max_elements, edges=None):
    store = _CanonicalStore(oracle)
    store.words.append(())
    index = {(): 0}
    parent = [-1]
    gidx = [-1]
    sizes = [1]
    complete = True
    start = 0
    for n in range(1, N + 1):
        end = len(store.words)
        if end + (end - start) * len(gens) > max_elements:
            complete = False
            break
        for p in range(start, end):
            pw = store.words[p]
            row = []
            for gi, g in enumerate(gens):
                nf = oracle.normal_form(pw + g)
                j = index.get(nf)
                if j is None:
                    j = index[nf] = len(store.words)
                    store.words.append(nf)
                    parent.append(p)
                    gidx.append(gi)
                row.append(j)
            if edges is not None:
                edges.append(row)
        sizes.append(len(store.words) - end)
        start = end
    return store, sizes, parent, gidx, complete, index


class InvariantKey:
    """Homomorphism invariants used to bucket elements for exact pairwise checks.

    Combines the free part of the abelianization with the action on cosets of
    a few low-index subgroups (found by coset enumeration).  Equal elements
    always get equal keys; the converse is not assumed.
    """

    def __init__(self, oracle: DehnPresentation, max_index: int = 3, n_tables: int = 24):
        import sympy
        from sympy.combinatorics.fp_groups import FpGroup, low_index_subgroups
        from sympy.combinatorics.free_groups import free_group

        k = oracle.alphabet.rank
        relvecs = sympy.Matrix([list(exponent_vector(r, k)) for r in oracle.relators])
        null = relvecs.nullspace()
        proj = []
        for v in null:
            den = sympy.ilcm(*[x.q for x in v]) if v else 1
            proj.append([int(x * den) for x in v])
        self.proj = np.array(proj, dtype=np.int64).reshape(len(proj), k)
        F, *xs = free_group(" ".join(f"x{i}" for i in range(k)))

        def to_fw(w):
            out = F.identity
            for x in w:
                out = out * (xs[x >> 1] ** (-1 if x & 1 else 1))
            return out

        G = FpGroup(F, [to_fw(r) for r in oracle.relators])
        tables = []
        for C in low_index_subgroups(G, max_index):
            tab = C.table
            if len(tab) < 3:
                continue
            # columns of a coset table are ordered x0, x0^-1, x1, x1^-1, ... as in our letters
            perms = [tuple(row[x] for row in tab) for x in range(2 * k)]
            tables.append(perms)
        tables.sort(key=lambda t: -len(t[0]))
        self.tables = tables[:n_tables]
        self.rank = k
        # action of each letter on permutation ids, per table: step[x][t, pid] -> pid
        self._step = np.zeros((2 * k, len(self.tables), 24), dtype=np.int64)
        for t, perms in enumerate(self.tables):
            n = len(perms[0])
            allp = list(itertools.permutations(range(n)))
            pid = {q: i for i, q in enumerate(allp)}
            for x in range(2 * k):
                for i, q in enumerate(allp):
                    self._step[x, t, i] = pid[tuple(perms[x][j] for j in q)]
        self._rows = np.arange(len(self.tables))

    def __call__(self, w: Word):
        ab = tuple((self.proj @ np.array(exponent_vector(w, self.rank))).tolist()) if len(self.proj) else ()
        state = np.zeros(len(self.tables), dtype=np.int64)
        for x in w:
            state = self._step[x, self._rows, state]
        acts = state.tobytes()
        return ab, acts


def _dehn_census_pairwise(oracle: DehnPresentation, gens, N, semigroup, max_elements, keyfn=None, edges=None):
    keyfn = keyfn or InvariantKey(oracle)
    store = _CanonicalStore(oracle)
    store.words.append(())
    parent = [-1]
    gidx = [-1]
    sizes = [1]
    sphere = [0]
    buckets: dict = {keyfn(()): [0]}
    complete = True
    start = 0
    for n in range(1, N + 1):
        end = len(store.words)
        if end + (end - start) * len(gens) > max_elements:
            complete = False
            break
        lowest = 0 if semigroup else n - 2
        for p in range(start, end):
            pw = store.words[p]
            row = []
            for gi, g in enumerate(gens):
                w = oracle.dehn_reduce(pw + g)
                key = keyfn(w)
                bucket = buckets.setdefault(key, [])
                winv = inverse(w)
                found = None
                for j in bucket:
                    if sphere[j] >= lowest and oracle.is_identity(store.words[j] + winv):
                        found = j
                        break
                if found is None:
                    found = len(store.words)
                    bucket.append(found)
                    store.words.append(w)
                    parent.append(p)
                    gidx.append(gi)
                    sphere.append(n)
                row.append(found)
            if edges is not None:
                edges.append(row)
        sizes.append(len(store.words) - end)
        start = end
    return store, sizes, parent, gidx, complete


# ---------------------------------------------------------------------------


def enumerate_ball(
    oracle: GroupOracle,
    t: GenTuple,
    N: int,
    *,
    equality: str = "canonical",
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    strict_budget: bool = False,
    record_edges: bool = False,
) -> BallCensus:
    """Exact sphere sizes s_0..s_N of the Cayley graph of ``<t>`` in ``oracle``.

    ``t.symmetric`` selects group mode (inverses included) versus semigroup
    mode.  If the element budget would be exceeded the census stops at the
    last complete radius with ``complete=False`` (or raises
    :class:`BudgetExceeded` when ``strict_budget``).  With ``record_edges``
    the census also keeps ``edges[x, g]``, the index of ``x g``, for every
    ``x`` inside radius ``N - 1``.
    """
    if N < 0:
        raise ValueError("radius must be nonnegative")
    for w in t.words:
        oracle.alphabet.check(w)
    gens = effective_generators(oracle, t)
    semigroup = not t.symmetric
    edges = [] if record_edges else None
    if oracle.is_free:
        store, sizes, parents, gidx, complete = _free_census(
            oracle, gens, N, semigroup, max_elements, edges=edges
        )
        parent = np.concatenate(parents)
        gen = np.concatenate(gidx).astype(np.int32)
    else:
        if equality == "canonical":
            store, sizes, parent, gen, complete, index = _dehn_census_canonical(
                oracle, gens, N, semigroup, max_elements, edges=edges
            )
        elif equality == "pairwise":
            store, sizes, parent, gen, complete = _dehn_census_pairwise(
                oracle, gens, N, semigroup, max_elements, edges=edges
            )
            index = None
        else:
            raise ValueError(f"unknown equality procedure {equality!r}")
        parent = np.array(parent, dtype=np.int64)
        gen = np.array(gen, dtype=np.int32)
    c = BallCensus(
        mode="semigroup" if semigroup else "group",
        generators=gens,
        sphere_sizes=[int(s) for s in sizes],
        parent=parent,
        gen=gen,
        radius=len(sizes) - 1,
        complete=complete,
        oracle_label=getattr(oracle, "label", ""),
        _store=store,
    )
    if edges is not None:
        G = len(gens)
        if oracle.is_free:
            c.edges = np.concatenate(edges) if edges else np.zeros((0, G), dtype=np.int64)
        else:
            c.edges = np.array(edges, dtype=np.int64).reshape(len(edges), G)
    if not oracle.is_free and equality == "canonical":
        c._index = index
    if not complete and strict_budget:
        raise BudgetExceeded(f"element budget exceeded; completed radius {c.radius}", c)
    return c


def rate_upper_bounds(c: BallCensus) -> list:
    """Fekete bounds ``(n, beta_n ** (1/n))`` for n = 1..radius."""
    return [(n, float(b) ** (1.0 / n)) for n, b in enumerate(c.ball_sizes) if n >= 1]


def best_upper_bound(c: BallCensus) -> float:
    ub = rate_upper_bounds(c)
    return min(b for _, b in ub) if ub else math.inf


def geodesic_word(c: BallCensus, element: Sequence[int]) -> tuple:
    """Combing geodesic of ``element`` as a tuple of generator indices."""
    return c.combing_indices(c.index_of(element))
