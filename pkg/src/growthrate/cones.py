"""Shortlex geodesic automata, built from census data and word differences.

A word over the generators is rejected as soon as a prefix has a competitor:
another word reaching the same element that is shorter, or of equal length
and lexicographically smaller.  Competitors are tracked through the
differences ``w(t)^-1 v(t)`` between the prefixes of the two words, kept
inside a finite set ``D``.  Every rejection is witnessed by an actual word,
so the accepted language always contains the shortlex geodesics; if ``D`` is
too small the automaton accepts too much, which census validation detects.
``D`` is harvested from the census equations ``comb(x) g = comb(x g)`` with
``|x| <= k_tail`` and ``k_tail`` grows until the path counts agree with the
census.

Agreement up to the validation radius stands in for a proof that ``D``
contains all word differences, so derived rates carry the label
``CERTIFIED-UPPER+EMPIRICAL-EXACT``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .census import BallCensus, enumerate_ball
from .words import GenTuple, GroupOracle, format_word, inverse

HONESTY_FLAG = "CERTIFIED-UPPER+EMPIRICAL-EXACT"


class ValidationMismatch(RuntimeError):
    pass


class UnsupportedInstance(RuntimeError):
    pass


@dataclass
class ConeAutomaton:
    generators: list  # effective generator words
    delta: np.ndarray  # (n_states, n_generators), -1 where undefined
    start: int
    k_tail: int
    build_radius: int
    validation_radius: int
    witnesses: list = field(default_factory=list)  # shortlex-least generator-index word per state
    n_differences: int = 0

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    def transfer_matrix(self) -> np.ndarray:
        n = self.n_states
        M = np.zeros((n, n), dtype=np.int64)
        src, g = np.nonzero(self.delta >= 0)
        np.add.at(M, (src, self.delta[src, g]), 1)
        return M

    def accepts(self, gen_indices) -> bool:
        s = self.start
        for g in gen_indices:
            s = int(self.delta[s, g])
            if s < 0:
                return False
        return True

    def counts(self, n_max: int) -> list:
        """Exact numbers of accepted words of length 0..n_max."""
        edges = [(int(i), int(j)) for i, g in zip(*np.nonzero(self.delta >= 0)) for j in [self.delta[i, g]]]
        v = [0] * self.n_states
        v[self.start] = 1
        out = [1]
        for _ in range(n_max):
            nv = [0] * self.n_states
            for i, j in edges:
                if v[i]:
                    nv[j] += v[i]
            v = nv
            out.append(sum(v))
        return out

    def to_json(self) -> dict:
        return {
            "generators": [format_word(w) for w in self.generators],
            "start": self.start,
            "states": [
                {
                    "id": i,
                    "witness": [format_word(self.generators[g]) for g in self.witnesses[i]]
                    if self.witnesses
                    else None,
                    "transitions": {
                        format_word(self.generators[g]): int(self.delta[i, g])
                        for g in range(self.delta.shape[1])
                        if self.delta[i, g] >= 0
                    },
                }
                for i in range(self.n_states)
            ],
            "matrix": self.transfer_matrix().tolist(),
            "k_tail": self.k_tail,
            "n_differences": self.n_differences,
            "build_radius": self.build_radius,
            "validation_radius": self.validation_radius,
            "flag": HONESTY_FLAG,
        }

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    def to_dot(self) -> str:
        lines = ["digraph cones {", "  rankdir=LR;", f'  init [shape=point]; init -> s{self.start};']
        for i in range(self.n_states):
            lines.append(f"  s{i} [shape=circle];")
            for g in range(self.delta.shape[1]):
                j = self.delta[i, g]
                if j >= 0:
                    lines.append(f'  s{i} -> s{j} [label="{format_word(self.generators[g])}"];')
        lines.append("}")
        return "\n".join(lines)


def transfer_counts(A: ConeAutomaton, n: int) -> int:
    """Number of accepted words of length ``n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return A.counts(n)[n]



# competitor status relative to the word being read, ranked by rejection
# power: a competitor that pads can only pad, one that is lex-greater can
# still reject by padding, one that is equal can still become smaller
PAD, GT, EQ, LT = 0, 1, 2, 3


class _Differences:
    """Finite set of group elements with memoized ``g^-1 d g'`` lookups."""

    def __init__(self, oracle: GroupOracle, generators: list, words: list):
        self.oracle = oracle
        self.gens = [tuple(g) for g in generators] + [()]  # last entry pads
        self.ginv = [inverse(g) for g in self.gens]
        self.words = []
        self.index: dict = {}
        for w in words:
            nf = oracle.normal_form(w)
            if nf not in self.index:
                self.index[nf] = len(self.words)
                self.words.append(nf)
        self._memo: dict = {}

    def add(self, w) -> int:
        i = self.index.get(w)
        if i is None:
            i = self.index[w] = len(self.words)
            self.words.append(w)
            self._memo.clear()
        return i

    def __len__(self):
        return len(self.words)

    def step(self, d: int, g: int, g2: int) -> int:
        key = (d, g, g2)
        r = self._memo.get(key)
        if r is None:
            w = self.oracle.normal_form(self.ginv[g] + self.words[d] + self.gens[g2])
            r = self._memo[key] = self.index.get(w, -1)
        return r


def _neighbor_table(census: BallCensus, oracle: GroupOracle) -> np.ndarray:
    """``E[x, g]`` = index of ``x g`` for ``x`` inside radius ``census.radius - 1``."""
    if census.edges is not None:
        return census.edges
    nf = oracle.normal_form
    n_in = census.ball_sizes[census.radius - 1] if census.radius >= 1 else 0
    index = {nf(census.element(i)): i for i in range(census.n_elements)}
    E = np.empty((n_in, len(census.generators)), dtype=np.int64)
    for x in range(n_in):
        w = census.element(x)
        for g, s in enumerate(census.generators):
            E[x, g] = index[nf(w + s)]
    census.edges = E
    return E


class _Harvest:
    """Word differences of minimal equations, collected sphere by sphere.

    A minimal non-shortlex word is ``comb(x) g`` where ``x g`` has a different
    combing word.  Both words are read backwards from their common endpoint
    (the shorter one padded at the end) and every prefix difference is added
    to ``D``.  All pairs of a sphere are walked at once; the table ``TB`` of
    backward steps ``g d h^-1`` is filled lazily.
    """

    def __init__(self, census: BallCensus, oracle: GroupOracle):
        self.census = census
        self.oracle = oracle
        self.G = len(census.generators)
        self.D = _Differences(oracle, census.generators, [oracle.normal_form(())])
        self.TB = np.full((16, self.G, self.G + 1), -1, dtype=np.int64)
        self.depth = census.sphere_of()
        self.parent = census.parent.astype(np.int64)
        self.gen = census.gen.astype(np.int64)
        self.edges = _neighbor_table(census, oracle)
        self.radius = -1

    def _back(self, d, g, h):
        missing = self.TB[d, g, h] < 0
        if missing.any():
            D, nf = self.D, self.oracle.normal_form
            trip = np.unique(np.stack([d[missing], g[missing], h[missing]], axis=1), axis=0)
            for dd, gg, hh in trip.tolist():
                r = D.add(nf(D.gens[gg] + D.words[dd] + D.ginv[hh]))
                if r >= len(self.TB):
                    grow = np.full((2 * r + 2, self.G, self.G + 1), -1, dtype=np.int64)
                    grow[: len(self.TB)] = self.TB
                    self.TB = grow
                self.TB[dd, gg, hh] = r
        return self.TB[d, g, h]

    def extend(self, k: int, chunk: int = 1 << 20) -> None:
        """Harvest equations ``comb(x) g`` for ``x`` up to sphere ``k``."""
        c = self.census
        if k > c.radius - 1:
            raise UnsupportedInstance(f"k_tail={k} needs census radius {k + 1}, have {c.radius}")
        offs = c.sphere_offsets()
        G = self.G
        depth, parent, gen = self.depth, self.parent, self.gen
        for n in range(self.radius + 1, k + 1):
            for lo in range(offs[n], offs[n + 1], chunk):
                hi = min(lo + chunk, offs[n + 1])
                x = np.repeat(np.arange(lo, hi), G)
                g = np.tile(np.arange(G), hi - lo)
                y = self.edges[lo:hi].ravel()
                keep = ~((parent[y] == x) & (gen[y] == g))
                x, g, y = x[keep], g[keep], y[keep]
                longer = depth[y] == n + 1
                h = np.where(longer, gen[y], G)
                ay = np.where(longer, parent[y], y)
                d = self._back(np.zeros(len(x), dtype=np.int64), g, h)
                ax = x
                t = n
                while len(d):
                    if t == 0:
                        if (d != 0).any():
                            raise RuntimeError("word difference chain does not start at the identity")
                        break
                    live = ~((d == 0) & (ax == ay))
                    d, ax, ay = d[live], ax[live], ay[live]
                    if not len(d):
                        break
                    gw = gen[ax]
                    ax = parent[ax]
                    same = depth[ay] == t
                    h = np.where(same, gen[ay], G)
                    ay = np.where(same, parent[ay], ay)
                    d = self._back(d, gw, h)
                    t -= 1
        self.radius = max(self.radius, k)


def difference_set(census: BallCensus, oracle: GroupOracle, k: int) -> _Differences:
    """Word differences of the minimal equations ``comb(x) g`` with ``|x| <= k``."""
    hv = _Harvest(census, oracle)
    hv.extend(k)
    return hv.D


def step_table(D: _Differences, n_gens: int) -> np.ndarray:
    """``T[d, g, g2]`` = index of ``g^-1 d g2`` in ``D`` or -1; ``g2 = n_gens`` pads."""
    G = n_gens
    T = np.full((len(D), G, G + 1), -1, dtype=np.int64)
    for d in range(len(D)):
        for g in range(G):
            for g2 in range(G + 1):
                T[d, g, g2] = D.step(d, g, g2)
    return T


def word_acceptor(D: _Differences, n_gens: int, max_states: int = 200_000):
    """Subset construction of the shortlex acceptor; returns ``(delta, start)``.

    A state maps each difference to the strongest competitor flag seen with
    it (-1 for none); weaker flags at the same difference can only reject
    where the stronger one already does, so dropping them keeps the language.
    """
    G = n_gens
    T = step_table(D, G)
    nD = len(D)
    # flag after reading g against competitor letter g2, for each current flag
    trans = np.empty((4, G, G + 1), dtype=np.int8)
    for g in range(G):
        for g2 in range(G + 1):
            for f in range(4):
                if g2 == G:
                    trans[f, g, g2] = PAD
                elif f == PAD:
                    trans[f, g, g2] = -1
                elif f == EQ:
                    trans[f, g, g2] = LT if g2 < g else EQ if g2 == g else GT
                else:
                    trans[f, g, g2] = f
    start = np.full(nD, -1, dtype=np.int8)
    start[0] = EQ
    ids = {start.tobytes(): 0}
    queue = [start]
    rows = []
    for S in queue:
        row = [-1] * G
        live = np.nonzero(S >= 0)[0]
        fl = S[live]
        for g in range(G):
            tgt = T[live, g, :]  # (n_live, G + 1)
            nf = trans[fl, g, :]
            ok = (tgt >= 0) & (nf >= 0)
            t, f = tgt[ok], nf[ok]
            at_id = f[t == 0]
            if (at_id == LT).any() or (at_id == PAD).any():
                continue  # a smaller competitor reaches the same element
            new = np.full(nD, -1, dtype=np.int8)
            np.maximum.at(new, t, f)
            key = new.tobytes()
            j = ids.get(key)
            if j is None:
                j = ids[key] = len(queue)
                queue.append(new)
                if len(queue) > max_states:
                    raise UnsupportedInstance(f"word acceptor exceeds {max_states} states")
            row[g] = j
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(len(rows), G), 0


def automaton_from_census(
    census: BallCensus,
    oracle: GroupOracle,
    k_tail: int,
    *,
    max_states: int = 200_000,
    _harvest: _Harvest | None = None,
) -> ConeAutomaton:
    """Minimal shortlex acceptor for the word differences of equations ``comb(x) g``, ``|x| <= k_tail``."""
    if k_tail < 1:
        raise ValueError("k_tail must be positive")
    hv = _harvest or _Harvest(census, oracle)
    hv.extend(k_tail)
    G = len(census.generators)
    delta, start = word_acceptor(hv.D, G, max_states)
    delta, start, witnesses = _minimize(delta, start)
    return ConeAutomaton(
        generators=list(census.generators),
        delta=delta,
        start=start,
        k_tail=k_tail,
        build_radius=k_tail + 1,
        validation_radius=0,
        witnesses=witnesses,
        n_differences=len(hv.D),
    )


def _minimize(delta: np.ndarray, start: int):
    """Moore partition refinement followed by canonical BFS renumbering."""
    n, G = delta.shape
    block = np.zeros(n, dtype=np.int64)
    while True:
        succ = np.where(delta >= 0, block[np.maximum(delta, 0)], -1)
        rows = np.concatenate([block[:, None], succ], axis=1)
        _, nb = np.unique(rows, axis=0, return_inverse=True)
        nb = nb.ravel()
        if len(np.unique(nb)) == len(np.unique(block)):
            block = nb
            break
        block = nb
    # quotient automaton, then renumber by shortlex-least witness (BFS in generator order)
    nblocks = int(block.max()) + 1
    qdelta = np.full((nblocks, G), -1, dtype=np.int64)
    for s in range(n):
        for g in range(G):
            if delta[s, g] >= 0:
                qdelta[block[s], g] = block[delta[s, g]]
    order = {int(block[start]): 0}
    witnesses = [()]
    queue = [int(block[start])]
    for s in queue:
        for g in range(G):
            t = int(qdelta[s, g])
            if t >= 0 and t not in order:
                order[t] = len(queue)
                witnesses.append(witnesses[order[s]] + (g,))
                queue.append(t)
    out = np.full((len(queue), G), -1, dtype=np.int64)
    for s in queue:
        for g in range(G):
            t = int(qdelta[s, g])
            if t >= 0:
                out[order[s], g] = order[t]
    return out, 0, witnesses


def validate(A: ConeAutomaton, census: BallCensus, radius: int) -> None:
    counts = A.counts(radius)
    ref = census.sphere_sizes[: radius + 1]
    if counts != ref:
        n = next(i for i, (a, b) in enumerate(zip(counts, ref)) if a != b)
        raise ValidationMismatch(f"automaton predicts s_{n}={counts[n]}, census has {ref[n]}")
    A.validation_radius = radius


def build_cone_automaton(
    oracle: GroupOracle,
    t: GenTuple,
    k_tail: int | None = None,
    N_validate: int = 10,
    *,
    census: BallCensus | None = None,
    k_cap: int = 64,
    equality: str = "canonical",
    max_states: int = 200_000,
) -> ConeAutomaton:
    """Shortlex automaton with the smallest ``k_tail`` that validates to ``N_validate``.

    The differences come from equations of length at most ``k_tail + 1``, so
    census spheres beyond that length are genuine predictions.
    """
    if census is None or census.radius < N_validate:
        census = enumerate_ball(oracle, t, N_validate, equality=equality, record_edges=True)
        if census.radius < N_validate:
            raise UnsupportedInstance(f"census stopped at radius {census.radius} (budget)")
    hv = _Harvest(census, oracle)
    ks = [k_tail] if k_tail is not None else range(1, min(k_cap, census.radius - 1) + 1)
    errors = []
    last_size = -1
    for k in ks:
        try:
            hv.extend(k)
            if len(hv.D) == last_size:
                continue  # no new differences, same automaton
            last_size = len(hv.D)
            A = automaton_from_census(census, oracle, k, max_states=max_states, _harvest=hv)
            validate(A, census, N_validate)
            return A
        except (ValidationMismatch, UnsupportedInstance) as exc:
            errors.append(f"k_tail={k}: {exc}")
    raise UnsupportedInstance("no automaton validated: " + "; ".join(errors[-3:]))
