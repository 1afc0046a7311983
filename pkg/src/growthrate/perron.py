"""Spectral radius enclosures for nonnegative integer matrices."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
import sympy
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class NotNonnegative(ValueError):
    pass


@dataclass(frozen=True)
class RateEnclosure:
    lo: float
    hi: float
    method: str  # "perron-collatz-wielandt" or "fekete-upper-only"
    tol: float
    fingerprint: str
    converged: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def intersects(self, other: "RateEnclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "method": self.method,
            "tol": self.tol,
            "fingerprint": self.fingerprint,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateEnclosure":
        return cls(d["lo"], d["hi"], d["method"], d["tol"], d["fingerprint"], d.get("converged", True))


def fingerprint(M) -> str:
    A = np.ascontiguousarray(np.asarray(M, dtype=np.int64))
    h = hashlib.sha256(str(A.shape).encode() + A.tobytes()).hexdigest()
    return h[:16]


def _check(M) -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.issubdtype(A.dtype, np.integer):
        if not np.all(np.equal(np.mod(A, 1), 0)):
            raise ValueError("matrix must have integer entries")
        A = A.astype(np.int64)
    if (A < 0).any():
        raise NotNonnegative("matrix has negative entries")
    return A.astype(np.int64)


def recurrent_components(A: np.ndarray) -> list:
    """Index arrays of strongly connected components that carry a cycle."""
    n = A.shape[0]
    if n == 0:
        return []
    ncomp, labels = connected_components(csr_matrix(A), directed=True, connection="strong")
    out = []
    for c in range(ncomp):
        idx = np.nonzero(labels == c)[0]
        if len(idx) > 1 or A[idx[0], idx[0]] > 0:
            out.append(idx)
    return out


def _cw_irreducible(B: np.ndarray, tol: float, max_iter: int):
    """Collatz-Wielandt bracket for an irreducible block, via the primitive shift B + I."""
    n = B.shape[0]
    P = B.astype(float) + np.eye(n)
    v = np.ones(n)
    exact = True  # integer arithmetic is exact while entries stay below 2**53
    lo, hi = 0.0, math.inf
    for it in range(max_iter):
        w = P @ v
        ratios = w / v
        lo = max(lo, float(ratios.min()))
        hi = min(hi, float(ratios.max()))
        if exact and (w.max() >= 2.0**52):
            exact = False
        if hi - lo <= tol:
            break
        s = w.max()
        if s > 1e100 or not exact:
            exact = False
            w = w / s
        v = w
    else:
        return lo - 1.0, hi - 1.0, False, exact
    return lo - 1.0, hi - 1.0, True, exact


def perron_enclosure(M, tol: float = 1e-10, max_iter: int = 100000) -> RateEnclosure:
    """Interval containing the spectral radius of ``M``.

    Each nontrivial strongly connected block is bracketed by Collatz-Wielandt
    ratios of ``B + I`` (which is primitive, so the bracket closes even for
    periodic blocks); the spectral radius is the largest block radius.
    """
    A = _check(M)
    fp = fingerprint(A)
    comps = recurrent_components(A)
    if not comps:
        return RateEnclosure(0.0, 0.0, "perron-collatz-wielandt", tol, fp)
    lo = hi = -math.inf
    converged = True
    for idx in comps:
        B = A[np.ix_(idx, idx)]
        l, h, ok, exact = _cw_irreducible(B, tol, max_iter)
        if not exact:
            # outward rounding for accumulated floating point error
            slack = 8 * np.finfo(float).eps * max(1.0, abs(h) + 1.0) * B.shape[0]
            l, h = l - slack, h + slack
        converged = converged and ok
        lo, hi = max(lo, l), max(hi, h)
    lo = max(lo, 0.0)
    return RateEnclosure(float(lo), float(hi), "perron-collatz-wielandt", tol, fp, converged)


def fekete_enclosure(upper: float, lower: float = 0.0) -> RateEnclosure:
    return RateEnclosure(float(lower), float(upper), "fekete-upper-only", math.inf, "")


def char_poly(M) -> list:
    """Integer coefficients of det(xI - M), leading first (Faddeev-LeVerrier)."""
    A = [[int(x) for x in row] for row in _check(M).tolist()]
    n = len(A)
    coeffs = [1]
    Mk = [[0] * n for _ in range(n)]
    c = 1
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        prev = Mk
        Mk = [
            [sum(A[i][l] * prev[l][j] for l in range(n)) + (c if i == j else 0) for j in range(n)]
            for i in range(n)
        ]
        AM = [[sum(A[i][l] * Mk[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        tr = sum(AM[i][i] for i in range(n))
        assert tr % k == 0
        c = -tr // k
        coeffs.append(c)
    return coeffs


def char_poly_roots_check(M, eps: float = 1e-12, max_dim: int = 60):
    """Characteristic polynomial and a rational bracket of its largest real root.

    Returns ``(coeffs, (lo, hi))``.  For a nonnegative matrix the largest real
    root is the Perron root, so this independently cross-checks
    :func:`perron_enclosure`.
    """
    A = _check(M)
    if A.shape[0] > max_dim:
        raise ValueError(f"dimension {A.shape[0]} above {max_dim}; use perron_enclosure")
    coeffs = char_poly(A)
    x = sympy.Symbol("x")
    P = sympy.Poly(coeffs, x)
    roots = P.intervals()
    if not roots:
        return coeffs, (0.0, 0.0)
    # isolating intervals may share an endpoint, e.g. (2, 3) and (3, 3)
    (a, b), _ = max(roots, key=lambda r: (r[0][1], r[0][0]))
    if a != b:
        a, b = P.refine_root(a, b, eps=sympy.Rational(eps))
    return coeffs, (float(a), float(b))
