"""Exact constructors for spin factors, symmetric-matrix Jordan algebras and sums."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .algebra import AlgebraSpec


class ConstructionError(ValueError):
    pass


@dataclass
class SpinFactorModel:
    """Jordan algebra of the bilinear form ``f`` on ``R (+) U``, ``dim U = m``.

    ``iso`` is the coordinate matrix of a map from the model into some other
    algebra, set when the model was recovered by ``build_isomorphism``.
    """

    f: np.ndarray
    iso: Optional[np.ndarray] = None

    def __post_init__(self):
        self.f = np.atleast_2d(np.asarray(self.f, dtype=float))
        _require_spd(self.f)
        if self.iso is not None:
            self.iso = np.asarray(self.iso, dtype=float)
            if self.iso.shape != (self.ambient_dim, self.ambient_dim):
                raise ConstructionError("iso must be square of size m + 1")
            if np.linalg.matrix_rank(self.iso) < self.ambient_dim:
                raise ConstructionError("iso must be invertible")

    @property
    def m(self) -> int:
        return self.f.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.m + 1

    def algebra(self, label: str = "") -> AlgebraSpec:
        return spin_factor(self.f, label=label)

    def product(self, z, w) -> np.ndarray:
        """``(a + u)(b + v) = (ab + f(u, v)) + (av + bu)`` on stacked coordinates."""
        z = np.asarray(z, dtype=float)
        w = np.asarray(w, dtype=float)
        a, u = z[0], z[1:]
        b, v = w[0], w[1:]
        return np.concatenate([[a * b + u @ self.f @ v], a * v + b * u])

    def generic_trace(self, z) -> float:
        return 2.0 * float(z[0])

    def generic_norm(self, z) -> float:
        u = np.asarray(z[1:], dtype=float)
        return float(z[0]) ** 2 - float(u @ self.f @ u)


def _require_spd(f: np.ndarray) -> None:
    if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] < 1:
        raise ConstructionError(f"f must be a nonempty square matrix, got shape {f.shape}")
    if not np.array_equal(f, f.T):
        raise ConstructionError("f must be symmetric")
    if np.linalg.eigvalsh(f)[0] <= 0:
        raise ConstructionError("f must be positive definite")


def spin_factor(f, label: str = "") -> AlgebraSpec:
    """Spin factor on basis ``{eps, u_1..u_m}`` carrying the trace form.

    ``eps`` is the unit, ``u_i u_j = f[i, j] eps``, and the Gram matrix is
    ``tr(z w)``: ``<eps, eps> = 2``, ``<u_i, u_j> = 2 f[i, j]``.
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    _require_spd(f)
    m = f.shape[0]
    n = m + 1
    C = np.zeros((n, n, n))
    C[0, 0, 0] = 1.0
    for i in range(1, n):
        C[0, i, i] = C[i, 0, i] = 1.0
    C[1:, 1:, 0] = f
    G = np.zeros((n, n))
    G[0, 0] = 2.0
    G[1:, 1:] = 2.0 * f
    return AlgebraSpec(C, G, label or f"spin_factor(m={m})")


def _sym_basis(n: int) -> list[tuple[int, int]]:
    return [(i, i) for i in range(n)] + [(i, j) for i in range(n) for j in range(i + 1, n)]


def sym_jordan(n: int, label: str = "") -> AlgebraSpec:
    """Symmetric ``n x n`` matrices with ``X o Y = (XY + YX)/2`` and ``<X, Y> = tr(XY)``.

    Basis ``E_ii`` then ``(E_ij + E_ji)/sqrt(2)`` for ``i < j``; products are
    computed in rationals on the unscaled basis and rescaled once at the end.
    """
    if n < 1:
        raise ConstructionError("n must be >= 1")
    basis = _sym_basis(n)
    d = len(basis)
    index = {pair: k for k, pair in enumerate(basis)}

    def matrix(pair):
        i, j = pair
        M = [[Fraction(0)] * n for _ in range(n)]
        M[i][j] = Fraction(1)
        M[j][i] = Fraction(1)
        return M

    def matmul(X, Y):
        return [[sum(X[i][k] * Y[k][j] for k in range(n)) for j in range(n)] for i in range(n)]

    mats = [matrix(p) for p in basis]
    C = np.zeros((d, d, d))
    G = np.zeros((d, d))
    # squared scale factors are exact; one sqrt per entry keeps the results correctly rounded
    scale2 = [1.0 if i == j else 0.5 for i, j in basis]
    for a in range(d):
        for b in range(a, d):
            XY = matmul(mats[a], mats[b])
            YX = matmul(mats[b], mats[a])
            P = [[(XY[i][j] + YX[i][j]) / 2 for j in range(n)] for i in range(n)]
            coeffs = {}
            for i in range(n):
                for j in range(i, n):
                    if P[i][j]:
                        coeffs[index[(i, j)]] = P[i][j]
            for k, q in coeffs.items():
                C[a, b, k] = C[b, a, k] = float(q) * math.sqrt(scale2[a] * scale2[b] / scale2[k])
            tr = sum(XY[i][i] for i in range(n))
            G[a, b] = G[b, a] = float(tr) * math.sqrt(scale2[a] * scale2[b])
    return AlgebraSpec(C, G, label or f"sym_jordan({n})")


def real_line(label: str = "R") -> AlgebraSpec:
    """The one-dimensional algebra ``R`` with ``<1, 1> = 1``."""
    return AlgebraSpec(np.ones((1, 1, 1)), np.ones((1, 1)), label)


def zero_algebra(n: int = 1, label: str = "") -> AlgebraSpec:
    return AlgebraSpec(np.zeros((n, n, n)), np.eye(n), label or f"zero({n})")


def direct_sum(A: AlgebraSpec, B: AlgebraSpec, label: str = "") -> AlgebraSpec:
    """Block-diagonal sum; products across summands vanish."""
    p, q = A.dim, B.dim
    n = p + q
    C = np.zeros((n, n, n))
    C[:p, :p, :p] = A.structure
    C[p:, p:, p:] = B.structure
    G = np.zeros((n, n))
    G[:p, :p] = A.gram
    G[p:, p:] = B.gram
    return AlgebraSpec(C, G, label or f"{A.label or 'A'}+{B.label or 'B'}")


def rsquare() -> AlgebraSpec:
    """``R (+) R`` with componentwise product and identity Gram matrix."""
    return direct_sum(real_line(), real_line(), label="R+R")


def random_metrised(n: int, rng: np.random.Generator, gram=None, label: str = "") -> AlgebraSpec:
    """A generic metrised algebra: random fully symmetric cubic tensor and SPD Gram matrix.

    Such algebras are commutative with an associative form but neither unital
    nor Jordan in general.
    """
    T = rng.standard_normal((n, n, n))
    T = sum(T.transpose(p) for p in
            [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6
    if gram is None:
        M = rng.standard_normal((n, n))
        gram = M @ M.T + n * np.eye(n)
    gram = np.asarray(gram, dtype=float)
    C = np.einsum("ijk,km->ijm", T, np.linalg.inv(gram))
    # exact (i, j) symmetry despite rounding in the contraction
    C = (C + C.transpose(1, 0, 2)) / 2
    return AlgebraSpec(C, gram, label or f"random_metrised({n})")
