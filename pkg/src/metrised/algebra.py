"""Commutative metrised algebras given by structure constants and a Gram matrix.

An algebra of dimension ``n`` is stored as a tensor ``C`` of shape ``(n, n, n)``
with ``b_i b_j = sum_k C[i, j, k] b_k`` and a symmetric positive definite Gram
matrix ``G[i, j] = <b_i, b_j>``.  Elements are plain 1-d numpy arrays of
coordinates.

Most spectral work happens in whitened coordinates: with ``G = R^T R``
(Cholesky) the map ``x -> R x`` is an isometry onto Euclidean space and
``R L_x R^{-1}`` is a symmetric matrix whenever the form is associative.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

AXIOM_TOL = 1e-9
CLASSIFY_TOL = 1e-8
ASYMMETRY_WARN = 1e-9


class DimensionError(ValueError):
    pass


class AsymmetryWarning(UserWarning):
    pass


class NormalizationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class AlgebraSpec:
    """Structure-constant tensor plus Gram matrix.

    Instances are treated as immutable; the arrays are copied and flagged
    read-only on construction.
    """

    structure: np.ndarray
    gram: np.ndarray
    label: str = ""

    def __post_init__(self):
        C = np.array(self.structure, dtype=float)
        G = np.array(self.gram, dtype=float)
        if C.ndim != 3 or len(set(C.shape)) != 1:
            raise DimensionError(f"structure must have shape (n, n, n), got {C.shape}")
        n = C.shape[0]
        if n < 1:
            raise DimensionError("dimension must be positive")
        if G.shape != (n, n):
            raise DimensionError(f"gram must have shape ({n}, {n}), got {G.shape}")
        C.flags.writeable = False
        G.flags.writeable = False
        object.__setattr__(self, "structure", C)
        object.__setattr__(self, "gram", G)

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    @cached_property
    def chol(self) -> np.ndarray:
        """Upper-triangular ``R`` with ``G = R^T R``."""
        return np.linalg.cholesky(self.gram).T

    @cached_property
    def chol_inv(self) -> np.ndarray:
        return np.linalg.inv(self.chol)

    @cached_property
    def cubic_tensor(self) -> np.ndarray:
        """``T[i, j, k] = <b_i b_j, b_k>``; fully symmetric iff the form is associative."""
        return np.einsum("ijm,mk->ijk", self.structure, self.gram)

    @cached_property
    def whitened_tensor(self) -> np.ndarray:
        """Cubic tensor in G-orthonormal coordinates ``y = R x``."""
        Ri = self.chol_inv
        return np.einsum("ijk,ia,jb,kc->abc", self.cubic_tensor, Ri, Ri, Ri, optimize=True)

    @cached_property
    def tensor_scale(self) -> float:
        """Frobenius norm of :attr:`whitened_tensor`; scales as ``k^{-1/2}`` under ``G -> kG``."""
        return float(np.linalg.norm(self.whitened_tensor))

    def with_gram(self, gram, label: Optional[str] = None) -> "AlgebraSpec":
        return AlgebraSpec(self.structure, gram, self.label if label is None else label)

    def symmetrized(self, warn_tol: float = ASYMMETRY_WARN) -> "AlgebraSpec":
        """Return a copy with ``C`` symmetrized in its first two indices.

        Emits :class:`AsymmetryWarning` if the antisymmetric part exceeds
        ``warn_tol``; the input is treated as a user error, not silently fixed.
        """
        C = self.structure
        defect = float(np.max(np.abs(C - C.transpose(1, 0, 2)))) / 2
        if defect > warn_tol:
            warnings.warn(
                f"structure constants not commutative (defect {defect:.3g}); symmetrizing",
                AsymmetryWarning,
                stacklevel=2,
            )
        G = self.gram
        return AlgebraSpec((C + C.transpose(1, 0, 2)) / 2, (G + G.T) / 2, self.label)

    def __eq__(self, other):
        if not isinstance(other, AlgebraSpec):
            return NotImplemented
        return (
            self.label == other.label
            and np.array_equal(self.structure, other.structure)
            and np.array_equal(self.gram, other.gram)
        )

    __hash__ = None


def _check(A: AlgebraSpec, *vectors) -> list[np.ndarray]:
    out = []
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if v.shape != (A.dim,):
            raise DimensionError(f"expected vector of length {A.dim}, got shape {v.shape}")
        out.append(v)
    return out


def multiply(A: AlgebraSpec, x, y) -> np.ndarray:
    x, y = _check(A, x, y)
    return np.einsum("i,j,ijk->k", x, y, A.structure)


def square(A: AlgebraSpec, x) -> np.ndarray:
    return multiply(A, x, x)


def inner(A: AlgebraSpec, x, y) -> float:
    x, y = _check(A, x, y)
    return float(x @ A.gram @ y)


def norm(A: AlgebraSpec, x) -> float:
    return float(np.sqrt(max(inner(A, x, x), 0.0)))


def left_mult_matrix(A: AlgebraSpec, x) -> np.ndarray:
    """Matrix of ``L_x: y -> xy`` acting on coordinate columns."""
    (x,) = _check(A, x)
    return np.einsum("i,ijk->kj", x, A.structure)


def symmetric_operator(A: AlgebraSpec, M: np.ndarray) -> np.ndarray:
    """Conjugate ``M`` into whitened coordinates, ``R M R^{-1}``, and symmetrize.

    For a self-adjoint operator the skew part is rounding noise only.
    """
    S = A.chol @ M @ A.chol_inv
    return (S + S.T) / 2


def operator_spectrum(A: AlgebraSpec, x) -> np.ndarray:
    """Ascending eigenvalues of ``L_x``."""
    return np.linalg.eigvalsh(symmetric_operator(A, left_mult_matrix(A, x)))


def orthonormal_complement(A: AlgebraSpec, vectors) -> np.ndarray:
    """Columns forming a G-orthonormal basis of the orthogonal complement of ``span(vectors)``."""
    n = A.dim
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    if not vectors:
        return A.chol_inv.copy()
    W = A.chol @ np.column_stack(vectors)
    U, s, _ = np.linalg.svd(W, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * max(s[0], 1e-300)))
    return A.chol_inv @ U[:, rank:n]


@dataclass
class ValidationReport:
    commutativity_defect: float
    associativity_defect: float
    min_gram_eigenvalue: float
    tol: float
    passed: bool
    details: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "commutativity_defect": self.commutativity_defect,
            "associativity_defect": self.associativity_defect,
            "min_gram_eigenvalue": self.min_gram_eigenvalue,
            "tol": self.tol,
            "passed": self.passed,
            "details": list(self.details),
        }


def validate(A: AlgebraSpec, tol: float = AXIOM_TOL) -> ValidationReport:
    """Check commutativity, associativity of the form and positive definiteness."""
    C, G = A.structure, A.gram
    comm = float(np.max(np.abs(C - C.transpose(1, 0, 2)))) / 2
    T = np.einsum("ijm,mk->ijk", C, G)
    assoc = 0.0
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assoc = max(assoc, float(np.max(np.abs(T - T.transpose(perm)))) / 2)
    gram_sym = float(np.max(np.abs(G - G.T)))
    min_eig = float(np.linalg.eigvalsh((G + G.T) / 2)[0])

    details = []
    ok = True
    if comm > tol:
        ok = False
        details.append(f"FAIL commutativity: defect {comm:.3e} > {tol:.1e}")
    else:
        details.append(f"commutativity: ok ({comm:.3e})")
    if assoc > tol:
        ok = False
        details.append(f"FAIL associativity <xy,z> = <x,yz>: defect {assoc:.3e} > {tol:.1e}")
    else:
        details.append(f"associativity <xy,z> = <x,yz>: ok ({assoc:.3e})")
    if gram_sym > tol:
        ok = False
        details.append(f"FAIL gram symmetry: defect {gram_sym:.3e} > {tol:.1e}")
    if min_eig <= 0:
        ok = False
        details.append(f"FAIL gram not positive definite: min eigenvalue {min_eig:.3e}")
    else:
        details.append(f"gram positive definite: min eigenvalue {min_eig:.3e}")
    return ValidationReport(comm, assoc, min_eig, tol, ok, details)


def find_unit(A: AlgebraSpec, tol: float = AXIOM_TOL) -> Optional[np.ndarray]:
    """Least-squares solve of ``sum_i e_i C[i, j, k] = delta_jk``; ``None`` if no unit."""
    n = A.dim
    # rows indexed by (j, k), columns by i
    M = A.structure.transpose(1, 2, 0).reshape(n * n, n)
    rhs = np.eye(n).reshape(n * n)
    e, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    defect = float(np.max(np.abs(left_mult_matrix(A, e) - np.eye(n))))
    if defect > tol:
        return None
    return e


def is_zero_algebra(A: AlgebraSpec, tol: float = AXIOM_TOL) -> bool:
    return bool(np.max(np.abs(A.structure)) <= tol)


def normalize(
    A: AlgebraSpec,
    find_sq_lengths: Callable[[AlgebraSpec], list[float]],
) -> tuple[AlgebraSpec, float]:
    """Rescale the form so the shortest found idempotent has unit length.

    ``find_sq_lengths`` returns the squared lengths of the idempotents it
    locates; the search module supplies it, keeping this module search-free.
    Returns the rescaled algebra and the factor ``k`` with ``G' = k G``.
    """
    if is_zero_algebra(A):
        raise NormalizationError("zero algebra (VV = 0) has no nonzero idempotents")
    lengths = list(find_sq_lengths(A))
    if not lengths:
        raise NormalizationError(
            "idempotent search exhausted its budget without finding an idempotent"
        )
    k = 1.0 / min(lengths)
    return A.with_gram(A.gram * k), k
