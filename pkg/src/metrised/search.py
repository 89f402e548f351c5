"""Idempotents from stationary points of the cubic form on the unit sphere.

At a constrained stationary point ``x`` of ``f(x) = <x^2, x>`` on ``|x| = 1``
the square ``x^2`` is parallel to ``x``, so ``x / f(x)`` is an idempotent
unless ``x^2 = 0``.  Local maxima give the shortest idempotents.

The ascent itself runs in whitened coordinates ``y = R x`` on the Euclidean
unit sphere, with the cubic tensor rescaled to unit Frobenius norm.  That
makes trajectories, and hence the returned idempotents, independent of a
positive rescaling of the Gram matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import algebra as alg
from .algebra import AlgebraSpec

log = logging.getLogger(__name__)

UNIT = "unit"
EXTREMAL = "extremal"
OTHER = "other"


class SearchError(RuntimeError):
    pass


class RefinementError(SearchError):
    """Newton refinement did not reach the residual tolerance."""


class HypothesisError(ValueError):
    """The subspace is a zero subalgebra, ``UU = 0``."""


@dataclass(frozen=True)
class SearchConfig:
    multistart_count: Optional[int] = None  # None -> 50 * dim
    seed: int = 0
    ascent_max_iters: int = 5000
    ascent_tol: float = 1e-9
    newton_max_iters: int = 60
    newton_tol: float = 1e-12
    dedup_distance: float = 1e-6
    classify_tol: float = 1e-8
    nilpotent_tol: float = 1e-10
    pinv_cutoff: float = 1e-8
    include_conjugates: bool = True

    def __post_init__(self):
        if self.multistart_count is not None and self.multistart_count < 1:
            raise ValueError("multistart_count must be positive")
        for name in ("ascent_max_iters", "newton_max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("ascent_tol", "newton_tol", "dedup_distance", "classify_tol",
                     "nilpotent_tol", "pinv_cutoff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def starts_for(self, dim: int) -> int:
        return self.multistart_count if self.multistart_count is not None else 50 * dim

    def halved(self) -> "SearchConfig":
        return replace(
            self,
            ascent_tol=self.ascent_tol / 2,
            newton_tol=self.newton_tol / 2,
            dedup_distance=self.dedup_distance / 2,
            classify_tol=self.classify_tol / 2,
        )

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class IdempotentRecord:
    c: np.ndarray
    residual: float
    sq_length: float
    kind: str
    lc_spectrum: np.ndarray
    manifold_dim: int

    def as_dict(self) -> dict:
        return {
            "c": [float(v) for v in self.c],
            "residual": self.residual,
            "sq_length": self.sq_length,
            "kind": self.kind,
            "lc_spectrum": [float(v) for v in self.lc_spectrum],
            "manifold_dim": self.manifold_dim,
        }


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


@dataclass
class SearchResult:
    records: list[IdempotentRecord]
    unit: Optional[np.ndarray]
    starts: int
    nilpotent: int = 0
    refinement_failures: int = 0
    not_converged: int = 0

    def as_dict(self) -> dict:
        return {
            "starts": self.starts,
            "found": len(self.records),
            "nilpotent_branch": self.nilpotent,
            "refinement_failures": self.refinement_failures,
            "ascent_not_converged": self.not_converged,
        }


# ---------------------------------------------------------------------------
# cubic form


def cubic_form(A: AlgebraSpec, x) -> float:
    """``<x^2, x>``."""
    return alg.inner(A, alg.square(A, x), x)


def cubic_gradient(A: AlgebraSpec, x) -> np.ndarray:
    """Gradient of the cubic form with respect to the form: ``3 x^2``."""
    return 3.0 * alg.square(A, x)


def riemannian_gradient(A: AlgebraSpec, x) -> np.ndarray:
    """``3 (x^2 - <x^2, x> x)`` for ``|x| = 1``."""
    x2 = alg.square(A, x)
    return 3.0 * (x2 - alg.inner(A, x2, x) * x)


def _scaled_tensor(T: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.linalg.norm(T))
    if scale == 0.0:
        return T, 0.0
    return T / scale, scale


def _tensor_terms(T: np.ndarray, y: np.ndarray):
    y2 = np.einsum("ijk,i,j->k", T, y, y)
    fy = float(y2 @ y)
    g = 3.0 * (y2 - fy * y)
    return y2, fy, g, float(np.linalg.norm(g))


def _newton_polish(T, y, fy, g, gn, tol, max_iters=30):
    """Riemannian Newton on the sphere; the Hessian pseudoinverse tolerates
    the flat directions of a continuum of stationary points."""
    n = y.size
    for _ in range(max_iters):
        if gn <= tol:
            break
        P = np.eye(n) - np.outer(y, y)
        H = P @ (6.0 * np.einsum("ijk,i->jk", T, y) - 3.0 * fy * np.eye(n)) @ P
        h = -np.linalg.pinv((H + H.T) / 2, rcond=1e-8, hermitian=True) @ g
        z = (y + h) / np.linalg.norm(y + h)
        z2, fz, gz, gzn = _tensor_terms(T, z)
        if not gzn < gn:
            break
        y, fy, g, gn = z, fz, gz, gzn
    return y, fy, gn


def _ascend(T: np.ndarray, y0: np.ndarray, max_iters: int, tol: float,
            switch: float = 1e-6) -> AscentResult:
    """Armijo-backtracked gradient ascent of ``T(y, y, y)`` on the Euclidean sphere.

    Once the gradient drops below ``switch`` the increase in ``f`` is no
    longer resolvable in floating point, so the last digits come from a few
    Riemannian Newton steps instead.
    """
    y = y0 / np.linalg.norm(y0)
    alpha = 1.0
    it = 0
    y2, fy, g, gn = _tensor_terms(T, y)
    while gn > max(tol, switch) and it < max_iters:
        it += 1
        alpha = min(2.0 * alpha, 1e2)
        while True:
            z = y + alpha * g
            z /= np.linalg.norm(z)
            z2, fz, gz, gzn = _tensor_terms(T, z)
            if fz >= fy + 1e-4 * alpha * gn * gn:
                break
            alpha *= 0.5
            if alpha < 1e-14:
                break
        if alpha < 1e-14:
            break
        y, fy, g, gn = z, fz, gz, gzn
    if gn > tol:
        y, fy, gn = _newton_polish(T, y, fy, g, gn, tol)
    return AscentResult(y, fy, gn, it, gn <= tol)


def sphere_ascent(A: AlgebraSpec, x0, cfg: SearchConfig = SearchConfig()) -> AscentResult:
    """Gradient ascent of the cubic form on ``{|x| = 1}`` starting at ``x0``.

    The returned ``x`` is a unit vector; ``value`` is ``<x^2, x>`` and
    ``grad_norm`` is measured after rescaling the cubic tensor to unit
    Frobenius norm, so the stopping rule does not depend on the Gram scale.
    """
    (x0,) = alg._check(A, x0)
    Tn, _ = _scaled_tensor(A.whitened_tensor)
    res = _ascend(Tn, A.chol @ x0, cfg.ascent_max_iters, cfg.ascent_tol)
    x = A.chol_inv @ res.x
    return AscentResult(x, cubic_form(A, x), res.grad_norm, res.iterations, res.converged)


# ---------------------------------------------------------------------------
# refinement and records


def _idempotent_residual(A: AlgebraSpec, c: np.ndarray) -> float:
    return alg.norm(A, alg.square(A, c) - c)


def _jacobian(A: AlgebraSpec, c: np.ndarray) -> np.ndarray:
    """``2 L_c - I`` in whitened coordinates (symmetric)."""
    return alg.symmetric_operator(A, 2.0 * alg.left_mult_matrix(A, c)) - np.eye(A.dim)


def make_record(A: AlgebraSpec, c, cfg: SearchConfig = SearchConfig(),
                unit: Optional[np.ndarray] = None) -> IdempotentRecord:
    c = np.asarray(c, dtype=float)
    spectrum = alg.operator_spectrum(A, c)
    sv = np.abs(2.0 * spectrum - 1.0)
    nullity = int(np.sum(sv <= cfg.classify_tol * max(1.0, float(sv.max()))))
    kind = OTHER
    if unit is not None and alg.norm(A, c - unit) <= cfg.dedup_distance:
        kind = UNIT
    return IdempotentRecord(c, _idempotent_residual(A, c), alg.inner(A, c, c), kind,
                            spectrum, nullity)


def newton_idempotent(A: AlgebraSpec, c0, cfg: SearchConfig = SearchConfig()) -> np.ndarray:
    """Newton iteration on ``c^2 - c`` with a pseudoinverse Jacobian.

    On idempotent manifolds ``2 L_c - I`` is singular; singular values below
    ``pinv_cutoff`` times the largest are dropped, giving the minimum-norm step.
    """
    c = np.array(c0, dtype=float)
    R, Ri = A.chol, A.chol_inv
    best, best_res = c, _idempotent_residual(A, c)
    stall = 0
    for _ in range(cfg.newton_max_iters):
        # keep going past newton_tol while Newton still gains; stall ends it
        if best_res <= 1e-3 * cfg.newton_tol:
            break
        F = alg.square(A, c) - c
        J = _jacobian(A, c)
        step = np.linalg.pinv(J, rcond=cfg.pinv_cutoff, hermitian=True) @ (R @ F)
        c = c - Ri @ step
        if not np.all(np.isfinite(c)):
            break
        res = _idempotent_residual(A, c)
        if res < best_res:
            best, best_res = c, res
            stall = 0
        else:
            stall += 1
            if stall >= 3:
                break
    if best_res > cfg.newton_tol:
        raise RefinementError(f"Newton stopped at residual {best_res:.3e} > {cfg.newton_tol:.1e}")
    return best


def refine_idempotent(A: AlgebraSpec, x, cfg: SearchConfig = SearchConfig(),
                      unit: Optional[np.ndarray] = None) -> Optional[IdempotentRecord]:
    """Rescale a stationary point to an idempotent and polish it by Newton.

    Returns ``None`` on the nilpotent branch (``<x^2, x>`` negligible) or if
    Newton collapses onto the zero idempotent.  Raises
    :class:`RefinementError` if Newton does not converge.
    """
    (x,) = alg._check(A, x)
    sq = alg.inner(A, x, x)
    if sq == 0.0:
        return None
    f = cubic_form(A, x)
    if abs(f) <= cfg.nilpotent_tol * A.tensor_scale * sq ** 1.5:
        return None
    c = newton_idempotent(A, x * sq / f, cfg)
    if alg.norm(A, c) <= cfg.dedup_distance:
        return None
    return make_record(A, c, cfg, unit)


# ---------------------------------------------------------------------------
# multistart enumeration


def _unit_starts(A: AlgebraSpec, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((count, A.dim))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def _dedup(A: AlgebraSpec, candidates: list[IdempotentRecord], dist: float) -> list[IdempotentRecord]:
    kept: list[IdempotentRecord] = []
    W = np.empty((0, A.dim))
    for rec in candidates:
        w = A.chol @ rec.c
        if len(kept):
            d = np.linalg.norm(W - w, axis=1)
            j = int(np.argmin(d))
            if d[j] <= dist:
                if rec.residual < kept[j].residual:
                    kept[j] = rec
                    W[j] = w
                continue
        kept.append(rec)
        W = np.vstack([W, w])
    return kept


def classify(records: list[IdempotentRecord], tol: float) -> None:
    """Mark the shortest non-unit records extremal, in place."""
    pool = [r for r in records if r.kind != UNIT] or records
    if not pool:
        return
    shortest = min(r.sq_length for r in pool)
    for r in records:
        if r.kind == UNIT:
            continue
        r.kind = EXTREMAL if abs(r.sq_length - shortest) <= tol * max(1.0, shortest) else OTHER


def search(A: AlgebraSpec, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Multistart ascent, refinement, deduplication and classification.

    With ``include_conjugates`` and a unit present, the unit and every
    conjugate ``e - c`` are added as well: plain ascent only reaches local
    maxima, and ``e - c`` is an idempotent whenever ``c`` is.
    Deterministic for a fixed seed; records keep discovery order.
    """
    unit = alg.find_unit(A)
    count = cfg.starts_for(A.dim)
    Tn, scale = _scaled_tensor(A.whitened_tensor)
    result = SearchResult([], unit, count)
    candidates: list[IdempotentRecord] = []
    if unit is not None and cfg.include_conjugates:
        candidates.append(make_record(A, unit, cfg, unit))
    if scale == 0.0:
        return result

    for y0 in _unit_starts(A, count, cfg.seed):
        asc = _ascend(Tn, y0, cfg.ascent_max_iters, cfg.ascent_tol)
        if not asc.converged:
            result.not_converged += 1
        x = A.chol_inv @ asc.x
        try:
            rec = refine_idempotent(A, x, cfg, unit)
        except RefinementError:
            result.refinement_failures += 1
            continue
        if rec is None:
            result.nilpotent += 1
            continue
        candidates.append(rec)
        if unit is not None and cfg.include_conjugates and rec.kind != UNIT:
            try:
                conj = refine_idempotent(A, unit - rec.c, cfg, unit)
            except RefinementError:
                result.refinement_failures += 1
                conj = None
            if conj is not None:
                candidates.append(conj)

    records = _dedup(A, candidates, cfg.dedup_distance)
    classify(records, cfg.classify_tol)
    result.records = records
    log.debug("search %s: %d starts, %d records", A.label, count, len(records))
    return result


def enumerate_idempotents(A: AlgebraSpec, cfg: SearchConfig = SearchConfig()) -> list[IdempotentRecord]:
    return search(A, cfg).records


def idempotent_sq_lengths(A: AlgebraSpec, cfg: SearchConfig = SearchConfig()) -> list[float]:
    return [r.sq_length for r in enumerate_idempotents(A, cfg)]


def normalize(A: AlgebraSpec, cfg: SearchConfig = SearchConfig()) -> tuple[AlgebraSpec, float]:
    """:func:`metrised.algebra.normalize` backed by this module's search."""
    return alg.normalize(A, lambda B: idempotent_sq_lengths(B, cfg))


# ---------------------------------------------------------------------------
# extremality


def extremal_set(records: Sequence[IdempotentRecord], tol: float = alg.CLASSIFY_TOL) -> list[IdempotentRecord]:
    """Records whose squared length is minimal within ``tol`` (relative above 1)."""
    if not records:
        return []
    shortest = min(r.sq_length for r in records)
    return [r for r in records if abs(r.sq_length - shortest) <= tol * max(1.0, shortest)]


@dataclass
class InequalityReport:
    samples: int
    max_ratio: float
    violations: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return {"samples": self.samples, "max_ratio": self.max_ratio,
                "violations": self.violations, "tol": self.tol, "passed": self.passed}


def extremal_inequality(A: AlgebraSpec, extremal_sq_length: float, samples: int = 1000,
                        seed: int = 0, tol: float = 1e-9) -> InequalityReport:
    """Sample ``<x, x^2> <= |x|^3 / |c|`` on random unit vectors.

    ``max_ratio`` is the largest ``|c| <x, x^2>`` seen; a value above 1 means
    the search missed a shorter idempotent.
    """
    X = _unit_starts(A, samples, seed) @ A.chol_inv.T
    vals = np.einsum("ijk,si,sj,sk->s", A.cubic_tensor, X, X, X, optimize=True)
    ratios = vals * np.sqrt(extremal_sq_length)
    return InequalityReport(samples, float(ratios.max()), int(np.sum(ratios > 1.0 + tol)), tol)


@dataclass
class SpectralReport:
    restricted_spectrum: np.ndarray
    max_restricted: float
    bound_ok: bool
    eigenvalue_one_simple: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.eigenvalue_one_simple

    def as_dict(self) -> dict:
        return {
            "restricted_spectrum": [float(v) for v in self.restricted_spectrum],
            "max_restricted": self.max_restricted,
            "bound": 0.5,
            "tol": self.tol,
            "bound_ok": self.bound_ok,
            "eigenvalue_one_simple": self.eigenvalue_one_simple,
            "passed": self.passed,
        }


def restricted_spectrum(A: AlgebraSpec, c, excluded: Sequence[np.ndarray]) -> np.ndarray:
    """Eigenvalues of ``L_c`` compressed to the orthogonal complement of ``excluded``."""
    Q = A.chol @ alg.orthonormal_complement(A, excluded)
    if Q.shape[1] == 0:
        return np.empty(0)
    S = alg.symmetric_operator(A, alg.left_mult_matrix(A, c))
    return np.linalg.eigvalsh(Q.T @ S @ Q)


def spectral_check(A: AlgebraSpec, rec: IdempotentRecord, tol: float = alg.CLASSIFY_TOL) -> SpectralReport:
    """``L_c <= 1/2`` on the orthogonal complement of ``c`` and eigenvalue 1 simple."""
    spec = restricted_spectrum(A, rec.c, [rec.c])
    mx = float(spec.max()) if spec.size else -np.inf
    full = alg.operator_spectrum(A, rec.c)
    simple = int(np.sum(np.abs(full - 1.0) <= tol)) == 1
    return SpectralReport(spec, mx, mx <= 0.5 + tol, simple, tol)


# ---------------------------------------------------------------------------
# stationary points on a subspace


def subspace_stationary(A: AlgebraSpec, U_basis: Sequence, cfg: SearchConfig = SearchConfig(),
                        starts: int = 10) -> tuple[np.ndarray, float, float]:
    """Maximize the cubic form on the unit sphere of ``U = span(U_basis)``.

    Returns ``(u, lam, defect)`` with ``|u| = 1``, ``lam = <u^2, u>`` and
    ``defect`` the norm of the part of ``u^2 - lam u`` lying in ``U``; so
    ``u^2 = lam u + w`` with ``w`` orthogonal to ``U`` up to ``defect``.
    """
    vecs = [v for v in alg._check(A, *U_basis)]
    if not vecs:
        raise ValueError("U_basis is empty")
    W = A.chol @ np.column_stack(vecs)
    Uw, s, _ = np.linalg.svd(W, full_matrices=False)
    Q = Uw[:, s > 1e-12 * s[0]]
    B = A.chol_inv @ Q  # G-orthonormal columns spanning U
    k = B.shape[1]

    products = np.einsum("ia,jb,ijk->abk", B, B, A.structure)
    prod_norm = float(np.max(np.linalg.norm(products @ A.chol.T, axis=2)))
    if prod_norm <= alg.AXIOM_TOL:
        raise HypothesisError("U is a zero subalgebra (UU = 0)")

    TU = np.einsum("ijk,ia,jb,kc->abc", A.cubic_tensor, B, B, B, optimize=True)
    Tn, scale = _scaled_tensor(TU)
    if k == 1 or scale <= alg.AXIOM_TOL * prod_norm:
        # dim U = 1, or the cubic form vanishes on U (so UU is orthogonal to U)
        y = np.zeros(k)
        y[0] = 1.0
        if scale > 0 and TU.reshape(-1)[0] < 0:
            y = -y
    else:
        best = None
        rng = np.random.default_rng(cfg.seed)
        for _ in range(starts):
            y0 = rng.standard_normal(k)
            res = _ascend(Tn, y0, cfg.ascent_max_iters, cfg.ascent_tol)
            if best is None or res.value > best.value:
                best = res
        y = best.x
    u = B @ y
    u2 = alg.square(A, u)
    lam = alg.inner(A, u2, u)
    r = u2 - lam * u
    defect = float(np.linalg.norm(B.T @ A.gram @ r))
    return u, lam, defect
