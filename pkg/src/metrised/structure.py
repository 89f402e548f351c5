"""Minimality, the structure identities of minimal algebras, and the spin-factor isomorphism.

A unital algebra is minimal when ``|e|^2 = 2 |c|^2`` for a shortest idempotent
``c``.  Such an algebra satisfies ``x^2 - <x, e> x + d(x) e = 0`` once the form
is normalized, and is isomorphic to the Jordan algebra of ``<x, y> / |e|^2``
on the orthogonal complement of ``e``.

Every verdict here is taken over the idempotents the multistart search
actually found; a missed shorter idempotent would change it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import algebra as alg
from .algebra import AlgebraSpec
from .constructions import SpinFactorModel
from .search import (
    UNIT,
    IdempotentRecord,
    SearchConfig,
    SearchError,
    enumerate_idempotents,
    extremal_set,
    restricted_spectrum,
)

HOM_TOL = 1e-8
IDENTITY_TOL = 1e-8
CONJUGATION_TOL = 1e-9


class StructureError(ValueError):
    pass


class NonUnitalError(StructureError):
    pass


class MinimalityRequired(StructureError):
    pass


class NotNormalized(StructureError):
    pass


def _unit(A: AlgebraSpec, unit=None) -> np.ndarray:
    if unit is not None:
        return np.asarray(unit, dtype=float)
    e = alg.find_unit(A)
    if e is None:
        raise NonUnitalError(f"{A.label or 'algebra'} has no unit")
    return e


def _nontrivial(records: Sequence[IdempotentRecord]) -> list[IdempotentRecord]:
    return [r for r in records if r.kind != UNIT]


def _budget_caveat(records) -> str:
    return (f"verdict over {len(records)} found idempotents; "
            "a missed shorter idempotent would change it")


# ---------------------------------------------------------------------------
# minimality


@dataclass
class MinimalityReport:
    unit: np.ndarray
    unit_sq_length: float
    extremal_sq_length: float
    gap: float
    normalized_gap: float
    is_minimal: bool
    lower_bound_ok: bool
    conjugate_residual: float
    conjugate_inner: float
    tol: float
    caveat: str

    def as_dict(self) -> dict:
        return {
            "unit": [float(v) for v in self.unit],
            "unit_sq_length": self.unit_sq_length,
            "extremal_sq_length": self.extremal_sq_length,
            "gap": self.gap,
            "normalized_gap": self.normalized_gap,
            "tol": self.tol,
            "is_minimal": self.is_minimal,
            "lower_bound_ok": self.lower_bound_ok,
            "conjugate_residual": self.conjugate_residual,
            "conjugate_inner": self.conjugate_inner,
            "caveat": self.caveat,
        }


def minimality_test(A: AlgebraSpec, records: Sequence[IdempotentRecord],
                    tol: float = alg.CLASSIFY_TOL, unit=None) -> MinimalityReport:
    """Compare ``|e|^2`` with twice the shortest found squared length.

    The decision uses the gap divided by the extremal squared length, which
    is the gap of the normalized algebra and does not depend on the Gram scale.
    """
    e = _unit(A, unit)
    if A.dim < 2:
        raise StructureError("minimality needs dim >= 2: in dim 1 the unit is the only idempotent")
    nontrivial = _nontrivial(records)
    if not nontrivial:
        raise SearchError("no nontrivial idempotent found; raise the multistart budget")
    ext = extremal_set(nontrivial, tol)
    ell2 = ext[0].sq_length
    e2 = alg.inner(A, e, e)
    gap = e2 - 2.0 * ell2
    ngap = gap / ell2

    conj_res = 0.0
    conj_inner = 0.0
    for r in nontrivial:
        cbar = e - r.c
        conj_res = max(conj_res, alg.norm(A, alg.square(A, cbar) - cbar))
        conj_inner = max(conj_inner, abs(alg.inner(A, r.c, cbar)))
    return MinimalityReport(e, e2, ell2, gap, ngap, abs(ngap) <= tol, ngap >= -tol,
                            conj_res, conj_inner, tol, _budget_caveat(records))


def require_minimal(A: AlgebraSpec, records, tol: float = alg.CLASSIFY_TOL) -> MinimalityReport:
    rep = minimality_test(A, records, tol)
    if not rep.is_minimal:
        raise MinimalityRequired(
            f"{A.label or 'algebra'} is not minimal (|e|^2 - 2|c|^2 = {rep.gap:.6g})"
        )
    return rep


@dataclass
class ClassificationReport:
    expected_sq_length: float
    violators: list[IdempotentRecord]
    checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return not self.violators

    def as_dict(self) -> dict:
        return {
            "expected_sq_length": self.expected_sq_length,
            "checked": self.checked,
            "violators": [r.as_dict() for r in self.violators],
            "tol": self.tol,
            "passed": self.passed,
        }


def classify_idempotents_minimal(A: AlgebraSpec, records: Sequence[IdempotentRecord],
                                 tol: float = alg.CLASSIFY_TOL) -> ClassificationReport:
    """In a minimal algebra every nonzero idempotent other than ``e`` has ``|c|^2 = |e|^2 / 2``."""
    rep = require_minimal(A, records, tol)
    target = rep.unit_sq_length / 2.0
    bad = [r for r in _nontrivial(records)
           if abs(r.sq_length - target) > tol * max(1.0, target)]
    return ClassificationReport(target, bad, len(_nontrivial(records)), tol)


# ---------------------------------------------------------------------------
# per-idempotent identities


@dataclass
class HalfEigenReport:
    spectrum: np.ndarray
    max_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    def as_dict(self) -> dict:
        return {"spectrum": [float(v) for v in self.spectrum],
                "max_deviation": self.max_deviation, "tol": self.tol, "passed": self.passed}


def half_eigenspace_check(A: AlgebraSpec, rec: IdempotentRecord, unit=None,
                          tol: float = IDENTITY_TOL) -> HalfEigenReport:
    """Eigenvalues of ``L_c`` on the complement of ``c`` and ``e - c`` should all be 1/2."""
    e = _unit(A, unit)
    spec = restricted_spectrum(A, rec.c, [rec.c, e - rec.c])
    dev = float(np.max(np.abs(spec - 0.5))) if spec.size else 0.0
    return HalfEigenReport(spec, dev, tol)


def _require_normalized_minimal(A: AlgebraSpec, e: np.ndarray, tol: float) -> None:
    e2 = alg.inner(A, e, e)
    if abs(e2 - 2.0) > tol:
        raise NotNormalized(
            f"expected a normalized minimal algebra with |e|^2 = 2, got {e2:.12g}; normalize first"
        )


def product_formula_check(A: AlgebraSpec, rec1: IdempotentRecord, rec2: IdempotentRecord,
                          unit=None, tol: float = IDENTITY_TOL) -> float:
    """Norm of ``2 c1 c2 - c1 - c2 + <e - c1, c2> e`` in a normalized minimal algebra."""
    e = _unit(A, unit)
    _require_normalized_minimal(A, e, tol)
    for r in (rec1, rec2):
        if abs(r.sq_length - 1.0) > tol:
            raise NotNormalized(f"extremal idempotent has |c|^2 = {r.sq_length:.12g}, expected 1")
    c1, c2 = rec1.c, rec2.c
    lhs = 2.0 * alg.multiply(A, c1, c2) - c1 - c2 + alg.inner(A, e - c1, c2) * e
    return alg.norm(A, lhs)


@dataclass
class SpanReport:
    rank: int
    dim: int
    singular_values: np.ndarray

    @property
    def verdict(self) -> bool:
        return self.rank == self.dim

    @property
    def inconclusive(self) -> bool:
        # a short span means the search under-sampled, never a counterexample
        return not self.verdict

    def as_dict(self) -> dict:
        return {"rank": self.rank, "dim": self.dim, "verdict": self.verdict,
                "inconclusive": self.inconclusive}


def span_check(A: AlgebraSpec, records: Sequence[IdempotentRecord],
               tol: float = alg.CLASSIFY_TOL) -> SpanReport:
    """Rank of the shortest found idempotents."""
    ext = extremal_set(_nontrivial(records), tol)
    if not ext:
        return SpanReport(0, A.dim, np.empty(0))
    M = np.array([A.chol @ r.c for r in ext])
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > 1e-8 * s[0]))
    return SpanReport(rank, A.dim, s)


def generic_norm(A: AlgebraSpec, x, e) -> float:
    """``d(x) = (<x, e>^2 - |x|^2) / 2``."""
    xe = alg.inner(A, x, e)
    return 0.5 * (xe * xe - alg.inner(A, x, x))


def quadratic_relation_check(A: AlgebraSpec, x, unit=None, tol: float = IDENTITY_TOL) -> float:
    """Norm of ``x^2 - <x, e> x + d(x) e`` in a normalized minimal algebra."""
    e = _unit(A, unit)
    _require_normalized_minimal(A, e, tol)
    (x,) = alg._check(A, x)
    r = alg.square(A, x) - alg.inner(A, x, e) * x + generic_norm(A, x, e) * e
    return alg.norm(A, r)


def explicit_product(A: AlgebraSpec, x, y, e) -> np.ndarray:
    """Closed-form product of a normalized minimal algebra:
    ``xy = (<x,e> y + <y,e> x - (<x,e><y,e> - <x,y>) e) / 2``."""
    xe = alg.inner(A, x, e)
    ye = alg.inner(A, y, e)
    return 0.5 * (xe * np.asarray(y) + ye * np.asarray(x) - (xe * ye - alg.inner(A, x, y)) * e)


def jordan_check(A: AlgebraSpec, x) -> float:
    """Operator norm of ``[L_{x^2}, L_x]`` with respect to the form."""
    (x,) = alg._check(A, x)
    Lx = alg.symmetric_operator(A, alg.left_mult_matrix(A, x))
    Lx2 = alg.symmetric_operator(A, alg.left_mult_matrix(A, alg.square(A, x)))
    return float(np.linalg.norm(Lx2 @ Lx - Lx @ Lx2, 2))


def conjugation_identities(A: AlgebraSpec, records: Sequence[IdempotentRecord], unit=None,
                           normalized: bool = False) -> dict[str, float]:
    """Maximum residuals over the found set of the identities tying ``c`` to ``e - c``.

    ``barc``: ``(e-c)^2 = e-c``; ``annihilate``: ``c (e-c) = 0``; ``orthc``:
    ``<c, e-c> = 0``; ``ec``: ``<e, c> = |c|^2``; with ``normalized`` also
    ``ec1``: ``<e, c> = 1`` for the extremal ones.
    """
    e = _unit(A, unit)
    out = {"barc": 0.0, "annihilate": 0.0, "orthc": 0.0, "ec": 0.0}
    nontrivial = _nontrivial(records)
    for r in nontrivial:
        c = r.c
        cbar = e - c
        out["barc"] = max(out["barc"], alg.norm(A, alg.square(A, cbar) - cbar))
        out["annihilate"] = max(out["annihilate"], alg.norm(A, alg.multiply(A, c, cbar)))
        out["orthc"] = max(out["orthc"], abs(alg.inner(A, c, cbar)))
        out["ec"] = max(out["ec"], abs(alg.inner(A, e, c) - r.sq_length))
    if normalized:
        out["ec1"] = max([abs(alg.inner(A, e, r.c) - 1.0) for r in extremal_set(nontrivial)],
                         default=0.0)
    return out


def subalgebra_closure(A: AlgebraSpec, vectors: Sequence, samples: int = 50,
                       seed: int = 0) -> float:
    """Largest relative distance of a product of random elements of ``span(vectors)`` from that span."""
    V = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    Q, s, _ = np.linalg.svd(A.chol @ V, full_matrices=False)
    Q = Q[:, s > 1e-10 * s[0]]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a = V @ rng.standard_normal(V.shape[1])
        b = V @ rng.standard_normal(V.shape[1])
        w = A.chol @ alg.multiply(A, a, b)
        off = w - Q @ (Q.T @ w)
        worst = max(worst, float(np.linalg.norm(off)) / max(1.0, float(np.linalg.norm(w))))
    return worst


# ---------------------------------------------------------------------------
# isomorphism with a spin factor


@dataclass
class IsomorphismReport:
    model: SpinFactorModel
    phi: np.ndarray
    scale: float
    max_hom_defect: float
    explicit_product_defect: float
    square_defect: Optional[float]
    square1_defect: Optional[float]
    basis_idempotents: list[np.ndarray]
    samples: int
    tol: float = HOM_TOL
    phi_condition: float = field(default=np.inf)

    @property
    def phi_invertible(self) -> bool:
        return bool(np.isfinite(self.phi_condition) and self.phi_condition < 1e12)

    @property
    def verdict(self) -> bool:
        return self.max_hom_defect <= self.tol and self.phi_invertible

    def as_dict(self) -> dict:
        return {
            "m": self.model.m,
            "form": self.model.f.tolist(),
            "phi": self.phi.tolist(),
            "scale": self.scale,
            "samples": self.samples,
            "max_hom_defect": self.max_hom_defect,
            "explicit_product_defect": self.explicit_product_defect,
            "square_defect": self.square_defect,
            "square1_defect": self.square1_defect,
            "basis_idempotents": [[float(v) for v in c] for c in self.basis_idempotents],
            "phi_condition": self.phi_condition,
            "tol": self.tol,
            "verdict": self.verdict,
        }


def complement_basis(A: AlgebraSpec, e: np.ndarray) -> np.ndarray:
    """G-orthonormal basis of ``e``'s orthogonal complement by Gram-Schmidt.

    Candidates are the coordinate vectors in order; each is orthogonalized
    twice against ``e`` and the accepted vectors.
    """
    n = A.dim
    G = A.gram
    basis = [e / alg.norm(A, e)]
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):
            for q in basis:
                v = v - (q @ G @ v) * q
        nv = float(np.sqrt(v @ G @ v))
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == n:
            break
    return np.column_stack(basis[1:])


def _basis_idempotents(A: AlgebraSpec, ext: Sequence[IdempotentRecord], e) -> list[np.ndarray]:
    chosen: list[np.ndarray] = []
    cols = [A.chol @ e]
    for r in ext:
        trial = cols + [A.chol @ r.c]
        s = np.linalg.svd(np.column_stack(trial), compute_uv=False)
        if s[-1] > 1e-6 * s[0]:
            cols = trial
            chosen.append(r.c)
        if len(cols) == A.dim:
            break
    return chosen


def build_isomorphism(A: AlgebraSpec, records: Optional[Sequence[IdempotentRecord]] = None,
                      cfg: SearchConfig = SearchConfig(), samples: int = 1000, seed: int = 0,
                      tol: float = HOM_TOL) -> IsomorphismReport:
    """Map ``a (+) u -> a e + u`` from the spin factor of ``f = <.,.>/|e|^2`` onto ``A``.

    The form is first normalized by the shortest found squared length, the
    complement of ``e`` gets a G-orthonormal basis, and the model's ``f`` is
    computed in that basis (half the identity up to rounding).  The map is
    then checked to be multiplicative on seeded random pairs.
    Refuses with :class:`MinimalityRequired` on a non-minimal algebra.
    """
    if records is None:
        records = enumerate_idempotents(A, cfg)
    rep = require_minimal(A, records, cfg.classify_tol)
    ell2 = rep.extremal_sq_length
    A1, k = alg.normalize(A, lambda _: [ell2])
    e = rep.unit

    U = complement_basis(A1, e)
    f = 0.5 * (U.T @ A1.gram @ U)
    f = (f + f.T) / 2
    phi = np.column_stack([e, U])
    model = SpinFactorModel(f, iso=phi)

    rng = np.random.default_rng(seed)
    hom = 0.0
    explicit = 0.0
    for _ in range(samples):
        z = rng.standard_normal(A.dim)
        w = rng.standard_normal(A.dim)
        x, y = phi @ z, phi @ w
        xy = alg.multiply(A1, x, y)
        hom = max(hom, alg.norm(A1, phi @ model.product(z, w) - xy))
        explicit = max(explicit, alg.norm(A1, xy - explicit_product(A1, x, y, e)))

    cs = _basis_idempotents(A1, extremal_set(_nontrivial(records), cfg.classify_tol), e)
    sq = sq1 = None
    if cs:
        es = [2.0 * c - e for c in cs]
        sq = max(alg.norm(A1, alg.square(A1, ei) - e) for ei in es)
        sq1 = 0.0
        for i, ci in enumerate(cs):
            for j, cj in enumerate(cs):
                if i != j:
                    target = (1.0 - 2.0 * alg.inner(A1, e - ci, cj)) * e
                    sq1 = max(sq1, alg.norm(A1, alg.multiply(A1, es[i], es[j]) - target))
    cond = float(np.linalg.cond(A1.chol @ phi))
    return IsomorphismReport(model, phi, k, hom, explicit, sq, sq1, cs, samples, tol, cond)
