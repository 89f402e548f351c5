"""End-to-end pipeline: validate, unit, search, minimality, identities, isomorphism."""
from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import algebra as alg
from . import search as srch
from . import structure as st
from .algebra import AlgebraSpec

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_AXIOM = 3
EXIT_NON_UNITAL = 4
EXIT_SEARCH = 5

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class Tolerances:
    axiom: float = alg.AXIOM_TOL
    identity: float = st.IDENTITY_TOL
    conjugation: float = st.CONJUGATION_TOL
    jordan: float = 1e-10
    inequality: float = 1e-9
    homomorphism: float = st.HOM_TOL

    def halved(self) -> "Tolerances":
        return Tolerances(*(v / 2 for v in self.__dict__.values()))


@dataclass
class AnalysisConfig:
    search: srch.SearchConfig = field(default_factory=srch.SearchConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    samples: int = 1000
    jordan_samples: int = 100

    @classmethod
    def make(cls, seed: int = 0, multistart: Optional[int] = None, tol: Optional[float] = None,
             strict: bool = False) -> "AnalysisConfig":
        sc = srch.SearchConfig(multistart_count=multistart, seed=seed)
        if tol is not None:
            sc = replace(sc, classify_tol=tol)
        tols = Tolerances()
        if strict:
            sc, tols = sc.halved(), tols.halved()
        return cls(sc, tols)

    def as_dict(self) -> dict:
        return {"search": self.search.as_dict(), "tolerances": dict(self.tolerances.__dict__),
                "samples": self.samples, "jordan_samples": self.jordan_samples}


def check(value: float, threshold: float) -> dict:
    """A residual with its threshold and verdict."""
    value = float(value)
    return {"value": value, "threshold": float(threshold), "passed": bool(value <= threshold)}


class StageFailure(Exception):
    def __init__(self, stage: str, reason: str, exit_code: int):
        super().__init__(f"[{stage}] {reason}")
        self.stage = stage
        self.reason = reason
        self.exit_code = exit_code


@dataclass
class AnalysisReport:
    label: str
    dim: int
    config: dict
    stages: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    failed_stage: Optional[str] = None
    reason: Optional[str] = None
    exit_code: int = EXIT_OK

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK

    def as_dict(self, include_timings: bool = False) -> dict:
        d = {
            "schema_version": REPORT_SCHEMA,
            "label": self.label,
            "dim": self.dim,
            "status": "ok" if self.ok else "failed",
            "exit_code": self.exit_code,
            "failed_stage": self.failed_stage,
            "reason": self.reason,
            "config": self.config,
            "stages": self.stages,
            "residuals": self.residuals,
            "skipped": self.skipped,
            "idempotents": [r.as_dict() for r in self.records],
        }
        if include_timings:
            # wall clock differs between runs; kept out of the deterministic report
            d["timings"] = self.timings
        return d

    def to_machine(self, include_timings: bool = False) -> str:
        return json.dumps(_plain(self.as_dict(include_timings)), indent=1, sort_keys=True) + "\n"

    def to_human(self, max_records: int = 20) -> str:
        return render_human(self, max_records)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


@contextmanager
def _stage(report: AnalysisReport, name: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        report.timings[name] = time.perf_counter() - t0


def _product_formula_max(A: AlgebraSpec, cs: np.ndarray, e: np.ndarray, chunk: int = 200) -> float:
    """Max over all pairs of ``|2 c_i c_j - c_i - c_j + <e - c_i, c_j> e|``."""
    worst = 0.0
    G = A.gram
    for start in range(0, len(cs), chunk):
        X = cs[start:start + chunk]
        LX = np.einsum("ai,ijk->ajk", X, A.structure)
        P = np.einsum("ajk,bj->abk", LX, cs)
        coef = (e - X) @ G @ cs.T
        R = 2.0 * P - X[:, None, :] - cs[None, :, :] + coef[:, :, None] * e
        n2 = np.einsum("abi,ij,abj->ab", R, G, R)
        worst = max(worst, float(np.sqrt(max(n2.max(), 0.0))))
    return worst


def analyze(A: AlgebraSpec, cfg: Optional[AnalysisConfig] = None,
            stop_after: Optional[str] = None) -> AnalysisReport:
    """Run the full pipeline; stops at the first hard failure with a partial report.

    ``stop_after`` (``"validate"``, ``"search"``, ``"minimality"``) ends the
    run early for the narrower CLI subcommands.
    """
    cfg = cfg or AnalysisConfig()
    report = AnalysisReport(A.label, A.dim, cfg.as_dict())
    try:
        _run(A, cfg, report, stop_after)
    except StageFailure as exc:
        report.failed_stage = exc.stage
        report.reason = exc.reason
        report.exit_code = exc.exit_code
    return report


def _run(A: AlgebraSpec, cfg: AnalysisConfig, report: AnalysisReport, stop_after) -> None:
    tols = cfg.tolerances
    sc = cfg.search
    ctol = sc.classify_tol

    with _stage(report, "validate"):
        v = alg.validate(A, tols.axiom)
        report.stages["validate"] = v.as_dict()
    if not v.passed:
        raise StageFailure("validate", "; ".join(d[5:] for d in v.details if d.startswith("FAIL ")), EXIT_AXIOM)
    if stop_after == "validate":
        return

    with _stage(report, "unit"):
        e = alg.find_unit(A, tols.axiom)
        report.stages["unit"] = {"found": e is not None,
                                 "unit": None if e is None else e.tolist(),
                                 "sq_length": None if e is None else alg.inner(A, e, e)}
    if e is None and stop_after != "search":
        raise StageFailure("unit", "non-unital: no unit element within tolerance", EXIT_NON_UNITAL)

    with _stage(report, "search"):
        res = srch.search(A, sc)
        report.records = res.records
        report.stages["search"] = res.as_dict()
    nontrivial = [r for r in res.records if r.kind != srch.UNIT]
    if not res.records:
        raise StageFailure("search", "no idempotent found (zero algebra or exhausted budget)",
                           EXIT_SEARCH)

    with _stage(report, "extremal"):
        ext = srch.extremal_set(nontrivial or res.records, ctol)
        ell2 = ext[0].sq_length
        ineq = srch.extremal_inequality(A, ell2, cfg.samples, sc.seed, tols.inequality)
        report.stages["extremal"] = {"count": len(ext), "sq_length": ell2,
                                     "inequality": ineq.as_dict()}
        report.residuals["extremal_inequality"] = check(ineq.max_ratio - 1.0, tols.inequality)
        spectra = [srch.spectral_check(A, r, ctol) for r in ext]
        report.stages["extremal"]["spectral"] = [s.as_dict() for s in spectra]
        report.residuals["extremal_bound"] = check(
            max(s.max_restricted for s in spectra) - 0.5, ctol)
        report.residuals["eigenvalue_one_simple"] = check(
            sum(not s.eigenvalue_one_simple for s in spectra), 0)
    if stop_after == "search":
        return

    if not nontrivial:
        raise StageFailure("search", "no idempotent other than the unit found", EXIT_SEARCH)

    with _stage(report, "minimality"):
        try:
            mrep = st.minimality_test(A, res.records, ctol, unit=e)
        except st.StructureError as exc:
            raise StageFailure("minimality", str(exc), EXIT_SEARCH) from None
        report.stages["minimality"] = mrep.as_dict()
        conj = st.conjugation_identities(A, res.records, e)
        report.residuals["conjugate_idempotent"] = check(conj["barc"], tols.conjugation)
        report.residuals["conjugate_annihilates"] = check(conj["annihilate"], tols.conjugation)
        report.residuals["conjugate_orthogonal"] = check(conj["orthc"], tols.conjugation)
        report.residuals["unit_inner"] = check(conj["ec"], tols.conjugation)
    if stop_after == "minimality":
        return
    if not mrep.is_minimal:
        reason = f"not minimal: |e|^2 - 2|c|^2 = {mrep.gap:.6g}"
        report.skipped["identities"] = reason
        report.skipped["isomorphism"] = reason
        return

    with _stage(report, "identities"):
        A1, k = alg.normalize(A, lambda _: [ell2])
        recs1 = [srch.make_record(A1, r.c, sc, e) for r in res.records]
        srch.classify(recs1, ctol)
        ext1 = srch.extremal_set([r for r in recs1 if r.kind != srch.UNIT], ctol)
        cls = st.classify_idempotents_minimal(A1, recs1, ctol)
        report.stages["classification"] = cls.as_dict()

        half = max((st.half_eigenspace_check(A1, r, e, tols.identity).max_deviation
                    for r in ext1), default=0.0)
        report.residuals["half_eigenspace"] = check(half, tols.identity)
        cs = np.array([r.c for r in ext1])
        report.residuals["product_formula"] = check(_product_formula_max(A1, cs, e), tols.identity)

        rng = np.random.default_rng(sc.seed)
        X = rng.standard_normal((cfg.samples, A.dim))
        Y = rng.standard_normal((cfg.samples, A.dim))
        quad = max(st.quadratic_relation_check(A1, x, e) for x in X)
        report.residuals["quadratic_relation"] = check(quad, tols.identity)
        expl = max(alg.norm(A1, alg.multiply(A1, x, y) - st.explicit_product(A1, x, y, e))
                   for x, y in zip(X, Y))
        report.residuals["explicit_product"] = check(expl, tols.identity)
        jord = max(st.jordan_check(A1, x) for x in X[:cfg.jordan_samples])
        report.residuals["jordan_commutator"] = check(jord, tols.jordan)
        conj1 = st.conjugation_identities(A1, recs1, e, normalized=True)
        report.residuals["unit_inner_normalized"] = check(conj1["ec1"], tols.conjugation)
        span = st.span_check(A1, recs1, ctol)
        report.stages["span"] = span.as_dict()
        basis = st._basis_idempotents(A1, ext1, e)
        if basis:
            closure = st.subalgebra_closure(A1, basis + [e - c for c in basis], seed=sc.seed)
            report.residuals["subalgebra_closure"] = check(closure, tols.identity)
        report.stages["normalization"] = {"k": k}

    with _stage(report, "isomorphism"):
        iso = st.build_isomorphism(A, res.records, sc, cfg.samples, sc.seed, tols.homomorphism)
        report.stages["isomorphism"] = iso.as_dict()
        report.residuals["homomorphism"] = check(iso.max_hom_defect, tols.homomorphism)
        if iso.square_defect is not None:
            report.residuals["basis_square"] = check(iso.square_defect, tols.identity)
            report.residuals["basis_cross_product"] = check(iso.square1_defect, tols.identity)


def render_human(report: AnalysisReport, max_records: int = 20) -> str:
    out = [f"algebra: {report.label or '(unlabelled)'}  dim={report.dim}"]
    v = report.stages.get("validate")
    if v:
        out.append(f"validate: {'PASS' if v['passed'] else 'FAIL'}")
        out.extend("  " + d for d in v["details"])
    u = report.stages.get("unit")
    if u:
        out.append("unit: " + (f"found, |e|^2 = {u['sq_length']:.12g}" if u["found"] else "none"))
    s = report.stages.get("search")
    if s:
        out.append(f"search: {s['found']} idempotents from {s['starts']} starts "
                   f"(nilpotent {s['nilpotent_branch']}, refinement failures "
                   f"{s['refinement_failures']}, not converged {s['ascent_not_converged']})")
        for r in report.records[:max_records]:
            out.append(f"  {r.kind:8s} |c|^2={r.sq_length:.12g} residual={r.residual:.2e} "
                       f"manifold_dim={r.manifold_dim}")
        if len(report.records) > max_records:
            out.append(f"  ... {len(report.records) - max_records} more")
    x = report.stages.get("extremal")
    if x:
        out.append(f"extremal: {x['count']} records with |c|^2 = {x['sq_length']:.12g}")
        for sp in x["spectral"][:max_records]:
            vals = ", ".join(f"{t:.6f}" for t in sp["restricted_spectrum"])
            out.append(f"  L_c on c-perp: [{vals}]  max<=1/2: {sp['bound_ok']}")
        if len(x["spectral"]) > max_records:
            out.append(f"  ... {len(x['spectral']) - max_records} more")
    m = report.stages.get("minimality")
    if m:
        out.append(f"minimality: {'MINIMAL' if m['is_minimal'] else 'not minimal'} "
                   f"(|e|^2={m['unit_sq_length']:.12g}, |c|^2={m['extremal_sq_length']:.12g}, "
                   f"gap={m['gap']:.3e}, tol={m['tol']:.1e})")
        out.append(f"  {m['caveat']}")
    iso = report.stages.get("isomorphism")
    if iso:
        out.append(f"isomorphism: {'VERIFIED' if iso['verdict'] else 'FAILED'} onto spin factor "
                   f"m={iso['m']} (max defect {iso['max_hom_defect']:.3e} <= {iso['tol']:.1e})")
    if report.residuals:
        out.append("residuals:")
        for k in sorted(report.residuals):
            c = report.residuals[k]
            out.append(f"  {k:24s} {c['value']:.3e}  <= {c['threshold']:.1e}  "
                       f"{'pass' if c['passed'] else 'FAIL'}")
    for k, why in report.skipped.items():
        out.append(f"skipped {k}: {why}")
    if not report.ok:
        out.append(f"FAILED at {report.failed_stage}: {report.reason} (exit {report.exit_code})")
    return "\n".join(out) + "\n"
