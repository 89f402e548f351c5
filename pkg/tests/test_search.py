import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metrised import algebra as alg
from metrised import constructions as cons
from metrised import search as S
from metrised.search import HypothesisError, SearchConfig

from helpers import FIXTURES, cached_search


def fd_gradient(A, x, h, eps=1e-5):
    return (S.cubic_form(A, x + eps * h) - S.cubic_form(A, x - eps * h)) / (2 * eps)


@pytest.mark.parametrize("key", ["rsquare", "sym3", "spinf4"])
def test_gradient_matches_finite_differences(key, rng):
    A = FIXTURES[key]()
    for _ in range(100):
        x, h = rng.standard_normal((2, A.dim))
        exact = alg.inner(A, S.cubic_gradient(A, x), h)
        assert abs(fd_gradient(A, x, h) - exact) <= 1e-6 * max(1.0, abs(exact))


def test_riemannian_gradient_is_tangent(rng):
    A = FIXTURES["spinf3"]()
    x = rng.standard_normal(4)
    x /= alg.norm(A, x)
    assert abs(alg.inner(A, S.riemannian_gradient(A, x), x)) < 1e-12


def test_ascent_fixed_point_at_idempotent_direction():
    A = cons.rsquare()
    res = S.sphere_ascent(A, [1.0, 0.0])
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-15)
    assert res.converged and res.iterations == 0


def test_ascent_reaches_nearest_axis():
    A = cons.rsquare()
    res = S.sphere_ascent(A, [0.9, 0.436])
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-9)
    assert np.linalg.norm(S.riemannian_gradient(A, res.x)) <= 1e-8


@pytest.mark.parametrize("key", ["sym3", "spinf5", "rsquare4"])
def test_ascent_output_is_stationary_unit_vector(key, rng):
    A = FIXTURES[key]()
    for _ in range(5):
        res = S.sphere_ascent(A, rng.standard_normal(A.dim))
        assert res.converged
        assert alg.norm(A, res.x) == pytest.approx(1.0, abs=1e-12)
        scale = A.tensor_scale
        assert alg.norm(A, S.riemannian_gradient(A, res.x)) <= 1e-8 * max(1.0, scale)


def test_refine_rescales_stationary_point():
    A = cons.rsquare()
    rec = S.refine_idempotent(A, [0.3, 0.0])
    np.testing.assert_allclose(rec.c, [1.0, 0.0], atol=1e-15)
    assert rec.residual <= 1e-12 and rec.sq_length == pytest.approx(1.0)


def test_refine_nilpotent_branch_returns_none():
    # spin factor with f = 1: u = (0, 1) has u^2 = eps, <u^2, u> = 0
    A = cons.spin_factor([[1.0]])
    assert S.refine_idempotent(A, [0.0, 1.0]) is None
    assert S.refine_idempotent(A, [0.0, 0.0]) is None


def test_newton_raises_when_budget_too_small():
    A = cons.sym_jordan(2)
    with pytest.raises(S.RefinementError):
        S.newton_idempotent(A, [0.7, 0.1, 0.3], SearchConfig(newton_max_iters=1))


def rsquare_oracle():
    # x1^2 = x1 and x2^2 = x2 decouple: each coordinate is 0 or 1
    return [np.array([a, b], dtype=float) for a in (0, 1) for b in (0, 1)]


def test_rsquare_enumeration_matches_oracle():
    A = cons.rsquare()
    oracle = rsquare_oracle()
    assert all(np.array_equal(alg.square(A, c), c) for c in oracle)
    recs = S.enumerate_idempotents(A, SearchConfig(multistart_count=50))
    assert len(recs) == 3
    for target in oracle[1:]:
        assert min(np.max(np.abs(r.c - target)) for r in recs) <= 1e-10
    kinds = {tuple(np.round(r.c).astype(int)): r.kind for r in recs}
    assert kinds == {(1, 1): "unit", (1, 0): "extremal", (0, 1): "extremal"}


def test_spin1_closed_form():
    _, res = cached_search("spin1")
    found = sorted(tuple(np.round(r.c, 12)) for r in res.records)
    assert found == [(0.5, -0.5), (0.5, 0.5), (1.0, 0.0)]


@pytest.mark.parametrize("m", [2, 3, 5])
def test_spin_manifold_dimension(m):
    _, res = cached_search(f"spin{m}")
    ext = [r for r in res.records if r.kind == "extremal"]
    assert ext and all(r.manifold_dim == m - 1 for r in ext)
    unit = [r for r in res.records if r.kind == "unit"]
    assert len(unit) == 1 and unit[0].manifold_dim == 0


def test_records_meet_newton_tolerance():
    for key in ("sym3", "spinf6", "R+sym2"):
        _, res = cached_search(key)
        assert res.records and all(r.residual <= 1e-12 for r in res.records)


def test_search_deterministic():
    A = FIXTURES["sym3"]()
    cfg = SearchConfig(multistart_count=40, seed=7)
    a, b = S.search(A, cfg), S.search(A, cfg)
    assert len(a.records) == len(b.records)
    for r, s in zip(a.records, b.records):
        np.testing.assert_array_equal(r.c, s.c)


def test_extremal_set_sym3_and_rsquare():
    _, res = cached_search("sym3")
    nontrivial = [r for r in res.records if r.kind != "unit"]
    ext = S.extremal_set(nontrivial)
    assert ext and all(r.sq_length == pytest.approx(1.0, abs=1e-8) for r in ext)
    assert {r.kind for r in ext} == {"extremal"}
    _, res = cached_search("rsquare")
    assert len(S.extremal_set([r for r in res.records if r.kind != "unit"])) == 2


def peirce_oracle(n, k):
    """Eigenvalues of X -> (PX + XP)/2 for P = diag(1..1, 0..0) of rank k."""
    p = np.array([1.0] * k + [0.0] * (n - k))
    return sorted((p[i] + p[j]) / 2 for i in range(n) for j in range(i, n))


@pytest.mark.parametrize("key,n", [("sym3", 3), ("sym4", 4)])
def test_lc_spectrum_matches_peirce_oracle(key, n):
    _, res = cached_search(key)
    for r in res.records:
        k = int(round(r.sq_length))
        np.testing.assert_allclose(np.sort(r.lc_spectrum), peirce_oracle(n, k), atol=1e-8)


def test_spectral_check_spin2_and_sym3():
    _, res = cached_search("spin2")
    for r in res.records:
        if r.kind == "extremal":
            rep = S.spectral_check(FIXTURES["spin2"](), r)
            assert rep.passed
            np.testing.assert_allclose(rep.restricted_spectrum, [0.0, 0.5], atol=1e-8)
    A, res = cached_search("sym3")
    for r in (r for r in res.records if r.kind == "extremal"):
        rep = S.spectral_check(A, r)
        assert rep.passed
        assert all(min(abs(v), abs(v - 0.5)) <= 1e-8 for v in rep.restricted_spectrum)


def test_spectral_check_on_unit_fails():
    A, res = cached_search("spin3")
    unit = next(r for r in res.records if r.kind == "unit")
    rep = S.spectral_check(A, unit)
    assert not rep.passed and rep.max_restricted == pytest.approx(1.0)


def test_extremal_inequality_on_normalized_fixture():
    A, k = S.normalize(FIXTURES["spinf4"](), SearchConfig(multistart_count=100))
    rep = S.extremal_inequality(A, 1.0)
    assert rep.passed and rep.max_ratio <= 1.0 + 1e-9


def test_extremal_inequality_detects_missed_idempotent():
    # claiming |c|^2 = 4 in R+R (true value 1) must be refuted
    rep = S.extremal_inequality(cons.rsquare(), 4.0)
    assert not rep.passed and rep.max_ratio > 1.5


def test_subspace_stationary_spin():
    A = cons.spin_factor(np.eye(3))
    U = [np.array([1.0, 1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, 0.0])]
    u, lam, defect = S.subspace_stationary(A, U)
    assert alg.norm(A, u) == pytest.approx(1.0, abs=1e-12)
    assert defect <= 1e-8 and lam > 0


def test_subspace_stationary_rejects_null_subalgebra():
    A = cons.rsquare()
    B = cons.direct_sum(A, cons.zero_algebra(2))
    with pytest.raises(HypothesisError):
        S.subspace_stationary(B, [np.eye(4)[2], np.eye(4)[3]])


def test_subspace_stationary_where_form_vanishes():
    # U = span(u1, u2) in a spin factor: UU lies in R eps, orthogonal to U
    A = cons.spin_factor(np.eye(2))
    u, lam, defect = S.subspace_stationary(A, [np.eye(3)[1], np.eye(3)[2]])
    assert lam == pytest.approx(0.0, abs=1e-15) and defect <= 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(multistart_count=0)
    with pytest.raises(ValueError):
        SearchConfig(newton_tol=0.0)
    h = SearchConfig().halved()
    assert h.classify_tol == 5e-9 and h.newton_tol == 5e-13


def test_zero_algebra_search_is_empty():
    res = S.search(cons.zero_algebra(3), SearchConfig(multistart_count=5))
    assert res.records == [] and res.unit is None


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4))
def test_random_algebra_records_are_idempotents(seed, n):
    A = cons.random_metrised(n, np.random.default_rng(seed))
    res = S.search(A, SearchConfig(multistart_count=10 * n))
    for r in res.records:
        assert r.residual <= 1e-12
        assert r.sq_length > 0
    if res.records:
        ell = min(r.sq_length for r in res.records)
        rep = S.extremal_inequality(A, ell, samples=200)
        assert rep.max_ratio <= 1.0 + 1e-9
