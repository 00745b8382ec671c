import numpy as np
import pytest

from splitgibbs.admm import AdmmConfig, CgConfig, admm_from_terms, admm_solve, cg_solve
from splitgibbs.errors import ParameterError
from splitgibbs.experiments import load_bundled, run_inpaint, synthesize_inpaint
from splitgibbs.experiments.inpaint import InpaintParams
from splitgibbs.gaussian import NoisePrecision
from splitgibbs.operators import CirculantOperator, densify, gaussian_kernel, laplacian_kernel
from splitgibbs.potentials import BlurLikelihood, CirculantGaussianTerm, DiagonalGaussianTerm
from splitgibbs.rng import make_rng


def test_scalar_quadratic_fixed_point():
    # f = 0.5 ||x - y||^2, g = 0.5 lam ||x||^2, y = 1, lam = 1 -> x* = 0.5
    f = DiagonalGaussianTerm(1.0, np.ones((1, 1)))
    g = DiagonalGaussianTerm(1.0, np.zeros((1, 1)))
    res = admm_from_terms(f, g, AdmmConfig(rho2=0.7, max_iters=2000, tol_primal=1e-12, tol_dual=1e-12),
                          np.zeros((1, 1)))
    assert res.converged
    assert abs(res.x[0, 0] - 0.5) < 1e-8


def test_zero_weight_g_returns_argmin_f():
    y = make_rng(0).standard_normal((3, 3))
    f = DiagonalGaussianTerm(2.0, y)
    g = DiagonalGaussianTerm(0.0, np.zeros((3, 3)))
    res = admm_from_terms(f, g, AdmmConfig(rho2=1.0, max_iters=3000, tol_primal=1e-10, tol_dual=1e-10),
                          np.zeros((3, 3)))
    np.testing.assert_allclose(res.x, y, atol=1e-8)
    assert res.residuals[-1][1] <= 1e-10


def test_residual_rows_and_config_validation():
    f = DiagonalGaussianTerm(1.0, np.ones((2, 2)))
    res = admm_from_terms(f, f, AdmmConfig(rho2=1.0, max_iters=5), np.zeros((2, 2)))
    assert [r[0] for r in res.residuals] == list(range(1, res.iters + 1))
    for kw in ({"rho2": 0.0}, {"rho2": 1.0, "tol_primal": 0.0}, {"rho2": 1.0, "max_iters": 0}):
        with pytest.raises(ParameterError):
            AdmmConfig(**kw)


def test_cg_identity_and_diagonal():
    b = make_rng(1).standard_normal(8)
    res = cg_solve(lambda v: v, b)
    assert res.converged and res.iters == 1
    np.testing.assert_allclose(res.x, b)
    d = np.arange(1.0, 9.0)
    res = cg_solve(lambda v: d * v, np.ones(8), CgConfig(tol=1e-12))
    np.testing.assert_allclose(res.x, 1.0 / d, rtol=1e-10)


def _deconv_operator():
    shape = (8, 8)
    rng = make_rng(2)
    H = CirculantOperator.from_kernel(gaussian_kernel(3, 1.0), shape)
    L = CirculantOperator.from_kernel(laplacian_kernel(), shape)
    omega = np.where(rng.random(shape) < 0.35, 1 / 40.0**2, 1 / 13.0**2)
    gamma = 6e-3
    hd, ld = densify(H), densify(L)
    Q = hd.T @ (omega.ravel()[:, None] * hd) + gamma * ld.T @ ld

    def apply_a(x):
        return H.adjoint(omega * H.apply(x)) + gamma * L.adjoint(L.apply(x))

    return Q, apply_a, rng.standard_normal(shape)


def test_cg_matches_dense_solve_and_a_norm_error_decreases():
    Q, apply_a, b = _deconv_operator()
    ref = np.linalg.solve(Q, b.ravel())
    tol = 1e-10
    res = cg_solve(apply_a, b, CgConfig(tol=tol, max_iters=5000))
    assert res.converged
    # relative error bounded through the condition number of Q
    cond = np.linalg.cond(Q)
    assert np.linalg.norm(res.x.ravel() - ref) / np.linalg.norm(ref) <= tol * cond
    errs = []
    for k in range(1, 40):
        xk = cg_solve(apply_a, b, CgConfig(tol=1e-300, max_iters=k)).x.ravel()
        e = xk - ref
        errs.append(e @ Q @ e)
    assert all(b_ <= a_ * (1 + 1e-9) for a_, b_ in zip(errs, errs[1:]))


def test_cg_non_convergence_flag_and_indefinite():
    Q, apply_a, b = _deconv_operator()
    res = cg_solve(apply_a, b, CgConfig(tol=1e-14, max_iters=2))
    assert not res.converged and res.iters == 2
    with pytest.raises(np.linalg.LinAlgError):
        cg_solve(lambda v: -v, np.ones(3))
    assert cg_solve(apply_a, np.zeros((8, 8))).iters == 0


def test_admm_fixed_point_is_spa_conditional_modes():
    shape = (8, 8)
    rng = make_rng(3)
    H = CirculantOperator.from_kernel(gaussian_kernel(3, 1.0), shape)
    L = CirculantOperator.from_kernel(laplacian_kernel(), shape)
    sigma = np.where(rng.random(shape) < 0.35, 3.0, 1.0)
    y = rng.standard_normal(shape) * 5
    f = BlurLikelihood(H, NoisePrecision.from_std(sigma.ravel()), y)
    g = CirculantGaussianTerm([(0.2, L)])
    rho2 = 1.5
    res = admm_from_terms(f, g, AdmmConfig(rho2=rho2, max_iters=5000, tol_primal=1e-13, tol_dual=1e-13),
                          H.adjoint(y))
    hd, ld = densify(H), densify(L)
    om = 1 / sigma.ravel() ** 2
    Q = hd.T @ (om[:, None] * hd) + 0.2 * ld.T @ ld
    x_map = np.linalg.solve(Q, hd.T @ (om * y.ravel()))
    np.testing.assert_allclose(res.x.ravel(), x_map, atol=1e-8)
    np.testing.assert_allclose(f.mode(res.z - res.u, rho2), res.x, atol=1e-8)
    np.testing.assert_allclose(g.mode(res.x + res.u, rho2), res.z, atol=1e-8)


def test_primal_residual_driven_below_tolerance():
    f = DiagonalGaussianTerm(1.0, make_rng(4).standard_normal((4, 4)))
    g = DiagonalGaussianTerm(3.0, np.zeros((4, 4)))
    res = admm_from_terms(f, g, AdmmConfig(rho2=0.5, max_iters=1000, tol_primal=1e-9, tol_dual=1e-9),
                          np.zeros((4, 4)))
    assert res.converged and res.residuals[-1][1] <= 1e-9


def test_salsa_inpainting_close_to_long_run_reference():
    problem = synthesize_inpaint(load_bundled("cameraman"), seed=0)
    short = run_inpaint(problem, "salsa", InpaintParams(), seed=0)
    long = run_inpaint(problem, "salsa", InpaintParams(admm_max_iters=3000, admm_tol=1e-7), seed=0)
    assert abs(short.metrics["isnr_x"] - long.metrics["isnr_x"]) < 0.1
    assert short.metrics["isnr_x"] > 0
