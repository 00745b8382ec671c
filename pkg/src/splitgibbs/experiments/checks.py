"""Structured Gaussian samplers against a dense Cholesky reference.

Each check builds a small random problem, computes the exact mean and
per-pixel variance from the dense precision, draws ``n_draws`` samples
with the structured sampler and reports the largest standardized error
over pixels. The auxiliary-variable sampler is a Markov chain, so its
standard errors come from batch means instead of the iid formula.
"""
from __future__ import annotations

import numpy as np

from ..gaussian import (
    GaussianSpec,
    NoisePrecision,
    default_mu1,
    sample_aux_dissociated,
    sample_fourier_diagonal,
    sample_sherman_morrison,
)
from ..operators import CirculantOperator, MaskOperator, densify, gaussian_kernel, laplacian_kernel
from ..rng import DATA_STREAM, make_rng

SAMPLERS = ("fourier", "aux", "sherman_morrison")
N_BATCHES = 50


def _dense_moments(Q, b):
    cov = np.linalg.inv(Q)
    return cov @ b.ravel(), np.diag(cov)


def _iid_z(draws, mean, var):
    n = draws.shape[0]
    m = draws.mean(axis=0)
    v = draws.var(axis=0, ddof=1)
    z_mean = (m - mean) / np.sqrt(var / n)
    z_var = (v - var) / (var * np.sqrt(2.0 / (n - 1)))
    return float(np.max(np.abs(z_mean))), float(np.max(np.abs(z_var)))


def _batch_z(draws, mean, var, n_batches=N_BATCHES):
    n = draws.shape[0] - draws.shape[0] % n_batches
    b = draws[:n].reshape(n_batches, -1, draws.shape[1])
    m = draws[:n].mean(axis=0)
    bm = b.mean(axis=1)
    bv = ((b - m) ** 2).mean(axis=1)
    v = bv.mean(axis=0)
    se_m = bm.std(axis=0, ddof=1) / np.sqrt(n_batches)
    se_v = bv.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return float(np.max(np.abs((m - mean) / se_m))), float(np.max(np.abs((v - var) / se_v)))


def _problem_rng(seed):
    return make_rng(seed, DATA_STREAM)


def check_fourier(size=8, n_draws=20000, seed=0):
    prng = _problem_rng(seed)
    shape = (size, size)
    H = CirculantOperator.from_kernel(gaussian_kernel(3, 1.0), shape)
    L = CirculantOperator.from_kernel(laplacian_kernel(), shape)
    spec = GaussianSpec(prng.standard_normal(shape) * 3.0, [(2.0, H), (0.05, L)], tau=0.5)
    mean, var = _dense_moments(spec.dense(), spec.mean_rhs)
    rng = make_rng(seed, 1)
    draws = np.array([sample_fourier_diagonal(spec, rng).ravel() for _ in range(n_draws)])
    return _iid_z(draws, mean, var)


def check_aux(size=8, n_draws=20000, seed=0, burn=200):
    prng = _problem_rng(seed)
    shape = (size, size)
    H = CirculantOperator.from_kernel(gaussian_kernel(3, 1.0), shape)
    sigma = np.where(prng.random(shape) < 0.35, 2.0, 1.0)
    omega = NoisePrecision.from_std(sigma.ravel())
    rho2 = 0.5
    mean_terms = prng.standard_normal(shape) * 3.0
    hd = densify(H)
    Q = hd.T @ (omega.diag[:, None] * hd) + np.eye(hd.shape[0]) / rho2
    mean, var = _dense_moments(Q, mean_terms)
    rng = make_rng(seed, 2)
    mu1 = default_mu1(omega)
    v = np.zeros(shape)
    out = np.empty((n_draws, hd.shape[0]))
    for t in range(burn + n_draws):
        x, v = sample_aux_dissociated(H, omega, rho2, mean_terms, v, mu1, rng)
        if t >= burn:
            out[t - burn] = x.ravel()
    return _batch_z(out, mean, var)


def check_sherman_morrison(size=8, n_draws=20000, seed=0):
    prng = _problem_rng(seed)
    shape = (size, size)
    keep = prng.random(shape) < 0.6
    mask = MaskOperator.from_boolean(keep)
    sigma2, rho2 = 0.3, 2.0
    y = prng.standard_normal(mask.m) * 2.0
    anchor = prng.standard_normal(shape)
    md = densify(mask)
    Q = md.T @ md / sigma2 + np.eye(md.shape[1]) / rho2
    b = md.T @ y / sigma2 + anchor.ravel() / rho2
    mean, var = _dense_moments(Q, b)
    rng = make_rng(seed, 3)
    draws = np.array([sample_sherman_morrison(mask, sigma2, rho2, y, anchor, rng).ravel()
                      for _ in range(n_draws)])
    return _iid_z(draws, mean, var)


CHECKS = {"fourier": check_fourier, "aux": check_aux, "sherman_morrison": check_sherman_morrison}


def gaussian_check(size=8, n_draws=20000, seed=0, bound=4.0):
    """Rows of ``(sampler, max |z| of mean, max |z| of variance, passed)``."""
    rows = []
    for name in SAMPLERS:
        zm, zv = CHECKS[name](size=size, n_draws=n_draws, seed=seed)
        rows.append((name, zm, zv, int(zm <= bound and zv <= bound)))
    return rows
