"""Inpainting with a total-variation prior.

Posterior: ``exp(-||H x - y||^2 / (2 sigma2) - beta TV(x))`` with ``H`` a
binary mask keeping ``M`` of the ``N`` pixels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..admm import AdmmConfig, admm_solve
from ..errors import ParameterError
from ..operators import MaskOperator
from ..potentials import MaskedGaussianLikelihood, TVTerm
from ..proximal import DEFAULT_PROX_ITERS, MyulaParams
from ..rng import DATA_STREAM, make_rng
from ..samplers import MyulaModel, SplitModel, run_chain
from . import metrics as mt

DEFAULT_BETA = 0.2
DEFAULT_KEEP_FRACTION = 0.6
DEFAULT_SNR_DB = 40.0

# The published parameter assignment reads "rho = 2.8, alpha = 1 for SP and
# rho = 2 for SPA", but SP has no alpha. "swapped" gives alpha to SPA;
# "literal" keeps the text as printed.
PARAMETER_PRESETS = {
    "swapped": {"sp": {"rho": 2.0, "alpha": 0.0}, "spa": {"rho": 2.8, "alpha": 1.0}},
    "literal": {"sp": {"rho": 2.8, "alpha": 0.0}, "spa": {"rho": 2.0, "alpha": 1.0}},
}

METHODS = ("sp", "spa", "pmyula", "salsa")


@dataclass
class InpaintProblem:
    mask: MaskOperator
    sigma2: float
    beta: float
    y: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape != self.mask.out_shape:
            raise ParameterError("y length must equal the number of kept pixels")
        if self.beta <= 0:
            raise ParameterError("beta must be > 0")
        if self.sigma2 < 0:
            raise ParameterError("sigma2 must be >= 0")

    @property
    def shape(self):
        return self.mask.in_shape

    def filled(self, fill: float | None = None) -> np.ndarray:
        """Observation on the lattice, missing pixels set to the observed mean."""
        return mt.fill_missing(self.y, self.mask, fill)

    def likelihood(self) -> MaskedGaussianLikelihood:
        if self.sigma2 <= 0:
            raise ParameterError("noiseless problem: sigma2 must be > 0 to sample")
        return MaskedGaussianLikelihood(self.mask, self.sigma2, self.y)


def synthesize_inpaint(truth, keep_fraction: float = DEFAULT_KEEP_FRACTION,
                       target_snr_db: float = DEFAULT_SNR_DB, seed: int = 0,
                       beta: float = DEFAULT_BETA, replicate: int = 0,
                       sigma: float | None = None) -> InpaintProblem:
    """Keep ``floor(keep_fraction N)`` random pixels and add white noise at ``target_snr_db``.

    ``sigma2 = ||H x||^2 / (M 10^(SNR/10))``; ``target_snr_db = inf`` is noiseless.
    An explicit ``sigma`` (noise std) overrides the SNR target. ``replicate``
    selects an independent noise and mask realisation for the same seed.
    """
    truth = np.asarray(truth, dtype=float)
    if not 0 < keep_fraction <= 1:
        raise ParameterError("keep_fraction must be in (0, 1]")
    n = truth.size
    m = int(np.floor(keep_fraction * n))
    if m < 1:
        raise ParameterError("keep_fraction keeps no pixel")
    rng = make_rng(seed, DATA_STREAM + replicate)
    kept = np.sort(rng.choice(n, size=m, replace=False))
    mask = MaskOperator(kept, truth.shape)
    clean = mask.apply(truth)
    if sigma is not None:
        if sigma < 0:
            raise ParameterError("sigma must be >= 0")
        sigma2 = float(sigma) ** 2
    elif np.isinf(target_snr_db):
        sigma2 = 0.0
    else:
        sigma2 = float(np.sum(clean**2)) / (m * 10.0 ** (target_snr_db / 10.0))
    y = clean + np.sqrt(sigma2) * rng.standard_normal(m) if sigma2 > 0 else clean.copy()
    return InpaintProblem(mask=mask, sigma2=sigma2, beta=beta, y=y, truth=truth)


@dataclass
class InpaintParams:
    rho: float = 2.8
    alpha: float = 1.0
    t_mc: int = 1000
    t_bi: int = 200
    prox_iters: int = DEFAULT_PROX_ITERS
    keep_samples: bool = True
    ci_level: float = 0.9
    # ADMM / SALSA
    admm_rho2: float = 4.0
    admm_max_iters: int = 300
    admm_tol: float = 1e-5
    admm_prox_iters: int = 100

    @classmethod
    def preset(cls, method: str, preset: str = "swapped", **kw) -> "InpaintParams":
        vals = dict(PARAMETER_PRESETS[preset].get(method.lower(), {}))
        vals.update(kw)
        return cls(**vals)


def pmyula_params(problem: InpaintProblem, prox_iters: int = DEFAULT_PROX_ITERS) -> MyulaParams:
    """Direct MYULA step sizes: ``lam = 1 / L_f`` and ``gamma = lam / 4``.

    ``L_f = lambda_max(H^T H) / sigma2``, the same rule as the split z-step
    (``lam = rho2``, ``gamma = rho2 / 4``, whose smooth part has Lipschitz
    constant ``1 / rho2``).
    """
    lf = problem.likelihood().lipschitz
    lam = 1.0 / lf
    return MyulaParams(lam=lam, gamma=lam / 4.0, prox_iters=prox_iters)


def _finish(bundle, problem: InpaintProblem, params: InpaintParams, method: str):
    m = {"beta": problem.beta}
    if method in ("sp", "spa"):
        m["rho"] = params.rho
        m["alpha"] = params.alpha if method == "spa" else 0.0
    if problem.truth is not None:
        yf = problem.filled()
        m["isnr_x"] = mt.isnr(problem.truth, yf, bundle.mmse_x)
        m["snr_x"] = mt.snr(problem.truth, bundle.mmse_x)
        m["psnr_x"] = mt.psnr(problem.truth, bundle.mmse_x)
        if bundle.mmse_z is not None and method in ("sp", "spa"):
            m["isnr_z"] = mt.isnr(problem.truth, yf, bundle.mmse_z)
        if bundle.ci_low is not None:
            inside = (problem.truth >= bundle.ci_low) & (problem.truth <= bundle.ci_high)
            m["ci_coverage"] = float(np.mean(inside))
            m["ci_mean_width"] = float(np.mean(bundle.ci_high - bundle.ci_low))
    rec = bundle.record
    if rec is not None and rec.post_burn_trace.size > 10:
        r = mt.acf(rec.post_burn_trace, 10)
        m["acf_lag1"] = float(r[1])
        m["acf_lag10"] = float(r[10])
    if bundle.residuals:
        m["admm_iters"] = len(bundle.residuals)
    bundle.metrics = m
    return bundle


def run_inpaint(problem: InpaintProblem, method: str = "spa", params: InpaintParams | None = None,
                seed: int = 0, stream_id: int = 0):
    """Restore with SP, SPA, direct P-MYULA (MMSE estimates) or SALSA (MAP)."""
    from . import EstimateBundle

    method = method.lower()
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; choose from {METHODS}")
    params = params or InpaintParams.preset(method)
    like = problem.likelihood()
    tv = TVTerm(problem.beta, problem.shape, prox_iters=params.prox_iters,
                mode_iters=params.admm_prox_iters)
    z0 = problem.filled()

    if method == "salsa":
        cfg = AdmmConfig(rho2=params.admm_rho2, max_iters=params.admm_max_iters,
                         tol_primal=params.admm_tol, tol_dual=params.admm_tol)
        res = admm_solve(like.mode, tv.mode, cfg, z0)
        bundle = EstimateBundle(mmse_x=res.x, mmse_z=res.z, mmse_u=res.u, residuals=res.residuals)
        return _finish(bundle, problem, params, method)

    if method == "pmyula":
        model = MyulaModel(like, tv, pmyula_params(problem, params.prox_iters))
        state = model.initial_state(z0)
    else:
        alpha2 = params.alpha**2 if method == "spa" else 0.0
        if method == "spa" and alpha2 == 0:
            raise ParameterError("SPA needs alpha > 0")
        model = SplitModel(like, tv, params.rho**2, alpha2)
        state = model.initial_state(z0)

    rng = make_rng(seed, stream_id)
    rec = run_chain(model, params.t_mc, params.t_bi, state, rng, keep_samples=params.keep_samples)
    bundle = EstimateBundle(mmse_x=rec.x_moments.mean, record=rec)
    if method != "pmyula":
        bundle.mmse_z = rec.z_moments.mean
        bundle.mmse_u = rec.u_moments.mean
    if rec.kept_samples is not None and rec.kept_samples.shape[0] >= 2:
        bundle.ci_low, bundle.ci_high = mt.credibility(rec.kept_samples, params.ci_level)
    return _finish(bundle, problem, params, method)
