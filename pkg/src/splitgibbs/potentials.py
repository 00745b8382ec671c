"""Potential terms of a split posterior.

A term ``h`` knows how to

* evaluate itself (``value``),
* draw from ``p(w) ~ exp(-h(w) - ||w - anchor||^2 / (2 rho2))`` (``draw``),
* return the mode of that same density (``mode``), which is the ADMM step.

Each term declares one sampling ``strategy``: ``"exact-gaussian"``,
``"diagonal-gaussian"`` or ``"myula"``. Terms that need persistent auxiliary
state across sweeps (the auxiliary ``v`` of the blur likelihood, the warm
dual of the TV prox) keep it in the ``aux`` dict handed to ``draw``.
"""
from __future__ import annotations

import numpy as np

from . import gaussian as gs
from .admm import CgConfig, cg_solve
from .errors import ConfigurationError, DimensionError, ParameterError
from .operators import CirculantOperator, MaskOperator
from .proximal import DEFAULT_PROX_ITERS, MyulaParams, ProxSpec, myula_step, tv_prox, tv_value

STRATEGIES = ("exact-gaussian", "diagonal-gaussian", "myula")


class PotentialTerm:
    strategy: str = ""
    shape: tuple = ()

    def value(self, x) -> float:
        raise NotImplementedError

    def draw(self, current, anchor, rho2, rng, aux):
        raise NotImplementedError

    def mode(self, anchor, rho2):
        raise NotImplementedError

    def init_aux(self, x) -> dict:
        return {}

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"{type(self).__name__}: unknown strategy {self.strategy!r}")
        if self.strategy == "myula" and not callable(getattr(self, "prox", None)):
            raise ConfigurationError(f"{type(self).__name__}: MYULA strategy requires a prox")


class ZeroTerm(PotentialTerm):
    """``h = 0``: the conditional is ``N(anchor, rho2 I)``."""

    strategy = "diagonal-gaussian"

    def __init__(self, shape):
        self.shape = tuple(shape)

    def value(self, x):
        return 0.0

    def gradient(self, x):
        return np.zeros(np.shape(x))

    def draw(self, current, anchor, rho2, rng, aux):
        return anchor + np.sqrt(rho2) * rng.standard_normal(np.shape(anchor))

    def mode(self, anchor, rho2):
        return np.array(anchor, dtype=float)


class DiagonalGaussianTerm(PotentialTerm):
    """``h(x) = 0.5 * sum(precision * (x - center)^2)``."""

    strategy = "diagonal-gaussian"

    def __init__(self, precision, center):
        self.center = np.asarray(center, dtype=float)
        self.precision = np.broadcast_to(np.asarray(precision, dtype=float), self.center.shape)
        if np.any(self.precision < 0):
            raise ParameterError("precision must be >= 0")
        self.shape = self.center.shape

    def value(self, x):
        return 0.5 * float(np.sum(self.precision * (x - self.center) ** 2))

    def gradient(self, x):
        return self.precision * (x - self.center)

    def _moments(self, anchor, rho2):
        prec = self.precision + 1.0 / rho2
        return (self.precision * self.center + anchor / rho2) / prec, 1.0 / prec

    def draw(self, current, anchor, rho2, rng, aux):
        mean, var = self._moments(anchor, rho2)
        return mean + np.sqrt(var) * rng.standard_normal(mean.shape)

    def mode(self, anchor, rho2):
        return self._moments(anchor, rho2)[0]


class CirculantGaussianTerm(PotentialTerm):
    """``h(x) = sum_i c_i/2 ||K_i x - t_i||^2 + tau/2 ||x||^2`` with circulant ``K_i``.

    Covers the smoothness prior ``gamma/2 ||L x||^2`` and a homoscedastic blur
    likelihood. Conditionals are drawn exactly in the Fourier domain.
    """

    strategy = "exact-gaussian"

    def __init__(self, components, tau: float = 0.0):
        self.components = []
        shape = None
        for comp in components:
            c, k = comp[0], comp[1]
            t = comp[2] if len(comp) > 2 else None
            if not isinstance(k, CirculantOperator):
                raise ConfigurationError("CirculantGaussianTerm needs circulant operators")
            shape = k.shape if shape is None else shape
            if k.shape != shape:
                raise DimensionError("all operators must share one lattice")
            t = np.zeros(shape) if t is None else np.asarray(t, dtype=float)
            self.components.append((float(c), k, t))
        if shape is None:
            raise ConfigurationError("at least one component required")
        self.shape = shape
        self.tau = float(tau)
        self._linear = sum(c * k.adjoint(t) for c, k, t in self.components)

    def value(self, x):
        v = 0.5 * self.tau * float(np.sum(x * x))
        for c, k, t in self.components:
            v += 0.5 * c * float(np.sum((k.apply(x) - t) ** 2))
        return v

    def gradient(self, x):
        g = self.tau * x
        for c, k, t in self.components:
            g = g + c * k.adjoint(k.apply(x) - t)
        return g

    def conditional_spec(self, anchor, rho2) -> gs.GaussianSpec:
        return gs.GaussianSpec(
            mean_rhs=self._linear + anchor / rho2,
            circulant_terms=[(c, k) for c, k, _ in self.components],
            tau=self.tau + 1.0 / rho2,
        )

    def draw(self, current, anchor, rho2, rng, aux):
        return gs.sample_fourier_diagonal(self.conditional_spec(anchor, rho2), rng)

    def mode(self, anchor, rho2):
        return gs.solve_fourier_diagonal(self.conditional_spec(anchor, rho2))


class MaskedGaussianLikelihood(PotentialTerm):
    """``h(x) = ||H x - y||^2 / (2 sigma2)`` for a binary mask ``H``."""

    strategy = "diagonal-gaussian"

    def __init__(self, mask: MaskOperator, sigma2: float, y):
        if sigma2 <= 0:
            raise ParameterError("sigma2 must be > 0")
        self.mask = mask
        self.sigma2 = float(sigma2)
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != mask.out_shape:
            raise DimensionError("y does not match the mask output")
        self.shape = mask.in_shape

    def value(self, x):
        return float(np.sum((self.mask.apply(x) - self.y) ** 2)) / (2.0 * self.sigma2)

    def gradient(self, x):
        return self.mask.adjoint(self.mask.apply(x) - self.y) / self.sigma2

    @property
    def lipschitz(self) -> float:
        # lambda_max(H^T H) is 1 for any non-empty mask
        return (1.0 if self.mask.m else 0.0) / self.sigma2

    def draw(self, current, anchor, rho2, rng, aux):
        return gs.sample_sherman_morrison(self.mask, self.sigma2, rho2, self.y, anchor, rng)

    def mode(self, anchor, rho2):
        return gs.sherman_morrison_moments(self.mask, self.sigma2, rho2, self.y, anchor)[0]


class BlurLikelihood(PotentialTerm):
    """``h(x) = 0.5 (H x - y)^T Omega (H x - y)`` with circulant ``H``, diagonal ``Omega``.

    Conditionals are drawn with the auxiliary-variable scheme; the auxiliary
    ``v`` lives in ``aux["v"]`` and is carried from sweep to sweep.
    """

    strategy = "exact-gaussian"

    def __init__(self, H: CirculantOperator, omega: gs.NoisePrecision, y, mu1: float | None = None,
                 cg: CgConfig | None = None):
        self.H = H
        self.omega = omega
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != H.shape or omega.diag.size != self.y.size:
            raise DimensionError("H, Omega and y disagree in size")
        self.omega_d = omega.diag.reshape(H.shape)
        self.mu1 = gs.default_mu1(omega) if mu1 is None else float(mu1)
        if not self.mu1 * omega.spectral_norm < 1.0:
            raise ParameterError("mu1 * ||Omega|| must be < 1")
        self.cg = cg or CgConfig(tol=1e-12, max_iters=2000)
        self.shape = H.shape
        self._hty = H.adjoint(self.omega_d * self.y)

    def value(self, x):
        r = self.H.apply(x) - self.y
        return 0.5 * float(np.sum(self.omega_d * r * r))

    def gradient(self, x):
        return self.H.adjoint(self.omega_d * (self.H.apply(x) - self.y))

    def init_aux(self, x):
        return {"v": (1.0 / self.mu1 - self.omega_d) * self.H.apply(x)}

    def draw(self, current, anchor, rho2, rng, aux):
        if "v" not in aux:
            aux.update(self.init_aux(current))
        x, v = gs.sample_aux_dissociated(
            self.H, self.omega, rho2, self._hty + anchor / rho2, aux["v"], self.mu1, rng
        )
        aux["v"] = v
        return x

    def mode(self, anchor, rho2):
        def apply_a(x):
            return self.H.adjoint(self.omega_d * self.H.apply(x)) + x / rho2

        res = cg_solve(apply_a, self._hty + anchor / rho2, self.cg, x0=anchor)
        return res.x


class TVTerm(PotentialTerm):
    """``h(z) = beta * TV(z)``, sampled with proximal MYULA.

    ``lam``/``gamma`` default to ``rho2`` and ``rho2 / 4``. The prox dual is
    warm-started from the previous sweep (``aux["p"]``).
    """

    strategy = "myula"

    def __init__(self, beta: float, shape, prox_iters: int = DEFAULT_PROX_ITERS,
                 mode_iters: int = 200, lam: float | None = None, gamma: float | None = None,
                 warm_start: bool = True):
        if beta < 0:
            raise ParameterError("beta must be >= 0")
        self.beta = float(beta)
        self.shape = tuple(shape)
        self.prox_iters = int(prox_iters)
        self.mode_iters = int(mode_iters)
        self.lam = lam
        self.gamma = gamma
        self.warm_start = warm_start

    def value(self, x):
        return self.beta * tv_value(x)

    def prox(self, z, lam, iters=None, aux=None):
        iters = self.prox_iters if iters is None else iters
        if aux is None or not self.warm_start:
            return tv_prox(z, ProxSpec(self.beta, lam), iters)
        u, p = tv_prox(z, ProxSpec(self.beta, lam), iters, dual_init=aux.get("p"), return_dual=True)
        aux["p"] = p
        return u

    def myula_params(self, rho2) -> MyulaParams:
        lam = rho2 if self.lam is None else self.lam
        gamma = lam / 4.0 if self.gamma is None else self.gamma
        return MyulaParams(lam=lam, gamma=gamma, prox_iters=self.prox_iters)

    def draw(self, current, anchor, rho2, rng, aux):
        params = self.myula_params(rho2)
        return myula_step(
            current,
            lambda z: (z - anchor) / rho2,
            lambda z, lam: self.prox(z, lam, params.prox_iters, aux),
            params,
            rng,
        )

    def mode(self, anchor, rho2):
        return tv_prox(anchor, ProxSpec(self.beta, rho2), self.mode_iters)


def group_shrink(p, threshold: float):
    """Prox of ``threshold * sum_ij ||p_ij||_2`` for a ``(2, rows, cols)`` field."""
    norm = np.sqrt(p[0] ** 2 + p[1] ** 2)
    scale = np.maximum(1.0 - threshold / np.maximum(norm, 1e-300), 0.0)
    return p * scale


class GroupL2Term(PotentialTerm):
    """``h(p) = beta * sum_ij ||p_ij||_2`` on gradient fields; TV seen through ``K = grad``."""

    strategy = "myula"

    def __init__(self, beta: float, shape):
        self.beta = float(beta)
        self.shape = tuple(shape)

    def value(self, p):
        return self.beta * float(np.sum(np.sqrt(p[0] ** 2 + p[1] ** 2)))

    def prox(self, p, lam):
        return group_shrink(p, self.beta * lam)

    def draw(self, current, anchor, rho2, rng, aux):
        params = MyulaParams.for_split(rho2)
        return myula_step(current, lambda z: (z - anchor) / rho2, self.prox, params, rng)

    def mode(self, anchor, rho2):
        return group_shrink(anchor, self.beta * rho2)
