"""Total-variation proximal map and the proximal MYULA Langevin kernel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .operators import divergence, gradient

__all__ = [
    "ProxSpec",
    "MyulaParams",
    "tv_value",
    "tv_prox",
    "tv_prox_objective",
    "myula_step",
    "CHAMBOLLE_TAU",
    "DEFAULT_PROX_ITERS",
]

CHAMBOLLE_TAU = 0.125
DEFAULT_PROX_ITERS = 25


@dataclass(frozen=True)
class ProxSpec:
    """``weight`` multiplies the function, ``step`` is the Moreau parameter."""

    weight: float
    step: float

    def __post_init__(self):
        if self.weight < 0:
            raise ParameterError("prox weight must be >= 0")
        if not self.step > 0:
            raise ParameterError("prox step must be > 0")

    @property
    def theta(self) -> float:
        return self.weight * self.step


@dataclass(frozen=True)
class MyulaParams:
    lam: float
    gamma: float
    prox_iters: int = DEFAULT_PROX_ITERS

    def __post_init__(self):
        if not (self.lam > 0 and self.gamma > 0):
            raise ParameterError("lam and gamma must be > 0")
        if self.gamma > self.lam:
            raise ParameterError(f"gamma ({self.gamma:g}) must not exceed lam ({self.lam:g})")
        if self.prox_iters < 1:
            raise ParameterError("prox_iters must be >= 1")

    @classmethod
    def for_split(cls, rho2: float, prox_iters: int = DEFAULT_PROX_ITERS) -> "MyulaParams":
        """Setting used for the splitting-variable step: lam = rho2, gamma = rho2 / 4."""
        return cls(lam=rho2, gamma=rho2 / 4.0, prox_iters=prox_iters)


def tv_value(x) -> float:
    """Isotropic total variation with the Neumann forward-difference gradient."""
    g = gradient(x)
    return float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))


def tv_prox_objective(u, x, theta: float) -> float:
    """``0.5 ||u - x||^2 + theta * TV(u)``."""
    return 0.5 * float(np.sum((np.asarray(u) - x) ** 2)) + theta * tv_value(u)


def tv_prox(x, spec: ProxSpec, iters: int = DEFAULT_PROX_ITERS, dual_init=None, return_dual=False):
    """Chambolle's dual projection algorithm for the TV proximal map.

    Approximates ``argmin_u 0.5 ||u - x||^2 + theta TV(u)`` with
    ``theta = spec.weight * spec.step`` using the fixed-point iteration

        p <- (p + tau g) / (1 + tau |g|),   g = grad(div p - x / theta)

    with ``tau = 1/8``, and returns ``x - theta div p``. ``dual_init`` warm
    starts ``p`` (shape ``(2, rows, cols)``).
    """
    if iters < 1:
        raise ParameterError("iters must be >= 1")
    x = np.asarray(x, dtype=float)
    theta = spec.theta
    if theta == 0.0:
        out = x.copy()
        return (out, np.zeros((2,) + x.shape)) if return_dual else out
    p = np.zeros((2,) + x.shape) if dual_init is None else np.array(dual_init, dtype=float)
    xs = x / theta
    tau = CHAMBOLLE_TAU
    for _ in range(iters):
        g = gradient(divergence(p) - xs)
        norm = np.sqrt(g[0] ** 2 + g[1] ** 2)
        p = (p + tau * g) / (1.0 + tau * norm)
    u = x - theta * divergence(p)
    return (u, p) if return_dual else u


def myula_step(z, grad_smooth, prox, params: MyulaParams, rng: np.random.Generator):
    """One proximal MYULA transition (no accept/reject).

    ``z' = (1 - gamma/lam) z + (gamma/lam) prox(z) - gamma grad_smooth(z)
    + sqrt(2 gamma) xi``. ``prox(z, lam)`` must return the proximal point of
    the non-smooth potential with parameter ``lam``; ``grad_smooth(z)`` the
    gradient of the smooth one.
    """
    z = np.asarray(z, dtype=float)
    lam, gamma = params.lam, params.gamma
    r = gamma / lam
    drift = (1.0 - r) * z + r * prox(z, lam)
    if grad_smooth is not None:
        drift = drift - gamma * grad_smooth(z)
    return drift + np.sqrt(2.0 * gamma) * rng.standard_normal(z.shape)
