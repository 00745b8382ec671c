"""Scaled ADMM and a matrix-free conjugate gradient solver.

ADMM here is the step-wise MAP counterpart of the split-augmented sampler:
``z`` is the splitting variable, ``u`` the scaled multiplier and ``1/rho2``
the penalty.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = ["CgConfig", "CgResult", "cg_solve", "AdmmConfig", "AdmmResult", "admm_solve", "admm_from_terms"]


@dataclass(frozen=True)
class CgConfig:
    tol: float = 1e-8
    max_iters: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("CG tolerance must be > 0")
        if self.max_iters < 1:
            raise ParameterError("CG max_iters must be >= 1")


@dataclass
class CgResult:
    x: np.ndarray
    iters: int
    converged: bool
    residuals: list = field(default_factory=list)


def cg_solve(apply_A, b, config: CgConfig = CgConfig(), x0=None) -> CgResult:
    """Solve ``A x = b`` for symmetric positive definite ``A`` given as a callback.

    Works on arrays of any shape (the inner product is over all entries).
    Stops when ``||A x - b|| <= tol ||b||``; ``converged`` is False if
    ``max_iters`` is reached first.
    """
    b = np.asarray(b, dtype=float)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CgResult(np.zeros_like(b), 0, True, [0.0])
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x) if x0 is not None else b.copy()
    p = r.copy()
    rs = float(np.vdot(r, r))
    residuals = [np.sqrt(rs) / bnorm]
    if residuals[-1] <= config.tol:
        return CgResult(x, 0, True, residuals)
    for k in range(1, config.max_iters + 1):
        ap = apply_A(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0:
            raise np.linalg.LinAlgError("operator is not positive definite")
        a = rs / pap
        x = x + a * p
        r = r - a * ap
        rs_new = float(np.vdot(r, r))
        residuals.append(np.sqrt(rs_new) / bnorm)
        if residuals[-1] <= config.tol:
            return CgResult(x, k, True, residuals)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CgResult(x, config.max_iters, False, residuals)


@dataclass(frozen=True)
class AdmmConfig:
    rho2: float
    max_iters: int = 500
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6

    def __post_init__(self):
        if not self.rho2 > 0:
            raise ParameterError("rho2 must be > 0")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ParameterError("tolerances must be > 0")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")


@dataclass
class AdmmResult:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    iters: int
    converged: bool
    residuals: list  # (iteration, primal, dual) rows


def _rel(a, scale):
    return float(np.linalg.norm(a)) / max(scale, 1e-300)


def admm_solve(f_min, g_prox, config: AdmmConfig, init, u0=None) -> AdmmResult:
    """Scaled ADMM for ``min f(x) + g(x)``.

    ``f_min(w, rho2)`` returns ``argmin_x f(x) + ||x - w||^2 / (2 rho2)`` and
    ``g_prox(w, rho2)`` the same for ``g``. ``init`` is ``z^(0)``. Stops when
    both relative residuals ``||x - z|| / max(||x||, ||z||)`` and
    ``||z - z_prev|| / ||z||`` fall below their tolerances.
    """
    rho2 = config.rho2
    z = np.array(init, dtype=float)
    u = np.zeros_like(z) if u0 is None else np.array(u0, dtype=float)
    residuals = []
    x = z
    converged = False
    t = 0
    for t in range(1, config.max_iters + 1):
        x = f_min(z - u, rho2)
        z_prev = z
        z = g_prox(x + u, rho2)
        u = u + x - z
        scale = max(float(np.linalg.norm(x)), float(np.linalg.norm(z)))
        primal = _rel(x - z, scale)
        dual = _rel(z - z_prev, float(np.linalg.norm(z)))
        residuals.append((t, primal, dual))
        if primal <= config.tol_primal and dual <= config.tol_dual:
            converged = True
            break
    return AdmmResult(x=x, z=z, u=u, iters=t, converged=converged, residuals=residuals)


def admm_from_terms(f_term, g_term, config: AdmmConfig, init, u0=None) -> AdmmResult:
    """ADMM whose x- and z-steps are the modes of the sampler conditionals."""
    return admm_solve(f_term.mode, g_term.mode, config, init, u0)
