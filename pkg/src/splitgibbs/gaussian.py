"""Exact samplers for the Gaussian conditionals met in split Gibbs sweeps.

All precisions are given in information form: the target is
``N(Q^{-1} b, Q^{-1})``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DimensionError, ParameterError, StructureError
from .operators import CirculantOperator, MaskOperator

__all__ = [
    "GaussianSpec",
    "NoisePrecision",
    "sample_fourier_diagonal",
    "solve_fourier_diagonal",
    "sample_aux_dissociated",
    "default_mu1",
    "sample_sherman_morrison",
    "sherman_morrison_moments",
    "sample_dense_oracle",
]

# imaginary residue allowed after the inverse transform, relative to the field scale
_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class NoisePrecision:
    """Diagonal of the noise precision matrix (one entry per observation)."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ParameterError("noise precision entries must be finite and > 0")
        object.__setattr__(self, "diag", d)

    @classmethod
    def from_std(cls, sigma) -> "NoisePrecision":
        return cls(1.0 / np.asarray(sigma, dtype=float) ** 2)

    @property
    def spectral_norm(self) -> float:
        return float(np.max(self.diag))


@dataclass
class GaussianSpec:
    """Precision ``sum_i c_i K_i^T K_i + D + tau I`` and right-hand side ``b``.

    ``circulant_terms`` is a list of ``(c_i, K_i)`` pairs. ``diag`` is an
    optional per-pixel diagonal term. Positive definiteness is checked on
    construction for the co-diagonalisable part (and the diagonal part when
    it stands alone).
    """

    mean_rhs: np.ndarray
    circulant_terms: list = field(default_factory=list)
    tau: float = 0.0
    diag: np.ndarray | None = None

    def __post_init__(self):
        self.mean_rhs = np.asarray(self.mean_rhs, dtype=float)
        shape = self.mean_rhs.shape
        for c, k in self.circulant_terms:
            if c < 0:
                raise ParameterError("circulant term weights must be >= 0")
            if not isinstance(k, CirculantOperator):
                raise StructureError("circulant_terms must hold CirculantOperator instances")
            if k.shape != shape:
                raise DimensionError(f"operator lattice {k.shape} != field {shape}")
        if self.diag is not None:
            self.diag = np.asarray(self.diag, dtype=float)
            if self.diag.shape != shape:
                raise DimensionError("diagonal term shape mismatch")
            if np.any(self.diag < 0):
                raise ParameterError("diagonal term must be >= 0")
        # lambda_min(A + B) >= lambda_min(A) + lambda_min(B)
        lam_min = float(np.min(self.fourier_precision()))
        if self.diag is not None:
            lam_min += float(np.min(self.diag))
        if not lam_min > 0:
            raise ParameterError(f"precision is not positive definite (smallest eigenvalue {lam_min:g})")

    @property
    def shape(self):
        return self.mean_rhs.shape

    def fourier_precision(self) -> np.ndarray:
        """Eigenvalues of the circulant-plus-identity part on the DFT grid."""
        lam = np.full(self.shape, float(self.tau))
        for c, k in self.circulant_terms:
            lam = lam + c * k.abs2
        return lam

    def dense(self) -> np.ndarray:
        """Dense precision matrix (test lattices only)."""
        from .operators import densify

        n = self.mean_rhs.size
        q = self.tau * np.eye(n)
        for c, k in self.circulant_terms:
            kd = densify(k)
            q += c * kd.T @ kd
        if self.diag is not None:
            q += np.diag(self.diag.ravel())
        return q


def _fourier_check(spec: GaussianSpec) -> np.ndarray:
    if spec.diag is not None and np.ptp(spec.diag) > 0:
        raise StructureError("a non-constant diagonal term is not diagonal in the Fourier basis")
    lam = spec.fourier_precision()
    if spec.diag is not None:
        lam = lam + float(spec.diag.flat[0])
    return lam


def _real(z: np.ndarray) -> np.ndarray:
    re = np.real(z)
    scale = max(1.0, float(np.max(np.abs(re))))
    if np.max(np.abs(np.imag(z))) > _IMAG_TOL * scale:
        raise StructureError("inverse transform left a non-negligible imaginary part")
    return re


def solve_fourier_diagonal(spec: GaussianSpec) -> np.ndarray:
    """``Q^{-1} b`` for a Fourier-diagonal precision."""
    lam = _fourier_check(spec)
    return _real(np.fft.ifft2(np.fft.fft2(spec.mean_rhs) / lam))


def sample_fourier_diagonal(spec: GaussianSpec, rng: np.random.Generator) -> np.ndarray:
    """One exact draw from ``N(Q^{-1} b, Q^{-1})`` with ``Q`` circulant.

    A white pixel-domain field is mapped to the Fourier domain, scaled by
    ``Lambda^{-1/2}`` and mapped back, so the result has covariance
    ``F^H Lambda^{-1} F = Q^{-1}`` and stays real.
    """
    lam = _fourier_check(spec)
    xi = rng.standard_normal(spec.shape)
    spectrum = np.fft.fft2(spec.mean_rhs) / lam + np.fft.fft2(xi) / np.sqrt(lam)
    return _real(np.fft.ifft2(spectrum))


def default_mu1(omega: NoisePrecision) -> float:
    return 0.9 / omega.spectral_norm


def sample_aux_dissociated(
    H: CirculantOperator,
    omega: NoisePrecision,
    rho2: float,
    mean_terms: np.ndarray,
    state_v: np.ndarray,
    mu1: float,
    rng: np.random.Generator,
):
    """One Gibbs pass of the auxiliary-variable sampler for ``H^T Omega H + I/rho2``.

    The target conditional has precision ``G_x = H^T Omega H + I/rho2`` and
    right-hand side ``mean_terms`` (typically ``H^T Omega y + (z - u)/rho2``).
    Adding ``v | x ~ N((I/mu1 - Omega) H x, I/mu1 - Omega)`` makes ``x | v``
    Gaussian with the circulant precision ``H^T H / mu1 + I/rho2`` and
    right-hand side ``mean_terms + H^T v``. The pass draws ``x | v`` first
    (from the persisted ``state_v``), then refreshes ``v | x``; the
    ``x``-marginal of the augmented chain is the target conditional.

    Returns ``(x, v)``.
    """
    if not mu1 > 0 or not mu1 * omega.spectral_norm < 1.0:
        raise ParameterError(
            f"mu1 * max(Omega) must be < 1 (got {mu1 * omega.spectral_norm:g})"
        )
    if rho2 <= 0:
        raise ParameterError("rho2 must be > 0")
    omega_d = omega.diag.reshape(H.shape)
    state_v = np.asarray(state_v, dtype=float)
    if state_v.shape != H.shape:
        raise DimensionError("state_v shape mismatch")
    spec = GaussianSpec(
        mean_rhs=np.asarray(mean_terms) + H.adjoint(state_v),
        circulant_terms=[(1.0 / mu1, H)],
        tau=1.0 / rho2,
    )
    x = sample_fourier_diagonal(spec, rng)
    cov_v = 1.0 / mu1 - omega_d
    v = cov_v * H.apply(x) + np.sqrt(cov_v) * rng.standard_normal(H.shape)
    return x, v


def sherman_morrison_moments(mask: MaskOperator, sigma2: float, rho2: float, y, anchor):
    """Mean and (diagonal) variance of ``N`` with precision ``H^T H/sigma2 + I/rho2``."""
    var = rho2 * (1.0 - rho2 / (sigma2 + rho2) * mask.diag)
    mean = var * (mask.adjoint(np.asarray(y, dtype=float)) / sigma2 + np.asarray(anchor) / rho2)
    return mean, var


def sample_sherman_morrison(mask, sigma2, rho2, y, anchor, rng):
    """Exact draw for the masked-likelihood conditional; the covariance is diagonal."""
    if sigma2 <= 0 or rho2 <= 0:
        raise ParameterError("sigma2 and rho2 must be > 0")
    mean, var = sherman_morrison_moments(mask, sigma2, rho2, y, anchor)
    return mean + np.sqrt(var) * rng.standard_normal(mean.shape)


def sample_dense_oracle(Q, b, rng, size=None):
    """Draw(s) from ``N(Q^{-1} b, Q^{-1})`` through a Cholesky factor of ``Q``.

    Raises ``numpy.linalg.LinAlgError`` when ``Q`` is not positive definite.
    With ``size`` given, returns an array of shape ``(size, n)``.
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    n = b.size
    if Q.shape != (n, n):
        raise DimensionError("Q and b sizes disagree")
    if n > 4096:
        raise DimensionError("dense oracle limited to n <= 4096")
    L = np.linalg.cholesky(Q)
    mean = linalg.cho_solve((L, True), b)
    k = 1 if size is None else size
    xi = rng.standard_normal((n, k))
    draws = mean[:, None] + linalg.solve_triangular(L.T, xi, lower=False)
    return draws[:, 0] if size is None else draws.T
