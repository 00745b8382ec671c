"""Restoration quality and chain diagnostics."""
from __future__ import annotations

import numpy as np

from ..errors import DimensionError

__all__ = ["snr", "psnr", "isnr", "acf", "credibility", "fill_missing", "PEAK"]

PEAK = 255.0


def _db(num: float, den: float) -> float:
    if den == 0.0:
        return float("inf") if num > 0 else 0.0
    if num == 0.0:
        return float("-inf")
    return 10.0 * np.log10(num / den)


def _pair(x, x_hat):
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    return x, x_hat


def snr(x, x_hat) -> float:
    """``10 log10 ||x||^2 / ||x - x_hat||^2``; ``inf`` for a perfect estimate."""
    x, x_hat = _pair(x, x_hat)
    return _db(float(np.sum(x**2)), float(np.sum((x - x_hat) ** 2)))


def psnr(x, x_hat, peak: float = PEAK) -> float:
    x, x_hat = _pair(x, x_hat)
    return _db(peak**2, float(np.mean((x - x_hat) ** 2)))


def fill_missing(y, mask, fill: float | None = None) -> np.ndarray:
    """Lift masked observations onto the lattice; missing pixels get ``fill``
    (default: mean of the observed values)."""
    y = np.asarray(y, dtype=float)
    fill = float(np.mean(y)) if fill is None else fill
    out = np.full(mask.in_shape, fill)
    out.ravel()[mask.kept_indices] = y
    return out


def isnr(x, y_filled, x_hat) -> float:
    """``10 log10 ||x - y||^2 / ||x - x_hat||^2`` with ``y`` already on the lattice."""
    x, x_hat = _pair(x, x_hat)
    x, y_filled = _pair(x, y_filled)
    return _db(float(np.sum((x - y_filled) ** 2)), float(np.sum((x - x_hat) ** 2)))


def acf(trace, max_lag: int) -> np.ndarray:
    """Sample autocorrelation of a scalar trace at lags ``0..max_lag`` (lag 0 = 1)."""
    t = np.asarray(trace, dtype=float)
    n = t.size
    if n < 2:
        raise ValueError("need at least two samples")
    max_lag = min(int(max_lag), n - 1)
    c = t - t.mean()
    var = float(np.dot(c, c))
    if var == 0.0:
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    # zero-padded FFT gives every lag in one pass
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(c, m)
    full = np.fft.irfft(f * np.conj(f), m)[: max_lag + 1]
    out = full / var
    out[0] = 1.0
    return out


def credibility(samples, level: float = 0.9):
    """Pixel-wise equal-tailed interval from samples stacked on axis 0."""
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    s = np.asarray(samples, dtype=float)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(s, [a, 1.0 - a], axis=0)
    return lo, hi
