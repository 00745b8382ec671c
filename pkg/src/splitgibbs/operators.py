"""Linear operators on 2-D pixel lattices.

Images are plain 2-D float arrays (row-major); a 1-D signal of length n is an
``(n, 1)`` array. Every operator exposes ``apply`` and ``adjoint`` and carries
its input/output shapes so callers can check compatibility up front.
Operators are immutable once built.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError

__all__ = [
    "as_field",
    "CirculantOperator",
    "MaskOperator",
    "DiagonalOperator",
    "GradientOperator",
    "IdentityOperator",
    "gradient",
    "divergence",
    "laplacian_kernel",
    "gaussian_kernel",
    "apply",
    "adjoint_apply",
    "densify",
]


def as_field(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Return ``values`` as a finite 2-D float array of shape ``(rows, cols)``."""
    arr = np.asarray(values, dtype=float)
    if rows is not None:
        if cols is None:
            cols = arr.size // rows if rows else 0
        if arr.size != rows * cols:
            raise DimensionError(f"{arr.size} values cannot fill a {rows}x{cols} lattice")
        arr = arr.reshape(rows, cols)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D field, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite values")
    return arr


def _check_shape(x: np.ndarray, shape: tuple, what: str) -> None:
    if np.shape(x) != tuple(shape):
        raise DimensionError(f"{what}: expected shape {tuple(shape)}, got {np.shape(x)}")


class CirculantOperator:
    """Periodic convolution, diagonal in the 2-D DFT basis.

    ``psf`` is the zero-shifted kernel on the full lattice (its ``[0, 0]``
    entry multiplies the pixel itself). Use :meth:`from_kernel` to build one
    from a small centred stencil.
    """

    def __init__(self, psf):
        psf = np.asarray(psf, dtype=float)
        if psf.ndim == 1:
            psf = psf.reshape(-1, 1)
        if psf.ndim != 2:
            raise DimensionError("psf must be 2-D")
        self.psf = psf
        self.shape = psf.shape
        self.in_shape = self.out_shape = psf.shape
        self.eigenvalues = np.fft.fft2(psf)
        self.psf.setflags(write=False)
        self.eigenvalues.setflags(write=False)

    @classmethod
    def from_kernel(cls, kernel, shape) -> "CirculantOperator":
        """Embed a centred ``kernel`` in a lattice of ``shape`` and zero-shift it."""
        kernel = np.asarray(kernel, dtype=float)
        if kernel.ndim == 1:
            kernel = kernel.reshape(-1, 1)
        kh, kw = kernel.shape
        rows, cols = shape
        if kh > rows or kw > cols:
            raise DimensionError(f"kernel {kernel.shape} larger than lattice {shape}")
        psf = np.zeros((rows, cols))
        psf[:kh, :kw] = kernel
        psf = np.roll(psf, (-(kh // 2), -(kw // 2)), axis=(0, 1))
        return cls(psf)

    @property
    def abs2(self) -> np.ndarray:
        """``|eigenvalues|**2``, the spectrum of ``K^T K``."""
        return np.abs(self.eigenvalues) ** 2

    def apply(self, x):
        _check_shape(x, self.shape, "circulant apply")
        return np.real(np.fft.ifft2(self.eigenvalues * np.fft.fft2(x)))

    def adjoint(self, y):
        _check_shape(y, self.shape, "circulant adjoint")
        return np.real(np.fft.ifft2(np.conj(self.eigenvalues) * np.fft.fft2(y)))

    def gram(self, x):
        """``K^T K x`` in one pair of transforms."""
        _check_shape(x, self.shape, "circulant gram")
        return np.real(np.fft.ifft2(self.abs2 * np.fft.fft2(x)))


class MaskOperator:
    """Keeps the pixels at ``kept_indices`` (row-major flat indices).

    The output is a 1-D vector of length M; the adjoint scatters it back onto
    the lattice with zeros at the dropped pixels.
    """

    def __init__(self, kept_indices, shape):
        idx = np.unique(np.asarray(kept_indices, dtype=np.int64))
        n = int(np.prod(shape))
        if idx.size != np.size(kept_indices):
            raise ValueError("kept_indices must be distinct")
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise ValueError("kept_indices out of range")
        self.kept_indices = idx
        self.kept_indices.setflags(write=False)
        self.in_shape = tuple(shape)
        self.out_shape = (idx.size,)
        diag = np.zeros(n)
        diag[idx] = 1.0
        self.diag = diag.reshape(shape)
        self.diag.setflags(write=False)

    @classmethod
    def from_boolean(cls, keep) -> "MaskOperator":
        keep = np.asarray(keep, dtype=bool)
        return cls(np.flatnonzero(keep), keep.shape)

    @property
    def m(self) -> int:
        return self.kept_indices.size

    def apply(self, x):
        _check_shape(x, self.in_shape, "mask apply")
        return np.asarray(x, dtype=float).ravel()[self.kept_indices]

    def adjoint(self, y):
        _check_shape(y, self.out_shape, "mask adjoint")
        out = np.zeros(int(np.prod(self.in_shape)))
        out[self.kept_indices] = y
        return out.reshape(self.in_shape)

    def gram(self, x):
        _check_shape(x, self.in_shape, "mask gram")
        return self.diag * x


class DiagonalOperator:
    def __init__(self, diag):
        diag = np.asarray(diag, dtype=float)
        if diag.ndim == 1:
            diag = diag.reshape(-1, 1)
        self.diag = diag
        self.diag.setflags(write=False)
        self.in_shape = self.out_shape = diag.shape

    def apply(self, x):
        _check_shape(x, self.in_shape, "diagonal apply")
        return self.diag * x

    adjoint = apply

    def gram(self, x):
        _check_shape(x, self.in_shape, "diagonal gram")
        return self.diag ** 2 * x


class IdentityOperator:
    def __init__(self, shape):
        self.in_shape = self.out_shape = tuple(shape)

    def apply(self, x):
        _check_shape(x, self.in_shape, "identity apply")
        return np.array(x, dtype=float)

    adjoint = apply
    gram = apply


def gradient(x):
    """Forward differences with replicate (Neumann) boundary.

    Returns an array of shape ``(2, rows, cols)``: ``[0]`` holds horizontal
    differences ``x[i, j+1] - x[i, j]``, ``[1]`` vertical ones. The last
    column (resp. row) difference is zero.
    """
    x = np.asarray(x, dtype=float)
    g = np.zeros((2,) + x.shape)
    g[0, :, :-1] = x[:, 1:] - x[:, :-1]
    g[1, :-1, :] = x[1:, :] - x[:-1, :]
    return g


def divergence(p):
    """Discrete divergence, the negative adjoint of :func:`gradient`."""
    p = np.asarray(p, dtype=float)
    px, py = p[0], p[1]
    d = np.zeros(px.shape)
    if px.shape[1] > 1:
        d[:, 0] += px[:, 0]
        d[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
        d[:, -1] -= px[:, -2]
    if py.shape[0] > 1:
        d[0, :] += py[0, :]
        d[1:-1, :] += py[1:-1, :] - py[:-2, :]
        d[-1, :] -= py[-2, :]
    return d


class GradientOperator:
    """The Neumann forward-difference gradient as an operator object."""

    boundary = "neumann"

    def __init__(self, shape):
        self.in_shape = tuple(shape)
        self.out_shape = (2,) + tuple(shape)

    def apply(self, x):
        _check_shape(x, self.in_shape, "gradient apply")
        return gradient(x)

    def adjoint(self, p):
        _check_shape(p, self.out_shape, "gradient adjoint")
        return -divergence(p)

    def gram(self, x):
        return -divergence(gradient(x))


def apply(op, x):
    return op.apply(x)


def adjoint_apply(op, y):
    return op.adjoint(y)


def densify(op) -> np.ndarray:
    """Dense matrix of ``op`` built column by column (small lattices only)."""
    n = int(np.prod(op.in_shape))
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        cols.append(np.ravel(op.apply(e.reshape(op.in_shape))))
    return np.stack(cols, axis=1)


def laplacian_kernel() -> np.ndarray:
    """5-point Laplacian stencil."""
    return np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def gaussian_kernel(size: int = 9, width: float = 1.5) -> np.ndarray:
    """Normalised isotropic Gaussian blur stencil of odd ``size``."""
    if size % 2 == 0:
        raise ValueError("size must be odd")
    r = np.arange(size) - size // 2
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * width**2))
    return g / g.sum()
