"""Split (SP) and split-augmented (SPA) Gibbs samplers.

Both couple the variable of interest ``x`` and the splitting variable ``z``
through ``||x - (z - u)||^2 / (2 rho2)``; SPA adds ``u`` with the penalty
``||u||^2 / (2 alpha2)``. With ``alpha2 = 0`` ``u`` stays frozen at zero and
the sweep is SP.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, ParameterError
from .operators import CirculantOperator, IdentityOperator
from .admm import CgConfig, cg_solve

__all__ = [
    "SplitModel",
    "ChainState",
    "RunningMoments",
    "ChainRecord",
    "sp_sweep",
    "spa_sweep",
    "draw_u",
    "Block",
    "MultiBlockModel",
    "MultiBlockState",
    "multiblock_sweep",
    "run_chain",
    "MyulaModel",
]


@dataclass(frozen=True)
class ChainState:
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    sweep_index: int = 0
    aux: dict = field(default_factory=dict)  # per-term auxiliary state, keyed "f" / "g"


@dataclass
class SplitModel:
    f_term: object
    g_term: object
    rho2: float
    alpha2: float = 0.0

    def __post_init__(self):
        if not self.rho2 > 0:
            raise ParameterError("rho2 must be > 0")
        if self.alpha2 < 0:
            raise ParameterError("alpha2 must be >= 0")
        for term in (self.f_term, self.g_term):
            term.validate()
        if tuple(self.f_term.shape) != tuple(self.g_term.shape):
            raise DimensionError("f and g terms live on different lattices")

    @property
    def augmented(self) -> bool:
        return self.alpha2 > 0

    def initial_state(self, z0, x0=None, u0=None) -> ChainState:
        z0 = np.array(z0, dtype=float)
        x0 = z0.copy() if x0 is None else np.array(x0, dtype=float)
        u0 = np.zeros_like(z0) if u0 is None or not self.augmented else np.array(u0, dtype=float)
        if not (x0.shape == z0.shape == u0.shape == tuple(self.f_term.shape)):
            raise DimensionError("initial state shapes do not match the model")
        aux = {"f": self.f_term.init_aux(x0), "g": self.g_term.init_aux(z0)}
        return ChainState(x0, z0, u0, 0, aux)

    def potential(self, x) -> float:
        """``-log pi(x | y)`` up to a constant: ``f(x) + g(x)``."""
        return self.f_term.value(x) + self.g_term.value(x)

    def sweep(self, state: ChainState, rng) -> ChainState:
        return spa_sweep(self, state, rng) if self.augmented else sp_sweep(self, state, rng)


def _fresh_aux(state: ChainState) -> dict:
    return {k: dict(v) for k, v in state.aux.items()}


def draw_u(x, z, rho2, alpha2, rng):
    """``u | x, z ~ N(alpha2 (z - x) / (rho2 + alpha2), alpha2 rho2 / (alpha2 + rho2) I)``."""
    s = rho2 + alpha2
    return alpha2 / s * (z - x) + np.sqrt(alpha2 * rho2 / s) * rng.standard_normal(np.shape(x))


def sp_sweep(model: SplitModel, state: ChainState, rng) -> ChainState:
    """x ~ p(x | z), then z ~ p(z | x)."""
    if model.augmented:
        raise ConfigurationError("sp_sweep requires alpha2 == 0")
    aux = _fresh_aux(state)
    x = model.f_term.draw(state.x, state.z, model.rho2, rng, aux.setdefault("f", {}))
    z = model.g_term.draw(state.z, x, model.rho2, rng, aux.setdefault("g", {}))
    return ChainState(x, z, state.u, state.sweep_index + 1, aux)


def spa_sweep(model: SplitModel, state: ChainState, rng) -> ChainState:
    """x ~ p(x | z, u), z ~ p(z | x, u), u ~ p(u | x, z), in that order."""
    if not model.augmented:
        raise ConfigurationError("spa_sweep requires alpha2 > 0")
    aux = _fresh_aux(state)
    x = model.f_term.draw(state.x, state.z - state.u, model.rho2, rng, aux.setdefault("f", {}))
    z = model.g_term.draw(state.z, x + state.u, model.rho2, rng, aux.setdefault("g", {}))
    u = draw_u(x, z, model.rho2, model.alpha2, rng)
    return ChainState(x, z, u, state.sweep_index + 1, aux)


# --- several potentials h_i(K_i x) -------------------------------------------


@dataclass
class Block:
    term: object
    op: object


@dataclass(frozen=True)
class MultiBlockState:
    x: np.ndarray
    zs: tuple
    us: tuple
    sweep_index: int = 0
    aux: tuple = ()


@dataclass
class MultiBlockModel:
    """``pi(x) ~ exp(-sum_i h_i(K_i x))`` split as ``z_i ~ K_i x``.

    The ``x`` conditional is Gaussian with precision ``sum_i K_i^T K_i / rho2``.
    It is drawn by perturbation-optimization: each ``z_i - u_i`` is perturbed
    with ``N(0, rho2 I)`` noise and the normal equations are solved, in the
    Fourier domain when every ``K_i`` is circulant (or identity), by CG
    otherwise.
    """

    blocks: list
    rho2: float
    alpha2: float = 0.0
    cg: CgConfig = field(default_factory=lambda: CgConfig(tol=1e-12, max_iters=5000))

    def __post_init__(self):
        if not self.blocks:
            raise ConfigurationError("at least one block is required")
        if not self.rho2 > 0 or self.alpha2 < 0:
            raise ParameterError("rho2 must be > 0 and alpha2 >= 0")
        self.shape = tuple(self.blocks[0].op.in_shape)
        for b in self.blocks:
            b.term.validate()
            if tuple(b.op.in_shape) != self.shape:
                raise DimensionError("all operators must act on the same x lattice")
            if tuple(b.term.shape) != tuple(b.op.out_shape):
                raise DimensionError("block term shape must match its operator output")
        self._spectrum = None
        if all(isinstance(b.op, (CirculantOperator, IdentityOperator)) for b in self.blocks):
            spec = np.zeros(self.shape)
            for b in self.blocks:
                spec = spec + (b.op.abs2 if isinstance(b.op, CirculantOperator) else 1.0)
            if not np.min(spec) > 1e-12 * np.max(spec):
                raise ConfigurationError("x-conditional precision is singular")
            self._spectrum = spec / self.rho2
        else:
            self._probe_null()

    def _probe_null(self):
        # difference operators (gradient, Laplacian) annihilate constants; a
        # precision built only from them is singular and CG would not notice
        ones = np.ones(self.shape)
        delta = np.zeros(self.shape)
        delta.flat[0] = 1.0
        scale = float(np.linalg.norm(self.precision_apply(delta)))
        if float(np.linalg.norm(self.precision_apply(ones))) <= 1e-10 * scale * np.sqrt(ones.size):
            raise ConfigurationError("x-conditional precision is singular (constants in its null space)")

    @property
    def augmented(self):
        return self.alpha2 > 0

    def precision_apply(self, x):
        return sum(b.op.gram(x) for b in self.blocks) / self.rho2

    def solve_x(self, rhs):
        if self._spectrum is not None:
            return np.real(np.fft.ifft2(np.fft.fft2(rhs) / self._spectrum))
        try:
            res = cg_solve(self.precision_apply, rhs, self.cg)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError("x-conditional precision is not positive definite") from exc
        if not res.converged:
            raise ConfigurationError("x-conditional precision looks singular (CG did not converge)")
        return res.x

    def initial_state(self, x0) -> MultiBlockState:
        x0 = np.array(x0, dtype=float)
        zs = tuple(b.op.apply(x0) for b in self.blocks)
        us = tuple(np.zeros_like(z) for z in zs)
        aux = tuple(b.term.init_aux(z) for b, z in zip(self.blocks, zs))
        return MultiBlockState(x0, zs, us, 0, aux)

    def potential(self, x) -> float:
        return sum(b.term.value(b.op.apply(x)) for b in self.blocks)

    def sweep(self, state, rng):
        return multiblock_sweep(self, state, rng)


def multiblock_sweep(model: MultiBlockModel, state: MultiBlockState, rng) -> MultiBlockState:
    """x | {z_i, u_i}, then each z_i | x, u_i, then each u_i | x, z_i."""
    rho = np.sqrt(model.rho2)
    rhs = 0.0
    for b, z, u in zip(model.blocks, state.zs, state.us):
        w = z - u + rho * rng.standard_normal(np.shape(z))
        rhs = rhs + b.op.adjoint(w)
    x = model.solve_x(rhs / model.rho2)
    aux = tuple(dict(a) for a in state.aux)
    kx = [b.op.apply(x) for b in model.blocks]
    zs = tuple(
        b.term.draw(z, k + u, model.rho2, rng, a)
        for b, z, u, k, a in zip(model.blocks, state.zs, state.us, kx, aux)
    )
    if model.augmented:
        us = tuple(draw_u(k, z, model.rho2, model.alpha2, rng) for k, z in zip(kx, zs))
    else:
        us = state.us
    return MultiBlockState(x, zs, us, state.sweep_index + 1, aux)


# --- chain driver --------------------------------------------------------------


class RunningMoments:
    """Welford accumulator for per-pixel mean and variance."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def update(self, x):
        x = np.asarray(x, dtype=float)
        if self.mean is None:
            self.mean = np.zeros_like(x)
            self.m2 = np.zeros_like(x)
        self.n += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.n
        self.m2 = self.m2 + delta * (x - self.mean)

    @property
    def variance(self):
        if self.n < 2:
            return None
        return self.m2 / (self.n - 1)

    @property
    def second_moment(self):
        if self.n == 0:
            return None
        return self.m2 / self.n + self.mean**2


@dataclass
class ChainRecord:
    scalar_trace: np.ndarray
    x_moments: RunningMoments
    z_moments: RunningMoments
    u_moments: RunningMoments
    kept_samples: np.ndarray | None
    t_mc: int
    t_bi: int
    final_state: object = None

    @property
    def n_kept(self) -> int:
        return self.x_moments.n

    @property
    def post_burn_trace(self) -> np.ndarray:
        return self.scalar_trace[self.t_bi:]


def run_chain(model, t_mc: int, t_bi: int, init, rng, keep_samples: bool = False, thin: int = 1,
              callback=None) -> ChainRecord:
    """Run ``t_mc`` sweeps, discarding the first ``t_bi`` from the estimates.

    The scalar trace (``model.potential(x)``) is recorded at every sweep;
    moments and (optionally, every ``thin``-th) samples only after burn-in.
    """
    if t_mc < 1 or not 0 <= t_bi < t_mc:
        raise ParameterError("need t_mc >= 1 and 0 <= t_bi < t_mc")
    if thin < 1:
        raise ParameterError("thin must be >= 1")
    state = init
    trace = np.empty(t_mc)
    mx, mz, mu = RunningMoments(), RunningMoments(), RunningMoments()
    samples = []
    split = isinstance(state, ChainState)
    for t in range(t_mc):
        state = model.sweep(state, rng)
        trace[t] = model.potential(state.x)
        if t >= t_bi:
            mx.update(state.x)
            if split:
                mz.update(state.z)
                mu.update(state.u)
            if keep_samples and (t - t_bi) % thin == 0:
                samples.append(state.x)
        if callback is not None:
            callback(t, state)
    kept = np.stack(samples) if samples else None
    return ChainRecord(trace, mx, mz, mu, kept, t_mc, t_bi, state)



@dataclass
class MyulaModel:
    """Proximal MYULA run directly on ``exp(-f(x) - g(x))`` (no splitting).

    ``smooth`` must expose ``gradient`` and ``nonsmooth`` a ``prox(z, lam,
    iters, aux)``. The chain state reuses :class:`ChainState` with ``z = x``
    and ``u = 0``.
    """

    smooth: object
    nonsmooth: object
    params: object  # MyulaParams

    def initial_state(self, x0) -> ChainState:
        x0 = np.array(x0, dtype=float)
        return ChainState(x0, x0, np.zeros_like(x0), 0, {"g": {}})

    def potential(self, x) -> float:
        return self.smooth.value(x) + self.nonsmooth.value(x)

    def sweep(self, state: ChainState, rng) -> ChainState:
        from .proximal import myula_step

        aux = _fresh_aux(state)
        g_aux = aux.setdefault("g", {})
        x = myula_step(
            state.x,
            self.smooth.gradient,
            lambda z, lam: self.nonsmooth.prox(z, lam, self.params.prox_iters, g_aux),
            self.params,
            rng,
        )
        return ChainState(x, x, state.u, state.sweep_index + 1, aux)
