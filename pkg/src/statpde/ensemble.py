"""Monte Carlo engine: parameter laws, per-realization solvers, ensembles.

Realizations of u_t + s(x) u_x = 0 use first-order upwind (optionally
minmod-reconstructed); realizations of u_t + a(u)_x = 0 with strictly convex
a use the exact-Riemann Godunov flux, which is entropy-consistent and
captures both shocks and rarefactions.

Reproducibility rule: all scenario parameters for an ensemble are drawn in a
single vectorized call from one PCG64 generator seeded with the ensemble
seed, in sample-index order. Per-sample solves are deterministic, so any
execution order (serial, blocked, parallel) yields bit-identical ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .advect import advect_along, check_cfl, conservation_step, n_steps as _n_steps
from .fields import SpatialField, field_to_text
from .grids import Axis

__all__ = [
    "Uniform01",
    "BernoulliHalf",
    "GaussianLaw",
    "PointMass",
    "LinearSpeed",
    "ConvexFlux",
    "burgers_flux",
    "Ensemble",
    "sample_ensemble",
    "solve_realization_linear",
    "solve_realization_conservation",
    "evolve_ensemble",
    "quantile_initial_data",
    "shock_formation_time",
    "ensemble_to_text",
]


# ---------------------------------------------------------------------------
# parameter laws


@dataclass(frozen=True)
class Uniform01:
    """Scalar parameter uniform on [0, 1]."""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.random(n)

    def describe(self) -> str:
        return "uniform01"


@dataclass(frozen=True)
class BernoulliHalf:
    """Two-atom parameter, 0 or 1 with probability 1/2 each."""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.integers(0, 2, n).astype(float)

    def describe(self) -> str:
        return "bernoulli-half"


@dataclass(frozen=True)
class GaussianLaw:
    """Multivariate normal parameter with given mean and covariance."""

    mean: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.multivariate_normal(np.asarray(self.mean), np.asarray(self.cov), size=n)

    def describe(self) -> str:
        return f"gaussian(mean={list(self.mean)}, cov={[list(r) for r in self.cov]})"


@dataclass(frozen=True)
class PointMass:
    """Degenerate law concentrated at a single parameter value."""

    value: float

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value)

    def describe(self) -> str:
        return f"point({self.value})"


ParamLaw = Uniform01 | BernoulliHalf | GaussianLaw | PointMass


# ---------------------------------------------------------------------------
# flux specifications


@dataclass(frozen=True)
class LinearSpeed:
    """Signed transport speed for u_t + s(x) u_x = 0."""

    s: Callable[[np.ndarray], np.ndarray]

    def interface_speeds(self, axis: Axis) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.s(axis.edges), dtype=float), (axis.n + 1,)).copy()

    def max_speed(self, axis: Axis) -> float:
        return float(np.max(np.abs(self.interface_speeds(axis))))


@dataclass(frozen=True)
class ConvexFlux:
    """Strictly convex flux a(u) with derivative a' and second derivative a''.

    ``sonic`` is the minimizer of a (where a' vanishes); it determines the
    Godunov flux in transonic rarefactions.
    """

    a: Callable[[np.ndarray], np.ndarray]
    aprime: Callable[[np.ndarray], np.ndarray]
    a2prime: Callable[[np.ndarray], np.ndarray]
    sonic: float

    def validate_convex(self, u_lo: float, u_hi: float, samples: int = 257) -> None:
        u = np.linspace(u_lo, u_hi, samples)
        if np.min(self.a2prime(u)) <= 0:
            raise ValueError("flux is not strictly convex on the scenario state range")

    def max_speed(self, values: np.ndarray) -> float:
        return float(np.max(np.abs(self.aprime(values))))


def burgers_flux() -> ConvexFlux:
    return ConvexFlux(a=lambda u: 0.5 * u * u, aprime=lambda u: u,
                      a2prime=lambda u: np.ones_like(np.asarray(u, dtype=float)), sonic=0.0)


FluxSpec = LinearSpeed | ConvexFlux


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class Ensemble:
    """N realizations on a shared axis, with their parameters and seed.

    ``values[i]`` is realization i at the current time; ``samples[i]`` the
    parameter vector that generated it.
    """

    axis: Axis
    samples: np.ndarray           # (N,) or (N, d)
    values: np.ndarray            # (N, nx)
    seed: int
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.values.shape != (self.n, self.axis.n):
            raise ValueError("ensemble values shape mismatch")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def field(self, i: int) -> SpatialField:
        return SpatialField(self.axis, self.values[i], self.time)

    @property
    def fields(self) -> tuple[SpatialField, ...]:
        return tuple(self.field(i) for i in range(self.n))


def sample_ensemble(scenario, n: int, seed: int) -> Ensemble:
    """Draw n i.i.d. parameters from the scenario law and build t=0 fields."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    omega = scenario.param_law.sample(rng, n)
    values = np.asarray(scenario.initial_data(omega, scenario.x_axis.centers), dtype=float)
    return Ensemble(scenario.x_axis, omega, values, seed, time=0.0)


def solve_realization_linear(u0: SpatialField, speed: Callable[[np.ndarray], np.ndarray],
                             t_final: float, dt: float, bc: str = "outflow",
                             theta: float | None = None) -> SpatialField:
    """Advance one realization of u_t + s(x) u_x = 0 to t_final."""
    out = _evolve_linear_block(u0.values[None, :], u0.axis, speed, t_final, dt, bc, theta)
    return SpatialField(u0.axis, out[0], u0.time + t_final)


def _evolve_linear_block(values: np.ndarray, axis: Axis, speed, t_final: float, dt: float,
                         bc: str, theta: float | None) -> np.ndarray:
    sl = LinearSpeed(speed) if not isinstance(speed, LinearSpeed) else speed
    s_if = sl.interface_speeds(axis)
    check_cfl(dt, axis.spacing, float(np.max(np.abs(s_if))))
    steps = _n_steps(t_final, dt)
    if theta is not None:
        u = values.T.copy()  # (nx, N)
        for _ in range(steps):
            u = advect_along(u, 0, s_if, dt, axis.spacing, bc, theta)
        return u.T

    # first-order fluctuation update with preallocated buffers; per-sample
    # arithmetic is elementwise, so sample blocking cannot change results
    nx, n = axis.n, values.shape[0]
    lam = dt / axis.spacing
    sp = (lam * np.maximum(s_if, 0.0))[:, None]
    sm = (lam * np.minimum(s_if, 0.0))[:, None]
    any_pos = bool(np.any(sp > 0))
    any_neg = bool(np.any(sm < 0))
    u = values.T.copy()
    buf = np.empty((nx + 2, n))
    jump = np.empty((nx + 1, n))
    term = np.empty((nx, n))
    scratch = np.empty((nx, n))
    for _ in range(steps):
        buf[1:-1] = u
        if bc == "periodic":
            buf[0] = u[-1]
            buf[-1] = u[0]
        else:
            buf[0] = u[0]
            buf[-1] = u[-1]
        np.subtract(buf[1:], buf[:-1], out=jump)
        if any_pos:
            np.multiply(sp[:-1], jump[:-1], out=term)
        else:
            term[:] = 0.0
        if any_neg:
            np.multiply(sm[1:], jump[1:], out=scratch)
            term += scratch
        u -= term
    return u.T


def solve_realization_conservation(u0: SpatialField, flux: ConvexFlux, t_final: float,
                                   dt: float, bc: str = "outflow") -> SpatialField:
    """Advance one realization of u_t + a(u)_x = 0 with the Godunov scheme."""
    out = _evolve_conservation_block(u0.values[None, :], u0.axis, flux, t_final, dt, bc)
    return SpatialField(u0.axis, out[0], u0.time + t_final)


def _evolve_conservation_block(values: np.ndarray, axis: Axis, flux: ConvexFlux,
                               t_final: float, dt: float, bc: str) -> np.ndarray:
    check_cfl(dt, axis.spacing, flux.max_speed(values))
    nx, n = axis.n, values.shape[0]
    lam = dt / axis.spacing
    sonic = flux.sonic
    u = values.T.copy()
    buf = np.empty((nx + 2, n))
    left = np.empty((nx + 1, n))
    right = np.empty((nx + 1, n))
    for _ in range(_n_steps(t_final, dt)):
        buf[1:-1] = u
        if bc == "periodic":
            buf[0] = u[-1]
            buf[-1] = u[0]
        else:
            buf[0] = u[0]
            buf[-1] = u[-1]
        # Godunov flux via the convex identity max(a(max(uL, u*)), a(min(uR, u*)))
        np.maximum(buf[:-1], sonic, out=left)
        np.minimum(buf[1:], sonic, out=right)
        fl = flux.a(left)
        fr = flux.a(right)
        np.maximum(fl, fr, out=fl)
        u -= lam * np.diff(fl, axis=0)
    return u.T


def evolve_ensemble(e: Ensemble, scenario, t_final: float, dt: float,
                    block: int = 20_000) -> Ensemble:
    """Advance every realization independently; sample order is preserved.

    Samples are processed in blocks to bound memory; blocking does not change
    results because each realization's update is elementwise in the sample
    index.
    """
    if t_final <= 0:
        return e
    out = np.empty_like(e.values)
    for i0 in range(0, e.n, block):
        chunk = e.values[i0:i0 + block]
        if scenario.flux is not None:
            out[i0:i0 + block] = _evolve_conservation_block(
                chunk, e.axis, scenario.flux, t_final, dt, scenario.boundary)
        else:
            out[i0:i0 + block] = _evolve_linear_block(
                chunk, e.axis, scenario.speed, t_final, dt, scenario.boundary, None)
    return Ensemble(e.axis, e.samples, out, e.seed, e.time + t_final)


# ---------------------------------------------------------------------------
# canonical initial data from a CDF (quantile reduction)


def quantile_initial_data(F0, grid, name: str = "quantile") -> "object":
    """Canonical scenario on Omega=[0,1]: u0(x; w) is the left-continuous
    inverse of the initial CDF at x, evaluated on the discretized state axis.

    ``F0`` is either a callable (x_array, U_array) -> CDF matrix or a
    :class:`~statpde.fields.CdfField`; ``grid`` supplies the x and U axes.
    The inverse is found by bisection (searchsorted) on each discretized CDF
    column, returning state cell centers.
    """
    from .scenarios import Scenario  # deferred: scenarios imports this module

    x_axis, u_axis = grid.spatial_axes[0], grid.state_axes[0]
    u_centers = u_axis.centers
    if callable(F0):
        table = np.asarray(F0(x_axis.centers[:, None], u_centers[None, :]), dtype=float)
    else:
        table = F0.values
    if table.shape != (x_axis.n, u_axis.n):
        raise ValueError("initial CDF table shape does not match the grid")
    if np.min(np.diff(table, axis=1)) < -1e-12:
        raise ValueError("initial CDF is not nondecreasing along the state axis")

    def initial_data(omega: np.ndarray, x: np.ndarray) -> np.ndarray:
        if not np.array_equal(x, x_axis.centers):
            raise ValueError("quantile scenario is bound to its construction grid")
        out = np.empty((omega.shape[0], x.shape[0]))
        for j in range(x.shape[0]):
            k = np.searchsorted(table[j], omega, side="left")
            out[:, j] = u_centers[np.minimum(k, u_axis.n - 1)]
        return out

    return Scenario(
        name=name,
        speed=None,
        flux=None,
        param_law=Uniform01(),
        initial_data=initial_data,
        initial_cdf=None,
        initial_pdf=None,
        x_axis=x_axis,
        u_axis=u_axis,
        boundary="outflow",
        validity=np.inf,
    )


# ---------------------------------------------------------------------------
# diagnostics


def shock_formation_time(u0: SpatialField, flux: ConvexFlux) -> float:
    """Characteristic-crossing time predicted from discrete initial data.

    For a convex conservation law the first crossing happens at
    -1/min_x d/dx a'(u0(x)); returns inf when no characteristic compression
    is present.
    """
    w = flux.aprime(u0.values)
    slope = np.diff(w) / u0.axis.spacing
    m = slope.min(initial=0.0)
    if m >= 0:
        return float("inf")
    return float(-1.0 / m)


def ensemble_to_text(e: Ensemble) -> str:
    """Column-format snapshot: one block per sample, preceded by its parameters."""
    lines = [f"# ensemble n={e.n} seed={e.seed} time={e.time:.15g}"]
    for i in range(e.n):
        om = np.atleast_1d(e.samples[i])
        lines.append("omega " + " ".join(f"{w:.15g}" for w in om))
        lines.append(field_to_text(e.field(i)).rstrip("\n"))
    return "\n".join(lines) + "\n"
