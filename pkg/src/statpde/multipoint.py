"""Multi-point statistics for systems of linear hyperbolic equations.

One-point statistics of a vector-valued solution are not propagatable (see
:func:`wave_system_counterexample` for the exact two-atom demonstration), but
the joint law of the diagonalized components sampled at separate spatial
points is: its density obeys

    f_t + sum_i c_i(x_i) d/dx_i f = 0,

plus conservative transport along the state axes when an x-dependent
diagonalization introduces diagonal source terms g_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .advect import advect_along, cfl_timestep, check_cfl, n_steps
from .fields import DEFAULT_EPS_NORM, DensityField
from .grids import Axis, PhaseGrid

__all__ = [
    "MultiPointDensity",
    "SourceSpec",
    "evolve_two_point",
    "evolve_two_point_sourced",
    "evolve_n_point",
    "marginalize",
    "DiagonalDensity",
    "one_point_from_diagonal",
    "CounterexampleReport",
    "wave_system_counterexample",
]

MAX_CELLS = 100_000_000  # demonstrative cap for N-point grids


@dataclass(frozen=True)
class MultiPointDensity:
    """Joint density over N spatial points and N state coordinates, N in {2, 3}."""

    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0
    eps_norm: float = DEFAULT_EPS_NORM

    def __post_init__(self) -> None:
        n = len(self.grid.spatial_axes)
        if n not in (2, 3) or len(self.grid.state_axes) != n:
            raise ValueError("MultiPointDensity needs N spatial and N state axes, N in {2, 3}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if v.min(initial=0.0) < -1e-9:
            raise ValueError("MultiPointDensity has negative values")
        object.__setattr__(self, "values", np.clip(v, 0.0, None))
        mass = self.slice_masses()
        if mass.min() < 1 - self.eps_norm or mass.max() > 1 + self.eps_norm:
            raise ValueError(
                f"normalization drift: slice masses in [{mass.min():.6f}, {mass.max():.6f}]")

    @property
    def n_points(self) -> int:
        return len(self.grid.spatial_axes)

    def slice_masses(self) -> np.ndarray:
        n = self.n_points
        state_dims = tuple(range(n, 2 * n))
        return self.values.sum(axis=state_dims) * self.grid.state_cell_volume


@dataclass(frozen=True)
class SourceSpec:
    """Diagonal source terms g1(x, U), g2(y, V) of a decoupled 2x2 system."""

    g1: Callable[[np.ndarray, np.ndarray], np.ndarray]
    g2: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _auto_dt(axes: tuple[Axis, ...], smaxes: list[float], t_final: float,
             cfl: float = 0.9) -> float:
    steps = 1
    for ax, smax in zip(axes, smaxes):
        if smax > 0:
            steps = max(steps, int(np.ceil(t_final * smax / (cfl * ax.spacing))))
    return t_final / steps


def _spatial_sweeps(values: np.ndarray, grid: PhaseGrid, speeds, dt: float, bc: str,
                    order: str) -> np.ndarray:
    dims = range(len(grid.spatial_axes))
    seq = reversed(list(dims)) if order == "reverse" else dims
    for d in seq:
        ax = grid.spatial_axes[d]
        s_if = np.asarray(speeds[d](ax.edges), dtype=float)
        values = advect_along(values, d, s_if, dt, ax.spacing, bc)
    return values


def evolve_n_point(f0, speeds, t_final: float, dt: float | None = None,
                   bc: str = "outflow", order: str = "forward",
                   splitting: str = "godunov"):
    """Dimension-split plain upwind for f_t + sum_i c_i(x_i) d/dx_i f = 0.

    ``speeds`` is one callable per spatial axis. Accepts a
    :class:`~statpde.fields.DensityField` (one point) or a
    :class:`MultiPointDensity` (two or three points). ``order`` picks the
    sweep sequence ("forward" or "reverse"); ``splitting`` is "godunov"
    (full steps) or "strang" (symmetrized first axis, two-point only).
    """
    grid = f0.grid
    if grid.n_cells > MAX_CELLS:
        raise ValueError(f"grid has {grid.n_cells} cells, above the cap {MAX_CELLS}")
    if len(speeds) != len(grid.spatial_axes):
        raise ValueError("need one speed function per spatial axis")
    smaxes = [float(np.max(np.abs(c(ax.edges)))) for c, ax in zip(speeds, grid.spatial_axes)]
    if dt is None:
        dt = _auto_dt(grid.spatial_axes, smaxes, t_final)
    for ax, smax in zip(grid.spatial_axes, smaxes):
        check_cfl(dt, ax.spacing, smax)

    v = f0.values
    for _ in range(n_steps(t_final, dt)):
        if splitting == "strang" and len(grid.spatial_axes) == 2:
            ax0 = grid.spatial_axes[0]
            s0 = np.asarray(speeds[0](ax0.edges), dtype=float)
            v = advect_along(v, 0, s0, dt / 2, ax0.spacing, bc)
            ax1 = grid.spatial_axes[1]
            v = advect_along(v, 1, np.asarray(speeds[1](ax1.edges), dtype=float),
                             dt, ax1.spacing, bc)
            v = advect_along(v, 0, s0, dt / 2, ax0.spacing, bc)
        else:
            v = _spatial_sweeps(v, grid, speeds, dt, bc, order)
    v = np.clip(v, 0.0, None)
    if isinstance(f0, DensityField):
        return DensityField(grid, v, f0.time + t_final, f0.eps_norm)
    return MultiPointDensity(grid, v, f0.time + t_final, f0.eps_norm)


def evolve_two_point(f0: MultiPointDensity, c1, c2, t_final: float,
                     dt: float | None = None, bc: str = "outflow",
                     order: str = "forward", splitting: str = "godunov") -> MultiPointDensity:
    """Two-point joint density transport: f_t + c1(x) f_x + c2(y) f_y = 0."""
    if f0.n_points != 2:
        raise ValueError("evolve_two_point expects a two-point density")
    return evolve_n_point(f0, (c1, c2), t_final, dt, bc, order, splitting)


def _state_flux_sweep(v: np.ndarray, state_dim: int, w_edges: np.ndarray, dt: float,
                      du: float) -> np.ndarray:
    """Conservative upwind transport along one state axis with zero-inflow edges.

    ``w_edges`` holds the signed speeds at the state-cell edges, shaped to
    broadcast against the padded field; compactly supported densities keep
    total mass exactly (telescoping interface fluxes, zero exterior states).
    """
    pad = [(0, 0)] * v.ndim
    pad[state_dim] = (1, 1)
    fp = np.pad(v, pad)  # zero exterior states
    n = v.shape[state_dim]
    sl = [slice(None)] * v.ndim
    sl[state_dim] = slice(0, n + 1)
    lower = fp[tuple(sl)]
    sl[state_dim] = slice(1, n + 2)
    upper = fp[tuple(sl)]
    flux = np.maximum(w_edges, 0.0) * lower + np.minimum(w_edges, 0.0) * upper
    d = np.diff(flux, axis=state_dim)
    return v - (dt / du) * d


def evolve_two_point_sourced(f0: MultiPointDensity, c1, c2, src: SourceSpec,
                             t_final: float, dt: float | None = None, bc: str = "outflow",
                             source_sign: float = 1.0) -> MultiPointDensity:
    """Two-point transport with diagonal sources:

        f_t + c1(x) f_x + c2(y) f_y + sign*[ (f g1)_U + (f g2)_V ] = 0.

    The default sign (+1) is the continuity-equation form implied by the
    weak derivation; ``source_sign=-1`` reproduces the alternative printed
    sign for comparison. The state sweeps are conservative upwind with
    zero-inflow edges, so compactly supported densities conserve total mass.
    """
    if f0.n_points != 2:
        raise ValueError("expected a two-point density")
    grid = f0.grid
    x_ax, y_ax = grid.spatial_axes
    u_ax, v_ax = grid.state_axes
    # transport velocity along U is sign*g1(x, U) at the U-cell edges, per x
    w_u = source_sign * np.asarray(src.g1(x_ax.centers[:, None], u_ax.edges[None, :]), dtype=float)
    w_v = source_sign * np.asarray(src.g2(y_ax.centers[:, None], v_ax.edges[None, :]), dtype=float)
    w_u = np.broadcast_to(w_u[:, None, :, None], (x_ax.n, 1, u_ax.n + 1, 1))
    w_v = np.broadcast_to(w_v[None, :, None, :], (1, y_ax.n, 1, v_ax.n + 1))

    smax_states = [float(np.max(np.abs(w_u))), float(np.max(np.abs(w_v)))]
    smaxes = [float(np.max(np.abs(c(ax.edges)))) for c, ax in zip((c1, c2), (x_ax, y_ax))]
    if dt is None:
        # state-axis speeds may change sign (converging characteristics), so
        # the monotone bound for the conservative sweep is CFL 1/2
        dt = _auto_dt(grid.axes, smaxes + smax_states, t_final, cfl=0.45)
    for ax, smax in zip(grid.axes, smaxes + smax_states):
        check_cfl(dt, ax.spacing, smax)

    v = f0.values
    for _ in range(n_steps(t_final, dt)):
        v = _spatial_sweeps(v, grid, (c1, c2), dt, bc, "forward")
        v = _state_flux_sweep(v, 2, w_u, dt, u_ax.spacing)
        v = _state_flux_sweep(v, 3, w_v, dt, v_ax.spacing)
    return MultiPointDensity(grid, np.clip(v, 0.0, None), f0.time + t_final, f0.eps_norm)


def marginalize(f: MultiPointDensity, keep: tuple[int, ...]):
    """Integrate out all points not in ``keep`` (midpoint rule).

    ``keep`` lists retained point indices; each retained spatial axis stays
    paired with its state axis. Returns a :class:`DensityField` when one
    point is kept, otherwise a smaller :class:`MultiPointDensity`.
    """
    n = f.n_points
    keep = tuple(sorted(keep))
    if not keep or any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise ValueError(f"keep must be distinct point indices below {n}")
    drop = [i for i in range(n) if i not in keep]
    axes_to_sum = tuple(drop) + tuple(n + i for i in drop)
    vol = 1.0
    for i in drop:
        vol *= f.grid.spatial_axes[i].spacing * f.grid.state_axes[i].spacing
    vals = f.values.sum(axis=axes_to_sum) * vol
    sp = tuple(f.grid.spatial_axes[i] for i in keep)
    st = tuple(f.grid.state_axes[i] for i in keep)
    grid = PhaseGrid(sp, st)
    if len(keep) == 1:
        return DensityField(grid, vals, f.time, f.eps_norm)
    return MultiPointDensity(grid, vals, f.time, f.eps_norm)


# ---------------------------------------------------------------------------
# diagonal slice change of variables


@dataclass(frozen=True)
class DiagonalDensity:
    """One-point density of z = P^{-1} (u, v)^T at a single spatial location."""

    u_axis: Axis
    v_axis: Axis
    values: np.ndarray
    x: float
    time: float

    def mass(self) -> float:
        return float(self.values.sum() * self.u_axis.spacing * self.v_axis.spacing)


def one_point_from_diagonal(f: MultiPointDensity, x: float, P: np.ndarray) -> DiagonalDensity:
    """One-point density of the physical components at a point x.

    Uses the diagonal slice y=x of the two-point density of the decoupled
    coordinates (u, v) = P z: the density of z is
    |det P| * f_diag(P z), evaluated on the (U, V) grid by bilinear
    interpolation (zero outside).
    """
    P = np.asarray(P, dtype=float)
    det = float(np.linalg.det(P))
    if abs(det) < 1e-14:
        raise ValueError("P must be invertible")
    if f.n_points != 2:
        raise ValueError("expected a two-point density")
    x_ax, y_ax = f.grid.spatial_axes
    jx = int(np.argmin(np.abs(x_ax.centers - x)))
    jy = int(np.argmin(np.abs(y_ax.centers - x)))
    if abs(x_ax.centers[jx] - x) > 0.51 * x_ax.spacing or abs(y_ax.centers[jy] - x) > 0.51 * y_ax.spacing:
        raise ValueError("diagonal point x is not on the grid")
    diag = f.values[jx, jy]

    u_ax, v_ax = f.grid.state_axes
    z1, z2 = np.meshgrid(u_ax.centers, v_ax.centers, indexing="ij")
    uq = P[0, 0] * z1 + P[0, 1] * z2
    vq = P[1, 0] * z1 + P[1, 1] * z2
    vals = abs(det) * _bilinear_zero_outside(diag, u_ax, v_ax, uq, vq)
    return DiagonalDensity(u_ax, v_ax, vals, x_ax.centers[jx], f.time)


def _bilinear_zero_outside(table: np.ndarray, u_ax: Axis, v_ax: Axis,
                           uq: np.ndarray, vq: np.ndarray) -> np.ndarray:
    du, dv = u_ax.spacing, v_ax.spacing
    gu = (uq - u_ax.centers[0]) / du
    gv = (vq - v_ax.centers[0]) / dv
    inside = (gu >= 0) & (gu <= u_ax.n - 1) & (gv >= 0) & (gv <= v_ax.n - 1)
    gu = np.clip(gu, 0, u_ax.n - 1 - 1e-12)
    gv = np.clip(gv, 0, v_ax.n - 1 - 1e-12)
    i0 = gu.astype(int)
    j0 = gv.astype(int)
    fu = gu - i0
    fv = gv - j0
    out = ((1 - fu) * (1 - fv) * table[i0, j0] + fu * (1 - fv) * table[i0 + 1, j0]
           + (1 - fu) * fv * table[i0, j0 + 1] + fu * fv * table[i0 + 1, j0 + 1])
    return np.where(inside, out, 0.0)


# ---------------------------------------------------------------------------
# exact two-atom counterexample for one-point propagation in systems


@dataclass(frozen=True)
class CounterexampleReport:
    """Exact statistics of the wave-system counterexample.

    Two datasets share the one-point law of (u, v) at x = +-1 at t = 0, yet
    their one-point laws at (t, x) = (1, 0) differ, so no map of initial
    one-point statistics can propagate them. Measures are dicts from (u, v)
    atoms to probabilities.
    """

    initial_at_plus1: tuple[dict, dict]
    initial_at_minus1: tuple[dict, dict]
    final_at_origin: tuple[dict, dict]
    initial_statistics_equal: bool
    final_statistics_differ: bool

    def phi_final(self, dataset: int, point: tuple[float, float]) -> float:
        return self.final_at_origin[dataset - 1].get(point, 0.0)


def _measure(pairs) -> dict:
    out: dict = {}
    for p in pairs:
        out[p] = out.get(p, 0.0) + 0.5
    return out


def wave_system_counterexample() -> CounterexampleReport:
    """Evaluate the two-atom counterexample exactly.

    Omega = {0, 1} with probability 1/2 each. The system decouples into a
    left-moving component u (foot point x + t) and a right-moving component
    v (foot point x - t). Initial data are prescribed at x = +-1 only; the
    values at (t, x) = (1, 0) are u(0, 1) and v(0, -1).
    """
    # dataset -> component -> position -> (value at omega=0, value at omega=1)
    data = {
        1: {("u", 1): (1.0, 0.0), ("u", -1): (0.0, 0.0),
            ("v", 1): (0.0, 0.0), ("v", -1): (1.0, 0.0)},
        2: {("u", 1): (1.0, 0.0), ("u", -1): (0.0, 0.0),
            ("v", 1): (0.0, 0.0), ("v", -1): (0.0, 1.0)},
    }

    def initial(ds: int, x: int) -> dict:
        d = data[ds]
        return _measure([(d[("u", x)][w], d[("v", x)][w]) for w in (0, 1)])

    def final(ds: int) -> dict:
        d = data[ds]
        return _measure([(d[("u", 1)][w], d[("v", -1)][w]) for w in (0, 1)])

    init_p = (initial(1, 1), initial(2, 1))
    init_m = (initial(1, -1), initial(2, -1))
    fin = (final(1), final(2))
    return CounterexampleReport(
        initial_at_plus1=init_p,
        initial_at_minus1=init_m,
        final_at_origin=fin,
        initial_statistics_equal=(init_p[0] == init_p[1] and init_m[0] == init_m[1]),
        final_statistics_differ=(fin[0] != fin[1]),
    )
