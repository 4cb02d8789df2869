"""Direct solvers for the evolution equations of the pointwise statistics.

For the linear transport equation u_t + s(x) u_x = 0 with random data, the
PDF f(t, x, U) of the solution value obeys the same transport equation in
(t, x), slice by slice in U; with a random constant speed the joint density
f(t, x, U, C) is advected at speed fixed by the C coordinate.

For a convex conservation law u_t + a(u)_x = 0 and shock-free data, the CDF
obeys F_t + a'(U) F_x = 0, equivalently F(t, x, U) = F(0, x - a'(U) t, U),
and the PDF obeys the nonlocal conservation form

    f_t + d/dx [ a''(U) * cum(f)(U) + a'(U) f ] = 0,

with cum(f)(U) the running U-integral of f. The nonlocal equation is solved
with a central-upwind flux whose one-sided local speeds come from the
pointwise multiplier a'(U) of f inside the flux (the diagonal of its
derivative with respect to f); interface states use minmod reconstruction.
All solvers step with forward Euler. None of them is valid once shocks form.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .advect import (
    advect_along,
    cfl_timestep,
    check_cfl,
    minmod3,
    n_steps,
)
from .fields import CdfField, DensityField, interp_columns
from .grids import PhaseGrid

__all__ = [
    "evolve_pdf_linear",
    "evolve_pdf_random_speed",
    "evolve_cdf_exact",
    "evolve_cdf_fv",
    "evolve_cdf_linear",
    "evolve_pdf_nonlocal",
]

DEFAULT_THETA = 1.0
SPEED_FLOOR = 1e-14


def _speed_table(speed, axis) -> np.ndarray:
    s = np.asarray(speed(axis.edges), dtype=float)
    return np.broadcast_to(s, (axis.n + 1,))


def evolve_pdf_linear(f0: DensityField, speed: Callable, t_final: float,
                      dt: float | None = None, theta: float | None = DEFAULT_THETA,
                      bc: str = "outflow") -> DensityField:
    """Advance the PDF of u_t + s(x) u_x = 0; every U-slice advects at s(x).

    Default numerics: minmod-limited upwind (theta=1) with forward Euler.
    Set ``theta=None`` for the plain first-order scheme.
    """
    x_axis = f0.grid.spatial_axes[0]
    s_if = _speed_table(speed, x_axis)
    smax = float(np.max(np.abs(s_if)))
    if dt is None:
        dt = cfl_timestep(x_axis.spacing, smax, t_final)
    check_cfl(dt, x_axis.spacing, smax)
    v = f0.values
    for _ in range(n_steps(t_final, dt)):
        v = advect_along(v, 0, s_if, dt, x_axis.spacing, bc, theta)
    return DensityField(f0.grid, np.clip(v, 0.0, None), f0.time + t_final, f0.eps_norm)


def evolve_pdf_random_speed(f0: DensityField, t_final: float, dt: float | None = None,
                            sign: float = -1.0, theta: float | None = DEFAULT_THETA,
                            bc: str = "outflow") -> DensityField:
    """Advance the joint density f(t, x, U, C) for a random constant speed.

    Each (U, C)-slice advects in x at the signed speed ``sign * C``; the
    default sign (-1) matches writing the underlying equation as
    u_t = C u_x, i.e. u_t + (-C) u_x = 0.
    """
    if len(f0.grid.state_axes) != 2:
        raise ValueError("expected a (x, U, C) density")
    x_axis = f0.grid.spatial_axes[0]
    c_axis = f0.grid.state_axes[1]
    speeds = sign * c_axis.centers  # one transport speed per C cell
    smax = float(np.max(np.abs(speeds)))
    if dt is None:
        dt = cfl_timestep(x_axis.spacing, smax, t_final)
    check_cfl(dt, x_axis.spacing, smax)
    s_if = np.broadcast_to(speeds[None, None, :], (x_axis.n + 1, 1, c_axis.n))
    v = f0.values
    for _ in range(n_steps(t_final, dt)):
        v = advect_along(v, 0, s_if, dt, x_axis.spacing, bc, theta)
    return DensityField(f0.grid, np.clip(v, 0.0, None), f0.time + t_final, f0.eps_norm)


def evolve_cdf_exact(F0, aprime: Callable, t: float, grid: PhaseGrid | None = None,
                     far_field: tuple[np.ndarray, np.ndarray] | None = None,
                     monotone_tol: float = 1e-12) -> CdfField:
    """Semi-Lagrangian CDF at time t: F(t, x, U) = F0(x - a'(U) t, U).

    ``F0`` is either a callable (x, U) -> CDF evaluated exactly at the foot
    points, or a :class:`CdfField` interpolated linearly along x. Feet
    outside the domain read ``far_field`` (a pair of U-profiles for the left
    and right exterior) or, by default, the outermost column, which equals
    the true far field whenever the initial data is x-constant outside the
    domain. Valid only while no shocks have formed.
    """
    if isinstance(F0, CdfField):
        grid = F0.grid if grid is None else grid
    elif grid is None:
        raise ValueError("grid is required when F0 is a callable")
    x_axis, u_axis = grid.spatial_axes[0], grid.state_axes[0]
    xc, uc = x_axis.centers, u_axis.centers
    feet = xc[:, None] - np.asarray(aprime(uc))[None, :] * t  # (nx, nU)

    if callable(F0):
        vals = np.asarray(F0(feet, uc[None, :]), dtype=float)
    else:
        vals = interp_columns(F0.x_axis.centers, F0.values, feet)
        if far_field is not None:
            left, right = far_field
            vals = np.where(feet < F0.x_axis.centers[0], np.asarray(left)[None, :], vals)
            vals = np.where(feet > F0.x_axis.centers[-1], np.asarray(right)[None, :], vals)

    out = CdfField(grid, np.clip(vals, 0.0, 1.0), t)
    if callable(F0) and monotone_tol is not None:
        out.check_monotone(monotone_tol)
    return out


def evolve_cdf_fv(F0: CdfField, aprime: Callable, t_final: float, dt: float | None = None,
                  theta: float | None = DEFAULT_THETA, bc: str = "outflow") -> CdfField:
    """Finite-volume transport of the CDF: each U-slice advects at a'(U)."""
    x_axis, u_axis = F0.x_axis, F0.u_axis
    speeds = np.asarray(aprime(u_axis.centers), dtype=float)
    smax = float(np.max(np.abs(speeds)))
    if dt is None:
        dt = cfl_timestep(x_axis.spacing, smax, t_final)
    check_cfl(dt, x_axis.spacing, smax)
    s_if = np.broadcast_to(speeds[None, :], (x_axis.n + 1, u_axis.n))
    v = F0.values
    for _ in range(n_steps(t_final, dt)):
        v = advect_along(v, 0, s_if, dt, x_axis.spacing, bc, theta)
    return CdfField(F0.grid, np.clip(v, 0.0, 1.0), F0.time + t_final)


def evolve_cdf_linear(F0: CdfField, speed: Callable, t_final: float,
                      dt: float | None = None, theta: float | None = DEFAULT_THETA,
                      bc: str = "outflow") -> CdfField:
    """Transport of the CDF for the linear equation: F_t + s(x) F_x = 0."""
    x_axis = F0.x_axis
    s_if = _speed_table(speed, x_axis)
    smax = float(np.max(np.abs(s_if)))
    if dt is None:
        dt = cfl_timestep(x_axis.spacing, smax, t_final)
    check_cfl(dt, x_axis.spacing, smax)
    v = F0.values
    for _ in range(n_steps(t_final, dt)):
        v = advect_along(v, 0, s_if, dt, x_axis.spacing, bc, theta)
    return CdfField(F0.grid, np.clip(v, 0.0, 1.0), F0.time + t_final)


def _nonlocal_step(f: np.ndarray, ap: np.ndarray, a2p: np.ndarray, du: float,
                   lam: float, theta: float, bc: str) -> np.ndarray:
    """One central-upwind step of the nonlocal PDF equation on a (nx, nU) array.

    Interface states are minmod-reconstructed in x; the flux applied to a
    state g is a''(U) cum(g) + a'(U) g with cum the running midpoint
    U-integral from the lower state edge (zero inflow, compact support).
    With the one-sided speeds taken from a'(U), the flux is pure upwind
    wherever a'(U) != 0 and the centered average where it vanishes.
    """
    if bc == "periodic":
        fp = np.concatenate([f[-2:], f, f[:2]], axis=0)
    elif bc == "outflow":
        fp = np.concatenate([f[:1], f[:1], f, f[-1:], f[-1:]], axis=0)
    else:
        raise ValueError(f"unknown boundary treatment {bc!r}")
    d = np.diff(fp, axis=0)
    sig = minmod3(theta * d[:-1], 0.5 * (fp[2:] - fp[:-2]), theta * d[1:])
    mid = fp[1:-1]                      # cells -1 .. nx
    minus = (mid + 0.5 * sig)[:-1]      # state below interface m = 0..nx
    plus = (mid - 0.5 * sig)[1:]        # state above interface m

    def flux(g: np.ndarray) -> np.ndarray:
        cum = du * (np.cumsum(g, axis=-1) - 0.5 * g)
        return a2p * cum + ap * g

    gm, gp = flux(minus), flux(plus)
    h = np.where(ap > SPEED_FLOOR, gm, np.where(ap < -SPEED_FLOOR, gp, 0.5 * (gm + gp)))
    return f - lam * (h[1:] - h[:-1])


def evolve_pdf_nonlocal(f0: DensityField, flux, t_final: float, dt: float | None = None,
                        theta: float = 1.3, bc: str = "outflow") -> DensityField:
    """Advance the PDF of a convex conservation law by its nonlocal equation.

    ``flux`` carries a, a', a'' (see :class:`~statpde.ensemble.ConvexFlux`).
    theta in [1, 2] controls the minmod reconstruction. Valid only while no
    shocks have formed; requires the state axis to cover the support so the
    U-cumulative can start from zero at the lower edge.
    """
    if not 1.0 <= theta <= 2.0:
        raise ValueError(f"theta must be in [1, 2], got {theta}")
    x_axis, u_axis = f0.grid.spatial_axes[0], f0.grid.state_axes[0]
    uc = u_axis.centers
    ap = np.asarray(flux.aprime(uc), dtype=float)[None, :]
    a2p = np.broadcast_to(np.asarray(flux.a2prime(uc), dtype=float), (u_axis.n,))[None, :]
    smax = float(np.max(np.abs(ap)))
    if dt is None:
        # reconstruct-then-Euler stepping is TVD only around CFL 2/(2+theta)
        dt = cfl_timestep(x_axis.spacing, smax, t_final, cfl=0.45)
    check_cfl(dt, x_axis.spacing, smax)
    lam = dt / x_axis.spacing
    v = f0.values
    for _ in range(n_steps(t_final, dt)):
        v = _nonlocal_step(v, ap, a2p, u_axis.spacing, lam, theta, bc)
    return DensityField(f0.grid, np.clip(v, 0.0, None), f0.time + t_final, f0.eps_norm)
