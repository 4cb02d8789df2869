"""Catalog of benchmark problems: random initial data with known statistics.

Each scenario fixes the PDE (a signed linear speed or a convex flux), a
parameter law, the random initial field, and closed-form initial statistics,
on the domains and with the constants used throughout the experiments:

* ``linear-het-u`` / ``linear-het-v``: u_t + (0.1 x^2 + 1) u_x = 0 on
  [-3, 4] with bump profile g(x) = max(1 - (3x)^2, 0) placed at x = -+1 and
  a uniform [0, 1] amplitude. The two variants are different random fields
  (u scales both bumps together, v splits w and 1-w between them) with
  identical pointwise laws at every x.
* ``linear-2param``: u_t = (1 - 0.1 x^2) u_x on periodic [-2, 3], i.e.
  signed speed s(x) = 0.1 x^2 - 1, with two independent gaussian amplitudes
  on the bounded bumps g1(x) = exp(-10 (x+1)^2) + 1 and g2(x) mirrored at
  x = +1; the pointwise law is N(g2(x), g1(x)^2 + 0.25 g2(x)^2).
* ``rarefaction-u`` / ``rarefaction-v``: Burgers flux with smooth tanh
  steps; rarefactions emerge almost surely and the statistics transport
  stays valid for all time.
* ``shock-u`` / ``shock-v``: Burgers flux with piecewise-linear ramps of
  slope -2 w; a realization with parameter w shocks at t1(w) = 1/(2 w), so
  the no-shock horizon is 1/2, and the pointwise laws of the two variants
  diverge once shocks interact.

State axes are aligned so that U = 0 is a cell center: scenarios with a
uniform amplitude carry point masses at 0 wherever the profile vanishes, and
the discretized spike then sits exactly at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf

from .ensemble import ConvexFlux, GaussianLaw, ParamLaw, Uniform01, burgers_flux
from .grids import Axis

__all__ = [
    "Scenario",
    "SCENARIO_NAMES",
    "build_scenario",
    "initial_cdf_closed_form",
    "initial_pdf_closed_form",
]

PROFILE_ZERO_TOL = 1e-10  # threshold selecting the step branch of the CDF


@dataclass(frozen=True)
class Scenario:
    """Full problem description.

    ``initial_data(omega, x)`` maps an (N,) or (N, d) parameter batch and
    the x cell centers to an (N, nx) matrix of realizations.
    ``initial_cdf(x, U)`` broadcasts like a ufunc. ``initial_pdf(x, axis)``
    returns the density at one location discretized on a state axis (point
    masses become single-cell spikes).
    """

    name: str
    speed: Callable[[np.ndarray], np.ndarray] | None
    flux: ConvexFlux | None
    param_law: ParamLaw
    initial_data: Callable[[np.ndarray, np.ndarray], np.ndarray]
    initial_cdf: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    initial_pdf: Callable[[float, Axis], np.ndarray] | None
    x_axis: Axis
    u_axis: Axis
    boundary: str = "outflow"
    validity: float = math.inf
    c_axis: Axis | None = None
    point_mass_initial: bool = False

    def __post_init__(self) -> None:
        if self.speed is not None and self.flux is not None:
            raise ValueError("scenario cannot have both a linear speed and a convex flux")
        if self.boundary not in ("periodic", "outflow"):
            raise ValueError(f"unknown boundary treatment {self.boundary!r}")
        if self.flux is not None:
            self.flux.validate_convex(self.u_axis.lo, self.u_axis.hi)

    def describe(self) -> str:
        kind = "linear" if self.speed is not None else ("conservation" if self.flux else "data-only")
        lines = [
            f"scenario {self.name}",
            f"  kind {kind}",
            f"  parameter-law {self.param_law.describe()}",
            f"  x-domain [{self.x_axis.lo:g}, {self.x_axis.hi:g}] cells {self.x_axis.n}",
            f"  state-range [{self.u_axis.lo:g}, {self.u_axis.hi:g}] cells {self.u_axis.n}",
            f"  boundary {self.boundary}",
            f"  no-shock-horizon {self.validity:g}",
            f"  closed-form-cdf {self.initial_cdf is not None}",
            f"  closed-form-pdf {self.initial_pdf is not None}",
        ]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# profiles


def bump(x):
    """g(x) = max(1 - (3x)^2, 0): unit bump supported on |x| < 1/3."""
    x = np.asarray(x, dtype=float)
    return np.maximum(1.0 - (3.0 * x) ** 2, 0.0)


def tanh_step_up(x):
    """Smooth step from 0 to 1: (1 + tanh(40 x))/2."""
    return 0.5 * (1.0 + np.tanh(40.0 * np.asarray(x, dtype=float)))


def tanh_step_down(x):
    """Smooth step from -1 to 0: tanh_step_up - 1."""
    return tanh_step_up(x) - 1.0


def ramp_down(x):
    """Piecewise-linear step from 0 to -1 with slope -2 on [-1/4, 1/4]."""
    return np.clip(-2.0 * np.asarray(x, dtype=float) - 0.5, -1.0, 0.0)


def ramp_up(x):
    """ramp_down + 1: piecewise-linear step from 1 to 0."""
    return ramp_down(x) + 1.0


def gauss_bump_left(x):
    return np.exp(-10.0 * (np.asarray(x, dtype=float) + 1.0) ** 2) + 1.0


def gauss_bump_right(x):
    return np.exp(-10.0 * (np.asarray(x, dtype=float) - 1.0) ** 2) + 1.0


# ---------------------------------------------------------------------------
# closed-form statistics of w * profile with w uniform on [0, 1]


def uniform_scaled_cdf(profile, U):
    """CDF of w*p at fixed p, w uniform on [0, 1]; broadcasts over both.

    For p > 0 the value rises linearly on [0, p]; for p < 0 it falls from 1
    across [p, 0]; a vanishing profile gives a unit step at U = 0.
    """
    p = np.asarray(profile, dtype=float)
    U = np.asarray(U, dtype=float)
    p, U = np.broadcast_arrays(p, U)
    pos = p > PROFILE_ZERO_TOL
    neg = p < -PROFILE_ZERO_TOL
    safe = np.where(pos | neg, p, 1.0)
    ratio = U / safe
    up = np.clip(ratio, 0.0, 1.0)
    down = np.maximum(1.0 - np.maximum(ratio, 0.0), 0.0)
    step = (U >= 0).astype(float)
    return np.where(pos, up, np.where(neg, down, step))


def uniform_scaled_pdf(profile: float, u_axis: Axis) -> np.ndarray:
    """Density of w*p discretized on a state axis (midpoint-exact masses).

    Uniform of height 1/|p| over the span between 0 and p, averaged over
    each cell; a vanishing profile becomes a 1/dU spike in the cell holding
    U = 0.
    """
    p = float(profile)
    du = u_axis.spacing
    if abs(p) <= PROFILE_ZERO_TOL:
        out = np.zeros(u_axis.n)
        k = int(np.clip(np.floor((0.0 - u_axis.lo) / du), 0, u_axis.n - 1))
        out[k] = 1.0 / du
        return out
    lo, hi = (0.0, p) if p > 0 else (p, 0.0)
    cell_lo = u_axis.centers - du / 2
    overlap = np.clip(np.minimum(hi, cell_lo + du) - np.maximum(lo, cell_lo), 0.0, du)
    return overlap / (du * abs(p))


# ---------------------------------------------------------------------------
# scenario constructors


def _linear_het(name: str) -> Scenario:
    x_axis = Axis(-3.0, 4.0, 700, "x")
    u_axis = Axis(-0.2025, 1.2075, 94, "U")  # dU = 0.015, U = 0 on a center
    variant_u = name.endswith("-u")

    def profile_sum(x):
        x = np.asarray(x, dtype=float)
        return bump(x + 1.0) + bump(x - 1.0)

    def initial_data(omega, x):
        om = np.asarray(omega, dtype=float).reshape(-1, 1)
        x = np.asarray(x, dtype=float)
        if variant_u:
            return om * profile_sum(x)[None, :]
        return om * bump(x + 1.0)[None, :] + (1.0 - om) * bump(x - 1.0)[None, :]

    # the bumps have disjoint supports, so both variants share the law of
    # w * profile_sum(x) at every x
    def initial_cdf(x, U):
        return uniform_scaled_cdf(profile_sum(x), U)

    def initial_pdf(x, u_ax: Axis) -> np.ndarray:
        return uniform_scaled_pdf(float(profile_sum(np.asarray(x, dtype=float))), u_ax)

    return Scenario(
        name=name,
        speed=lambda x: 0.1 * np.asarray(x, dtype=float) ** 2 + 1.0,
        flux=None,
        param_law=Uniform01(),
        initial_data=initial_data,
        initial_cdf=initial_cdf,
        initial_pdf=initial_pdf,
        x_axis=x_axis,
        u_axis=u_axis,
        boundary="outflow",
        validity=math.inf,
        point_mass_initial=True,
    )


def _linear_2param() -> Scenario:
    x_axis = Axis(-2.0, 3.0, 500, "x")
    u_axis = Axis(-10.002, 13.998, 2000, "U")  # dU = 0.012, U = 0 on a center

    def initial_data(gamma, x):
        g = np.asarray(gamma, dtype=float)
        x = np.asarray(x, dtype=float)
        return g[:, 0:1] * gauss_bump_left(x)[None, :] + g[:, 1:2] * gauss_bump_right(x)[None, :]

    def initial_pdf(x, u_ax: Axis) -> np.ndarray:
        m = float(gauss_bump_right(x))
        var = float(gauss_bump_left(x)) ** 2 + 0.25 * float(gauss_bump_right(x)) ** 2
        U = u_ax.centers
        return np.exp(-0.5 * (U - m) ** 2 / var) / math.sqrt(2 * math.pi * var)

    return Scenario(
        name="linear-2param",
        speed=lambda x: 0.1 * np.asarray(x, dtype=float) ** 2 - 1.0,
        flux=None,
        param_law=GaussianLaw(mean=(0.0, 1.0), cov=((1.0, 0.0), (0.0, 0.25))),
        initial_data=initial_data,
        initial_cdf=None,
        initial_pdf=initial_pdf,
        x_axis=x_axis,
        u_axis=u_axis,
        boundary="periodic",
        validity=math.inf,
    )


def _burgers_pair(name: str, left_prof, right_prof, shift: float, x_axis: Axis,
                  validity: float) -> Scenario:
    """Rarefaction and shock pairs share this construction.

    u variant: w * (right_prof(x - shift) + left_prof(x + shift));
    v variant: w * left_prof(x + shift) + (1 - w) * right_prof(x - shift).
    The two profile pieces have disjoint sign regions, so both variants have
    the pointwise law of w * (combined profile).
    """
    u_axis = Axis(-1.205, 1.205, 241, "U")  # dU = 0.01, U = 0 on a center
    variant_u = name.endswith("-u")

    def combined(x):
        x = np.asarray(x, dtype=float)
        return right_prof(x - shift) + left_prof(x + shift)

    def initial_data(omega, x):
        om = np.asarray(omega, dtype=float).reshape(-1, 1)
        x = np.asarray(x, dtype=float)
        if variant_u:
            return om * combined(x)[None, :]
        return om * left_prof(x + shift)[None, :] + (1.0 - om) * right_prof(x - shift)[None, :]

    def initial_cdf(x, U):
        return uniform_scaled_cdf(combined(x), U)

    def initial_pdf(x, u_ax: Axis) -> np.ndarray:
        return uniform_scaled_pdf(float(combined(np.asarray(x, dtype=float))), u_ax)

    return Scenario(
        name=name,
        speed=None,
        flux=burgers_flux(),
        param_law=Uniform01(),
        initial_data=initial_data,
        initial_cdf=initial_cdf,
        initial_pdf=initial_pdf,
        x_axis=x_axis,
        u_axis=u_axis,
        boundary="outflow",
        validity=validity,
        point_mass_initial=True,
    )


SCENARIO_NAMES = (
    "linear-het-u",
    "linear-het-v",
    "linear-2param",
    "rarefaction-u",
    "rarefaction-v",
    "shock-u",
    "shock-v",
)


def build_scenario(name: str) -> Scenario:
    """Construct a catalog scenario by name."""
    if name in ("linear-het-u", "linear-het-v"):
        return _linear_het(name)
    if name == "linear-2param":
        return _linear_2param()
    if name in ("rarefaction-u", "rarefaction-v"):
        return _burgers_pair(name, tanh_step_down, tanh_step_up, 1.0,
                             Axis(-3.0, 3.0, 600, "x"), math.inf)
    if name in ("shock-u", "shock-v"):
        return _burgers_pair(name, ramp_up, ramp_down, 0.5,
                             Axis(-2.0, 2.0, 400, "x"), 0.5)
    raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIO_NAMES)}")


def initial_cdf_closed_form(scenario: Scenario, x, U):
    """Evaluate the scenario's closed-form initial CDF (broadcasting)."""
    if scenario.initial_cdf is None:
        raise ValueError(f"scenario {scenario.name!r} has no closed-form CDF")
    return scenario.initial_cdf(np.asarray(x, dtype=float), np.asarray(U, dtype=float))


def initial_pdf_closed_form(scenario: Scenario, x, u_axis: Axis | None = None) -> np.ndarray:
    """Initial density over the state axis at one location x."""
    if scenario.initial_pdf is None:
        raise ValueError(f"scenario {scenario.name!r} has no closed-form PDF")
    return np.asarray(scenario.initial_pdf(x, u_axis if u_axis is not None else scenario.u_axis),
                      dtype=float)


def gaussian_cdf(x, mean, std):
    """Normal CDF helper for gaussian-law scenarios."""
    z = (np.asarray(x, dtype=float) - mean) / (math.sqrt(2.0) * std)
    return 0.5 * (1.0 + erf(z))
