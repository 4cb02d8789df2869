"""Discrete fields over phase grids and the helpers shared by all solvers.

Three field flavors:

* :class:`SpatialField` holds one PDE realization u(t, x) on a spatial axis.
* :class:`DensityField` holds a probability density f(t, x, U) (or f(t, x, U, C))
  on a :class:`~statpde.grids.PhaseGrid`; each spatial slice integrates to 1
  by the midpoint rule, within a configurable drift ``eps_norm``.
* :class:`CdfField` holds a cumulative distribution F(t, x, U) on a grid with
  a single state axis, valued in [0, 1].

All fields are immutable value objects; operations return fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grids import Axis, PhaseGrid

__all__ = [
    "SpatialField",
    "DensityField",
    "CdfField",
    "DEFAULT_EPS_NORM",
    "linear_interpolate",
    "interp_columns",
    "state_integral",
    "cdf_to_pdf",
    "pdf_to_cdf",
    "field_to_text",
    "field_from_text",
]

DEFAULT_EPS_NORM = 0.02

# Negative rounding noise tolerated in densities after observation-time clipping.
NEG_TOL = 1e-12


@dataclass(frozen=True)
class SpatialField:
    """One realization u(t, .) on a spatial axis, values at cell centers."""

    axis: Axis
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.axis.n,):
            raise ValueError(f"values shape {v.shape} != axis cells ({self.axis.n},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("SpatialField values must be finite")

    def at_time(self, t: float, values: np.ndarray) -> "SpatialField":
        return SpatialField(self.axis, values, t)


@dataclass(frozen=True)
class DensityField:
    """Discretized PDF over a phase grid at a fixed time.

    Invariants enforced at construction: nonnegative values (tiny negative
    rounding noise is clipped) and per-spatial-slice midpoint-rule mass
    within ``eps_norm`` of 1.
    """

    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0
    eps_norm: float = DEFAULT_EPS_NORM

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("DensityField values must be finite")
        if v.min(initial=0.0) < -1e-9:
            raise ValueError(f"DensityField has negative values (min {v.min()})")
        v = np.clip(v, 0.0, None)
        object.__setattr__(self, "values", v)
        mass = self.slice_masses()
        if mass.size and (mass.min() < 1 - self.eps_norm or mass.max() > 1 + self.eps_norm):
            raise ValueError(
                "DensityField normalization drift too large: slice masses in "
                f"[{mass.min():.6f}, {mass.max():.6f}] vs eps_norm={self.eps_norm}"
            )

    def slice_masses(self) -> np.ndarray:
        """Midpoint-rule state integral for every spatial index."""
        n_sp = len(self.grid.spatial_axes)
        state_dims = tuple(range(n_sp, self.values.ndim))
        return self.values.sum(axis=state_dims) * self.grid.state_cell_volume

    @property
    def x_axis(self) -> Axis:
        return self.grid.spatial_axes[0]

    @property
    def u_axis(self) -> Axis:
        return self.grid.state_axes[0]


@dataclass(frozen=True)
class CdfField:
    """Discretized CDF F(t, x, U) on a grid with one state axis.

    Values are clipped to [0, 1] at construction. Monotonicity along U is a
    property of the producing route, not a hard constructor check: the exact
    semi-Lagrangian route guarantees it to 1e-12 (see ``check_monotone``),
    while finite-volume transport with U-dependent speeds can violate it at
    scheme-error level near steep gradients.
    """

    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        if len(self.grid.state_axes) != 1:
            raise ValueError("CdfField requires exactly one state axis")
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("CdfField values must be finite")
        if v.min(initial=0.0) < -1e-9 or v.max(initial=1.0) > 1 + 1e-9:
            raise ValueError("CdfField values out of [0, 1] beyond rounding noise")
        object.__setattr__(self, "values", np.clip(v, 0.0, 1.0))

    @property
    def x_axis(self) -> Axis:
        return self.grid.spatial_axes[0]

    @property
    def u_axis(self) -> Axis:
        return self.grid.state_axes[0]

    def monotone_defect(self) -> float:
        """Largest decrease along the state axis (0 for a perfect CDF)."""
        d = np.diff(self.values, axis=-1)
        return float(max(0.0, -d.min(initial=0.0)))

    def check_monotone(self, tol: float = 1e-12) -> None:
        defect = self.monotone_defect()
        if defect > tol:
            raise ValueError(f"CDF monotonicity defect {defect:.3e} exceeds {tol:.1e}")


# ---------------------------------------------------------------------------
# interpolation


def _interp_1d(centers: np.ndarray, values: np.ndarray, q: np.ndarray, clamp: bool) -> np.ndarray:
    lo, hi = centers[0], centers[-1]
    if not clamp:
        if np.any(q < lo - 1e-12) or np.any(q > hi + 1e-12):
            raise ValueError("interpolation query outside axis range and clamping disabled")
    qc = np.clip(q, lo, hi)
    return np.interp(qc, centers, values)


def linear_interpolate(field: SpatialField | CdfField, query, clamp: bool = False) -> float | np.ndarray:
    """Piecewise-linear value of a field at physical coordinates.

    For a :class:`SpatialField`, ``query`` is an x position (or array of
    them). For a :class:`CdfField`, ``query`` is an (x, U) pair and the
    interpolation is bilinear between cell centers. Queries must lie within
    the span of the cell centers unless ``clamp`` is set, in which case they
    are clamped to the outermost centers (constant extension).
    """
    if isinstance(field, SpatialField):
        q = np.asarray(query, dtype=float)
        out = _interp_1d(field.axis.centers, field.values, q, clamp)
        return float(out) if np.isscalar(query) or q.ndim == 0 else out

    x, u = query
    xs = field.x_axis.centers
    us = field.u_axis.centers
    # interpolate along U for the two bracketing x columns, then along x
    x = float(x)
    u = float(u)
    if not clamp:
        if not (xs[0] - 1e-12 <= x <= xs[-1] + 1e-12 and us[0] - 1e-12 <= u <= us[-1] + 1e-12):
            raise ValueError("interpolation query outside axis range and clamping disabled")
    xq = np.clip(x, xs[0], xs[-1])
    j = min(int((xq - xs[0]) / field.x_axis.spacing), len(xs) - 2)
    w = (xq - xs[j]) / (xs[j + 1] - xs[j])
    col = (1 - w) * field.values[j] + w * field.values[j + 1]
    return float(_interp_1d(us, col, np.asarray(u), clamp=True))


def interp_columns(x_centers: np.ndarray, columns: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Interpolate each column k of ``columns[j, k]`` along x at ``queries[:, k]``.

    Out-of-range queries are clamped to the outermost columns (constant
    extension); used by the semi-Lagrangian CDF evaluation.
    """
    nq, nk = queries.shape
    out = np.empty((nq, nk))
    for k in range(nk):
        out[:, k] = np.interp(queries[:, k], x_centers, columns[:, k])
    return out


# ---------------------------------------------------------------------------
# integrals and PDF/CDF conversions


def state_integral(f: DensityField, spatial_index) -> float:
    """Midpoint-rule integral of f over all state axes at one spatial index."""
    if np.isscalar(spatial_index):
        spatial_index = (int(spatial_index),)
    sl = f.values[tuple(spatial_index)]
    return float(sl.sum() * f.grid.state_cell_volume)


def cdf_to_pdf(F: CdfField) -> DensityField:
    """Differentiate a CDF along U by central differences.

    Interior cells use the centered two-cell stencil, the end cells one-sided
    differences. Negative values (rounding-level for monotone input) are
    clipped to zero.
    """
    v = F.values
    du = F.u_axis.spacing
    f = np.empty_like(v)
    f[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2 * du)
    f[..., 0] = (v[..., 1] - v[..., 0]) / du
    f[..., -1] = (v[..., -1] - v[..., -2]) / du
    f = np.clip(f, 0.0, None)
    return DensityField(F.grid, f, F.time, eps_norm=1.0)


def pdf_to_cdf(f: DensityField) -> CdfField:
    """Cumulative midpoint sum of a single-state-axis density.

    The value at cell center U_k is the integral up to U_k: full cells below
    plus the half cell containing U_k. Clamped to [0, 1].
    """
    if len(f.grid.state_axes) != 1:
        raise ValueError("pdf_to_cdf requires a single state axis")
    du = f.u_axis.spacing
    cum = np.cumsum(f.values, axis=-1) * du
    F = cum - 0.5 * du * f.values
    return CdfField(f.grid, np.clip(F, 0.0, 1.0), f.time)


# ---------------------------------------------------------------------------
# plain-text column serialization

_FIELD_KIND = {"SpatialField": "spatial", "DensityField": "density", "CdfField": "cdf"}


def _axes_of(field) -> tuple[tuple[Axis, ...], tuple[Axis, ...]]:
    if isinstance(field, SpatialField):
        return (field.axis,), ()
    return field.grid.spatial_axes, field.grid.state_axes


def field_to_text(field) -> str:
    """Serialize a field to the plain-text column format.

    One header line carries the field kind, time and per-axis metadata
    (name, lo, hi, n); then one row per cell with the cell-center
    coordinates and the value, all at 15 significant digits.
    """
    sp, st = _axes_of(field)
    kind = _FIELD_KIND[type(field).__name__]
    head = [f"kind={kind}", f"time={field.time:.15g}", f"nspatial={len(sp)}"]
    for ax in sp + st:
        head.append(f"axis={ax.name or '_'}:{ax.lo:.15g}:{ax.hi:.15g}:{ax.n}")
    lines = ["# " + " ".join(head)]
    axes = sp + st
    grids = np.meshgrid(*[ax.centers for ax in axes], indexing="ij")
    vals = field.values if not isinstance(field, SpatialField) else field.values
    flat = [g.ravel() for g in grids] + [np.asarray(vals).ravel()]
    for row in zip(*flat):
        lines.append(" ".join(f"{x:.15g}" for x in row))
    return "\n".join(lines) + "\n"


def field_from_text(text: str):
    """Inverse of :func:`field_to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].lstrip("# ").split()
    meta = {}
    axes: list[Axis] = []
    for tok in head:
        key, _, val = tok.partition("=")
        if key == "axis":
            name, lo, hi, n = val.split(":")
            axes.append(Axis(float(lo), float(hi), int(n), "" if name == "_" else name))
        else:
            meta[key] = val
    kind = meta["kind"]
    time = float(meta["time"])
    n_sp = int(meta["nspatial"])
    shape = tuple(ax.n for ax in axes)
    vals = np.array([float(ln.split()[-1]) for ln in lines[1:]]).reshape(shape)
    if kind == "spatial":
        return SpatialField(axes[0], vals, time)
    grid = PhaseGrid(tuple(axes[:n_sp]), tuple(axes[n_sp:]))
    if kind == "density":
        return DensityField(grid, vals, time, eps_norm=1.0)
    return CdfField(grid, vals, time)
