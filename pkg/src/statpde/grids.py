"""Uniform grids over physical and state coordinates.

Everything in this package lives on uniform, cell-centered tensor grids:
an :class:`Axis` covers ``[lo, hi]`` with ``n`` cells of width
``(hi - lo)/n`` and stores values at cell centers ``lo + (k + 1/2)*dx``.
A :class:`PhaseGrid` is an ordered product of spatial axes (x, or x and y)
and state axes (U, or (U, V), or (U, C)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Axis", "PhaseGrid"]


@dataclass(frozen=True)
class Axis:
    """A uniform 1-D axis with ``n`` cells on ``[lo, hi]``.

    Cell centers sit at ``lo + (k + 1/2)*spacing``; cell edges (nodes) at
    ``lo + k*spacing`` for ``k = 0..n``.
    """

    lo: float
    hi: float
    n: int
    name: str = ""

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 2:
            raise ValueError(f"axis {self.name!r}: need at least 2 cells, got n={self.n}")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def centers(self) -> np.ndarray:
        dx = self.spacing
        return self.lo + dx * (np.arange(self.n) + 0.5)

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.spacing * np.arange(self.n + 1)

    def refined(self, factor: int = 2) -> "Axis":
        return Axis(self.lo, self.hi, self.n * factor, self.name)

    def contains(self, x: np.ndarray | float) -> np.ndarray | bool:
        return (np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid: spatial axes first, then state axes.

    Supported layouts are (x, U), (x, U, C), (x, y, U, V) and the general
    N-point layout (x_1..x_N, U_1..U_N) with N <= 3. Field arrays are
    indexed in the same order, spatial axes leading.
    """

    spatial_axes: tuple[Axis, ...]
    state_axes: tuple[Axis, ...]

    def __post_init__(self) -> None:
        if not self.spatial_axes or not self.state_axes:
            raise ValueError("PhaseGrid needs at least one spatial and one state axis")
        n_sp, n_st = len(self.spatial_axes), len(self.state_axes)
        ok = (n_sp == 1 and n_st in (1, 2)) or (n_sp == n_st and n_sp <= 3)
        if not ok:
            raise ValueError(f"unsupported axis layout: {n_sp} spatial, {n_st} state")

    @property
    def axes(self) -> tuple[Axis, ...]:
        return self.spatial_axes + self.state_axes

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def state_cell_volume(self) -> float:
        vol = 1.0
        for ax in self.state_axes:
            vol *= ax.spacing
        return vol

    @property
    def cell_volume(self) -> float:
        vol = self.state_cell_volume
        for ax in self.spatial_axes:
            vol *= ax.spacing
        return vol


def single_point_grid(x_axis: Axis, u_axis: Axis, c_axis: Axis | None = None) -> PhaseGrid:
    """Grid for one-point statistics: (x, U) or (x, U, C)."""
    state = (u_axis,) if c_axis is None else (u_axis, c_axis)
    return PhaseGrid((x_axis,), state)
