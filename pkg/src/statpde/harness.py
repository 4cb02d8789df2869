"""Experiment orchestration: configs, routes, metrics, reports.

A run evolves the statistics of one scenario to a target time along the
requested routes (Monte Carlo with kernel estimation, direct PDF transport,
exact or finite-volume CDF transport, the nonlocal PDF solver, and a
demonstrative two-point consistency route), aligns everything on the
scenario grid, and emits a metric table where every entry names the two
routes it compares. Reports are deterministic byte-for-byte given the same
config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields, replace
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .advect import CflError, check_cfl
from .ensemble import Ensemble, evolve_ensemble, sample_ensemble
from .evolve import (
    evolve_cdf_exact,
    evolve_cdf_fv,
    evolve_cdf_linear,
    evolve_pdf_linear,
    evolve_pdf_nonlocal,
)
from .fields import CdfField, DensityField, SpatialField, field_to_text, pdf_to_cdf
from .grids import Axis, PhaseGrid, single_point_grid
from .kde import KernelSpec, bandwidth_rule, kde, kde_columns, kernel_cdf_columns, rate_fit
from .multipoint import MultiPointDensity, evolve_two_point, marginalize
from .scenarios import Scenario, build_scenario

__all__ = [
    "ConfigError",
    "RunConfig",
    "Report",
    "parse_config",
    "l1_distance",
    "kolmogorov_distance",
    "moments",
    "run_experiment",
    "kde_rate_study",
]

ROUTES = ("cdf-exact", "cdf-fv", "mc-kde", "pdf-evolve", "pdf-nonlocal", "two-point")
METRIC_MARGIN = 2  # boundary cells excluded from comparison windows


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    t_final: float
    dt: float
    n_samples: int = 10_000
    seed: int = 0
    dx: float | None = None
    du: float | None = None
    kernel: str = "gaussian"
    bandwidth: float = 0.02
    routes: tuple[str, ...] = ("mc-kde",)
    outdir: str = "runs"

    def __post_init__(self) -> None:
        if self.t_final <= 0 or self.dt <= 0:
            raise ConfigError("t_final and dt must be positive")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")
        if self.dx is not None and self.dx <= 0 or self.du is not None and self.du <= 0:
            raise ConfigError("grid resolutions must be positive")
        bad = [r for r in self.routes if r not in ROUTES]
        if bad or not self.routes:
            raise ConfigError(f"unknown routes {bad}; valid: {', '.join(ROUTES)}")

    def echo(self) -> str:
        pairs = []
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            pairs.append(f"{f.name}={v}")
        return "\n".join(pairs)


_CONFIG_TYPES = {
    "scenario": str, "t_final": float, "dt": float, "n_samples": int, "seed": int,
    "dx": float, "du": float, "kernel": str, "bandwidth": float, "routes": str,
    "outdir": str,
}


def parse_config(text: str) -> RunConfig:
    """Parse the flat key=value config format; unknown keys are errors."""
    kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key or not val:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            kw[key] = _CONFIG_TYPES[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    if "routes" in kw:
        kw["routes"] = tuple(r.strip() for r in kw["routes"].split(",") if r.strip())
    for required in ("scenario", "t_final", "dt"):
        if required not in kw:
            raise ConfigError(f"missing required key {required!r}")
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# metrics


def _window(values: np.ndarray, margin: int = METRIC_MARGIN) -> np.ndarray:
    if margin == 0:
        return values
    sl = tuple(slice(margin, n - margin) for n in values.shape)
    return values[sl]


def l1_distance(a, b, margin: int = 0) -> float:
    """Grid L1 distance: sum |A - B| times the cell volume, identical grids."""
    ga = a.grid if hasattr(a, "grid") else None
    gb = b.grid if hasattr(b, "grid") else None
    if ga is None or gb is None:
        if a.axis != b.axis:
            raise ValueError("fields live on different axes")
        vol = a.axis.spacing
    else:
        if ga != gb:
            raise ValueError("fields live on different grids")
        vol = ga.cell_volume
    da = _window(np.asarray(a.values) - np.asarray(b.values), margin)
    return float(np.abs(da).sum() * vol)


def kolmogorov_distance(a: CdfField, b: CdfField, margin: int = 0) -> float:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(np.abs(_window(a.values - b.values, margin)).max())


def moments(obj) -> tuple[SpatialField, SpatialField]:
    """Per-x mean and variance of a statistics object.

    Densities use midpoint quadrature; CDFs use the tail identities
    E X = U_lo + int (1 - F) dU and E X^2 = U_lo^2 + int 2 U (1 - F) dU
    (the split-axis form evaluated in one pass); ensembles use sample
    statistics.
    """
    if isinstance(obj, Ensemble):
        mean = obj.values.mean(axis=0)
        var = obj.values.var(axis=0)
        return (SpatialField(obj.axis, mean, obj.time), SpatialField(obj.axis, var, obj.time))
    if isinstance(obj, DensityField):
        u = obj.u_axis.centers
        du = obj.u_axis.spacing
        mean = obj.values @ u * du
        second = obj.values @ (u * u) * du
        var = np.maximum(second - mean**2, 0.0)
        ax = obj.x_axis
        return (SpatialField(ax, mean, obj.time), SpatialField(ax, var, obj.time))
    if isinstance(obj, CdfField):
        u = obj.u_axis.centers
        du = obj.u_axis.spacing
        lo = obj.u_axis.lo
        one_minus = 1.0 - obj.values
        mean = lo + one_minus.sum(axis=-1) * du
        second = lo * lo + (one_minus @ (2.0 * u)) * du
        var = np.maximum(second - mean**2, 0.0)
        ax = obj.x_axis
        return (SpatialField(ax, mean, obj.time), SpatialField(ax, var, obj.time))
    raise TypeError(f"moments not defined for {type(obj).__name__}")


# ---------------------------------------------------------------------------
# routes


@dataclass
class RouteResult:
    name: str
    cdf: CdfField | None = None
    pdf: DensityField | None = None
    mean: SpatialField | None = None
    var: SpatialField | None = None
    extra_metrics: list[tuple[str, str, str, float]] = field(default_factory=list)

    def ensure_moments(self) -> None:
        if self.mean is None and self.pdf is not None:
            self.mean, self.var = moments(self.pdf)
        if self.mean is None and self.cdf is not None:
            self.mean, self.var = moments(self.cdf)


def _scenario_with_resolution(cfg: RunConfig) -> Scenario:
    scn = build_scenario(cfg.scenario)
    x_axis, u_axis = scn.x_axis, scn.u_axis
    if cfg.dx is not None:
        x_axis = Axis(x_axis.lo, x_axis.hi, max(2, round((x_axis.hi - x_axis.lo) / cfg.dx)), x_axis.name)
    if cfg.du is not None:
        u_axis = Axis(u_axis.lo, u_axis.hi, max(2, round((u_axis.hi - u_axis.lo) / cfg.du)), u_axis.name)
    return replace(scn, x_axis=x_axis, u_axis=u_axis)


def _max_speed(scn: Scenario) -> float:
    if scn.speed is not None:
        return float(np.max(np.abs(scn.speed(scn.x_axis.edges))))
    if scn.flux is not None:
        return float(np.max(np.abs(scn.flux.aprime(scn.u_axis.centers))))
    return 0.0


def _discretize_pdf(scn: Scenario, x_axis: Axis, u_axis: Axis) -> DensityField:
    vals = np.stack([scn.initial_pdf(x, u_axis) for x in x_axis.centers])
    grid = single_point_grid(x_axis, u_axis)
    return DensityField(grid, vals, 0.0)


def _discretize_cdf(scn: Scenario, x_axis: Axis, u_axis: Axis) -> CdfField:
    # cell-averaged sampling (edge-value mean): exact for the piecewise-linear
    # closed forms away from kinks and it halves point masses across their
    # cell, matching the convention of every sample-based route and making
    # midpoint-rule CDF moments atom-exact
    edges = u_axis.edges
    at_edges = scn.initial_cdf(x_axis.centers[:, None], edges[None, :])
    vals = 0.5 * (at_edges[:, :-1] + at_edges[:, 1:])
    return CdfField(single_point_grid(x_axis, u_axis), vals, 0.0)


def _run_route(name: str, cfg: RunConfig, scn: Scenario, kernel: KernelSpec) -> RouteResult:
    grid = single_point_grid(scn.x_axis, scn.u_axis)
    res = RouteResult(name)
    if name == "mc-kde":
        ens = sample_ensemble(scn, cfg.n_samples, cfg.seed)
        ens = evolve_ensemble(ens, scn, cfg.t_final, cfg.dt)
        res.cdf = CdfField(grid, kernel_cdf_columns(ens.values, kernel, scn.u_axis), cfg.t_final)
        if kernel.bandwidth >= 0.8 * scn.u_axis.spacing:
            # a kernel narrower than the state cells is not representable as
            # a grid density; the CDF estimate is still fine
            res.pdf = DensityField(grid, kde_columns(ens.values, kernel, scn.u_axis),
                                   cfg.t_final, eps_norm=0.05)
        res.mean, res.var = moments(ens)
    elif name == "pdf-evolve":
        if scn.speed is None:
            raise ConfigError("pdf-evolve applies to linear scenarios only")
        f0 = _discretize_pdf(scn, scn.x_axis, scn.u_axis)
        # measure-valued initial densities (single-cell spikes) keep their
        # per-slice mass exactly only under the monotone first-order scheme
        theta = None if scn.point_mass_initial else 1.0
        res.pdf = evolve_pdf_linear(f0, scn.speed, cfg.t_final, cfg.dt, theta=theta,
                                    bc=scn.boundary)
        res.cdf = pdf_to_cdf(res.pdf)
    elif name == "cdf-exact":
        if scn.flux is None:
            raise ConfigError("cdf-exact applies to convex-flux scenarios only")
        if scn.initial_cdf is None:
            raise ConfigError(f"scenario {scn.name!r} has no closed-form CDF")
        res.cdf = evolve_cdf_exact(scn.initial_cdf, scn.flux.aprime, cfg.t_final, grid)
    elif name == "cdf-fv":
        if scn.initial_cdf is None:
            raise ConfigError(f"scenario {scn.name!r} has no closed-form CDF")
        F0 = _discretize_cdf(scn, scn.x_axis, scn.u_axis)
        if scn.flux is not None:
            res.cdf = evolve_cdf_fv(F0, scn.flux.aprime, cfg.t_final, cfg.dt, bc=scn.boundary)
        else:
            res.cdf = evolve_cdf_linear(F0, scn.speed, cfg.t_final, cfg.dt, bc=scn.boundary)
    elif name == "pdf-nonlocal":
        if scn.flux is None:
            raise ConfigError("pdf-nonlocal applies to convex-flux scenarios only")
        f0 = _discretize_pdf(scn, scn.x_axis, scn.u_axis)
        res.pdf = evolve_pdf_nonlocal(f0, scn.flux, cfg.t_final, cfg.dt, bc=scn.boundary)
        res.cdf = pdf_to_cdf(res.pdf)
    elif name == "two-point":
        res.extra_metrics = _two_point_consistency(cfg, scn)
    else:  # pragma: no cover - guarded by RunConfig validation
        raise ConfigError(f"unknown route {name!r}")
    res.ensure_moments()
    return res


def _two_point_consistency(cfg: RunConfig, scn: Scenario) -> list[tuple[str, str, str, float]]:
    """Demonstrative two-point route on a coarsened grid.

    Builds the independent product of the one-point initial density with
    itself, transports it with the two-point solver, and reports the L1 gap
    between its first marginal and the directly evolved one-point density.
    """
    if scn.speed is None:
        raise ConfigError("two-point route applies to linear scenarios only")
    nx = min(scn.x_axis.n, 100)
    nu = min(scn.u_axis.n, 60)
    x_ax = Axis(scn.x_axis.lo, scn.x_axis.hi, nx, "x")
    y_ax = Axis(scn.x_axis.lo, scn.x_axis.hi, nx, "y")
    u_ax = Axis(scn.u_axis.lo, scn.u_axis.hi, nu, "U")
    v_ax = Axis(scn.u_axis.lo, scn.u_axis.hi, nu, "V")
    one = _discretize_pdf(scn, x_ax, u_ax)
    prod = np.einsum("ja,kb->jkab", one.values, one.values)
    f0 = MultiPointDensity(PhaseGrid((x_ax, y_ax), (u_ax, v_ax)), prod, 0.0)
    smax = float(np.max(np.abs(scn.speed(x_ax.edges))))
    dt = x_ax.spacing / max(smax, 1e-12) * 0.45
    steps = max(1, int(np.ceil(cfg.t_final / dt)))
    dt = cfg.t_final / steps
    two = evolve_two_point(f0, scn.speed, scn.speed, cfg.t_final, dt, bc=scn.boundary)
    marg = marginalize(two, (0,))
    direct = evolve_pdf_linear(one, scn.speed, cfg.t_final, dt, bc=scn.boundary)
    gap = l1_distance(marg, direct, margin=METRIC_MARGIN)
    return [("l1_marginal_consistency", "two-point", "pdf-evolve", gap)]


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Report:
    config: RunConfig
    metrics: tuple[tuple[str, str, str, float], ...]
    text: str
    files: tuple[str, ...]

    def metric(self, name: str, route_a: str, route_b: str) -> float:
        for m, a, b, v in self.metrics:
            if m == name and {a, b} == {route_a, route_b}:
                return v
        raise KeyError(f"no metric {name} for routes {route_a}, {route_b}")


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def run_experiment(cfg: RunConfig) -> Report:
    """Execute the requested routes, compare them pairwise, write artifacts."""
    scn = _scenario_with_resolution(cfg)
    check_cfl(cfg.dt, scn.x_axis.spacing, _max_speed(scn))
    kernel = KernelSpec(cfg.kernel, cfg.bandwidth)
    routes = sorted(set(cfg.routes))

    results: dict[str, RouteResult] = {}
    for name in routes:
        results[name] = _run_route(name, cfg, scn, kernel)

    metrics: list[tuple[str, str, str, float]] = []
    names = [n for n in routes if n != "two-point"]
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = results[a], results[b]
            if ra.cdf is not None and rb.cdf is not None:
                metrics.append(("l1_cdf", a, b, l1_distance(ra.cdf, rb.cdf, METRIC_MARGIN)))
                metrics.append(("kolmogorov", a, b,
                                kolmogorov_distance(ra.cdf, rb.cdf, METRIC_MARGIN)))
            if ra.mean is not None and rb.mean is not None:
                metrics.append(("l1_mean", a, b, l1_distance(ra.mean, rb.mean)))
                metrics.append(("l1_var", a, b, l1_distance(ra.var, rb.var)))
    for r in results.values():
        metrics.extend(r.extra_metrics)

    lines = [f"# run scenario={cfg.scenario} t_final={_fmt(cfg.t_final)}"]
    lines.append("[provenance]")
    lines.append(f"package-version={_pkg_version}")
    lines.append(f"numpy-version={np.__version__}")
    if cfg.t_final > scn.validity:
        lines.append("beyond-no-shock-horizon=true")
    lines.extend(cfg.echo().splitlines())
    lines.append("[metrics]")
    for m, a, b, v in metrics:
        lines.append(f"{m} routes={a}|{b} value={_fmt(v)}")
    text_files: list[tuple[str, str]] = []
    moment_cols: list[tuple[str, np.ndarray, np.ndarray]] = []
    for name in routes:
        r = results[name]
        if r.cdf is not None:
            text_files.append((f"cdf_{name}.txt", field_to_text(r.cdf)))
        if r.pdf is not None:
            text_files.append((f"pdf_{name}.txt", field_to_text(r.pdf)))
        if r.mean is not None:
            moment_cols.append((name, r.mean.values, r.var.values))
    if moment_cols:
        header = "x," + ",".join(f"mean_{n},var_{n}" for n, _, _ in moment_cols)
        rows = [header]
        xs = scn.x_axis.centers
        for j, x in enumerate(xs):
            cells = [f"{x:.12g}"]
            for _, mv, vv in moment_cols:
                cells.append(_fmt(mv[j]))
                cells.append(_fmt(vv[j]))
            rows.append(",".join(cells))
        text_files.append(("moments.csv", "\n".join(rows) + "\n"))
    lines.append("[files]")
    for fname, _ in text_files:
        lines.append(f"file={fname}")
    report_text = "\n".join(lines) + "\n"

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for fname, content in text_files:
        (outdir / fname).write_text(content)
    (outdir / "report.txt").write_text(report_text)

    return Report(cfg, tuple(metrics), report_text,
                  tuple(f for f, _ in text_files) + ("report.txt",))


# ---------------------------------------------------------------------------
# KDE convergence-rate study


def kde_rate_study(sample_counts=(1_000, 4_000, 16_000, 64_000), reps: int = 20,
                   beta: int = 2, alpha: float = 1.0, seed: int = 0,
                   eval_axis: Axis | None = None):
    """Sup-grid mean squared error of the KDE on a standard-normal target.

    Draws ``reps`` independent sample sets per N with the rate-optimal
    bandwidth, averages the pointwise squared error over repetitions, takes
    the grid supremum, and fits the log-log slope (theory: -2 beta/(2 beta + 1)).
    """
    ax = eval_axis if eval_axis is not None else Axis(-3.0, 3.0, 61, "y")
    pts = ax.centers
    target = np.exp(-0.5 * pts**2) / np.sqrt(2 * np.pi)
    errors = []
    for n in sample_counts:
        h = bandwidth_rule(n, beta, alpha)
        spec = KernelSpec("gaussian", h)
        mse = np.zeros(ax.n)
        for rep in range(reps):
            rng = np.random.default_rng([seed, n, rep])
            est = kde(rng.standard_normal(n), spec, ax)
            mse += (est - target) ** 2
        errors.append(float((mse / reps).max()))
    return rate_fit(sample_counts, errors)
