import numpy as np
import pytest
from scipy.integrate import solve_ivp

from statpde.ensemble import (
    PointMass,
    burgers_flux,
    ensemble_to_text,
    evolve_ensemble,
    quantile_initial_data,
    sample_ensemble,
    shock_formation_time,
    solve_realization_conservation,
    solve_realization_linear,
)
from statpde.advect import CflError
from statpde.fields import SpatialField
from statpde.grids import Axis, single_point_grid
from statpde.scenarios import build_scenario


def ks_distance(samples, cdf) -> float:
    ys = np.sort(np.asarray(samples))
    n = ys.size
    F = cdf(ys)
    upper = np.abs(np.arange(1, n + 1) / n - F).max()
    lower = np.abs(np.arange(0, n) / n - F).max()
    return float(max(upper, lower))


class TestSampling:
    def test_deterministic(self):
        scn = build_scenario("shock-u")
        a = sample_ensemble(scn, 50, 123)
        b = sample_ensemble(scn, 50, 123)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.values, b.values)

    def test_shock_fields_match_formula(self):
        scn = build_scenario("shock-u")
        ens = sample_ensemble(scn, 3, 5)
        x = scn.x_axis.centers
        ramp = lambda y: np.clip(-2.0 * y - 0.5, -1.0, 0.0)
        profile = ramp(x - 0.5) + (ramp(x + 0.5) + 1.0)
        for i in range(3):
            assert np.allclose(ens.values[i], ens.samples[i] * profile, atol=1e-14)

    def test_degenerate_law_gives_zero_field(self):
        from dataclasses import replace
        scn = replace(build_scenario("linear-het-u"), param_law=PointMass(0.0))
        ens = sample_ensemble(scn, 1, 9)
        assert np.all(ens.values == 0.0)

    def test_uniform_law_ks_band(self):
        scn = build_scenario("linear-het-u")
        ens = sample_ensemble(scn, 100_000, 2024)
        # 99% Kolmogorov band for the uniform law is about 1.63/sqrt(N)
        assert ks_distance(ens.samples, lambda w: np.clip(w, 0, 1)) <= 0.006

    def test_requires_samples(self):
        with pytest.raises(ValueError):
            sample_ensemble(build_scenario("shock-u"), 0, 1)


class TestLinearRealization:
    def test_zero_speed_identity(self):
        ax = Axis(-1, 1, 50)
        u0 = SpatialField(ax, np.sin(np.pi * ax.centers))
        out = solve_realization_linear(u0, lambda x: 0.0 * x, 0.5, 0.01)
        assert np.array_equal(out.values, u0.values)
        assert out.time == 0.5

    def test_leftward_translation(self):
        # s = -1 means u(t, x) = u0(x + t); error is first order
        def err(nx):
            ax = Axis(-4.0, 4.0, nx)
            omega = 0.3
            u0 = SpatialField(ax, (1 + omega) * np.exp(-ax.centers**2))
            dt = 0.5 * ax.spacing
            steps = round(0.5 / dt)
            dt = 0.5 / steps
            out = solve_realization_linear(u0, lambda x: -1.0 + 0.0 * x, 0.5, dt)
            exact = (1 + omega) * np.exp(-((ax.centers + 0.5) ** 2))
            return np.abs(out.values - exact).sum() * ax.spacing

        e1, e2 = err(400), err(800)
        assert 1.5 <= e1 / e2 <= 2.8

    def test_heterogeneous_vs_characteristics_oracle(self):
        speed = lambda x: 0.1 * x**2 + 1.0
        u0_fun = lambda x: np.exp(-4.0 * x**2)
        t = 0.2

        def foot_points(xq):
            sol = solve_ivp(lambda tau, xi: -speed(xi), (0.0, t), xq,
                            rtol=1e-10, atol=1e-12, dense_output=False)
            return sol.y[:, -1]

        def err(nx):
            ax = Axis(-3.0, 4.0, nx)
            u0 = SpatialField(ax, u0_fun(ax.centers))
            dt = 0.4 * ax.spacing / 2.6
            steps = int(np.ceil(t / dt))
            out = solve_realization_linear(u0, speed, t, t / steps)
            exact = u0_fun(foot_points(ax.centers))
            return np.abs(out.values - exact).sum() * ax.spacing

        e1, e2 = err(350), err(700)
        assert 1.5 <= e1 / e2 <= 2.8

    def test_cfl_violation(self):
        ax = Axis(-1, 1, 50)
        u0 = SpatialField(ax, np.zeros(50))
        with pytest.raises(CflError):
            solve_realization_linear(u0, lambda x: 1.0 + 0.0 * x, 1.0, 10 * ax.spacing)

    def test_max_principle(self):
        scn = build_scenario("linear-het-u")
        ens = sample_ensemble(scn, 20, 11)
        out = evolve_ensemble(ens, scn, 0.2, 1e-3)
        assert out.values.min() >= ens.values.min() - 1e-12
        assert out.values.max() <= ens.values.max() + 1e-12

    def test_periodic_constant_speed_conservation(self):
        ax = Axis(-1.0, 1.0, 128)
        u0 = SpatialField(ax, np.exp(-8 * ax.centers**2))
        mass0 = u0.values.sum() * ax.spacing
        out = solve_realization_linear(u0, lambda x: 1.0 + 0.0 * x, 1.0, 0.005, bc="periodic")
        assert abs(out.values.sum() * ax.spacing - mass0) <= 1e-10 * mass0


class TestConservationRealization:
    def test_riemann_shock_speed(self):
        ax = Axis(-1.0, 2.0, 300)
        u0 = SpatialField(ax, np.where(ax.centers < 0, 1.0, 0.0))
        out = solve_realization_conservation(u0, burgers_flux(), 1.0, 0.002)
        crossing = ax.centers[np.argmin(np.abs(out.values - 0.5))]
        assert abs(crossing - 0.5) <= 2 * ax.spacing

    def test_shock_formation_time_prediction(self):
        scn = build_scenario("shock-u")
        omega = 0.7
        u0 = SpatialField(scn.x_axis, scn.initial_data(np.array([omega]), scn.x_axis.centers)[0])
        t1 = shock_formation_time(u0, scn.flux)
        assert abs(t1 - 1.0 / (2 * omega)) <= 3 * 0.0025
        # the right step of the v variant steepens at rate 2(1-w) instead
        scn_v = build_scenario("shock-v")
        v0 = SpatialField(scn_v.x_axis, scn_v.initial_data(np.array([omega]), scn.x_axis.centers)[0])
        t1v = shock_formation_time(v0, scn_v.flux)
        assert abs(t1v - 1.0 / (2 * omega)) <= 3 * 0.0025  # left step still governs

    def test_no_compression_never_shocks(self):
        ax = Axis(-2, 2, 100)
        u0 = SpatialField(ax, np.tanh(ax.centers))  # increasing data
        assert shock_formation_time(u0, burgers_flux()) == np.inf

    def test_merged_shocks_rest_at_origin(self):
        scn = build_scenario("shock-u")
        omega = 0.7
        u0 = SpatialField(scn.x_axis, scn.initial_data(np.array([omega]), scn.x_axis.centers)[0])
        t2 = 1.0 / omega
        for t in (1.6, 2.0):
            out = solve_realization_conservation(u0, scn.flux, t, 0.0025)
            jump_at = scn.x_axis.centers[np.argmax(-np.diff(out.values))]
            assert t > t2
            assert abs(jump_at) <= 2 * scn.x_axis.spacing


class TestEvolveEnsemble:
    def test_single_sample_matches_realization(self):
        scn = build_scenario("rarefaction-u")
        ens = sample_ensemble(scn, 1, 3)
        out = evolve_ensemble(ens, scn, 0.4, 0.0025)
        single = solve_realization_conservation(ens.field(0), scn.flux, 0.4, 0.0025)
        assert np.array_equal(out.values[0], single.values)

    def test_permutation_invariance(self):
        scn = build_scenario("linear-het-u")
        ens = sample_ensemble(scn, 64, 17)
        out = evolve_ensemble(ens, scn, 0.05, 1e-3)
        perm = np.random.default_rng(0).permutation(64)
        from statpde.ensemble import Ensemble
        shuffled = Ensemble(ens.axis, ens.samples[perm], ens.values[perm], ens.seed, ens.time)
        out_shuffled = evolve_ensemble(shuffled, scn, 0.05, 1e-3)
        assert np.array_equal(out_shuffled.values[np.argsort(perm)], out.values)

    def test_blocking_invariance(self):
        scn = build_scenario("linear-het-u")
        ens = sample_ensemble(scn, 64, 17)
        a = evolve_ensemble(ens, scn, 0.05, 1e-3, block=7)
        b = evolve_ensemble(ens, scn, 0.05, 1e-3, block=64)
        assert np.array_equal(a.values, b.values)

    def test_mean_translates_for_constant_speed(self):
        from dataclasses import replace
        scn = build_scenario("linear-het-u")
        scn = replace(scn, speed=lambda x: 1.0 + 0.0 * x)
        ens = sample_ensemble(scn, 400, 23)
        out = evolve_ensemble(ens, scn, 0.2, 1e-3)
        mean0 = ens.values.mean(axis=0)
        f = SpatialField(scn.x_axis, mean0)
        translated = solve_realization_linear(f, lambda x: 1.0 + 0.0 * x, 0.2, 1e-3)
        assert np.abs(out.values.mean(axis=0) - translated.values).max() <= 1e-12


class TestQuantileReduction:
    def test_identity_cdf(self):
        grid = single_point_grid(Axis(0, 1, 3, "x"), Axis(0.0, 1.0, 500, "U"))
        scn = quantile_initial_data(lambda x, u: np.broadcast_to(np.clip(u, 0, 1),
                                                                 np.broadcast_shapes(np.shape(x), np.shape(u))),
                                    grid)
        omega = np.array([0.1, 0.5, 0.93])
        vals = scn.initial_data(omega, grid.spatial_axes[0].centers)
        assert np.abs(vals - omega[:, None]).max() <= grid.state_axes[0].spacing

    def test_point_mass_cdf(self):
        a = 0.37
        grid = single_point_grid(Axis(0, 1, 2, "x"), Axis(0.0, 1.0, 1000, "U"))
        scn = quantile_initial_data(lambda x, u: ((u >= a) + 0.0 * x).astype(float), grid)
        vals = scn.initial_data(np.array([0.01, 0.5, 0.99]), grid.spatial_axes[0].centers)
        assert np.abs(vals - a).max() <= grid.state_axes[0].spacing

    def test_pushforward_ks(self):
        scn_src = build_scenario("linear-het-u")
        x0 = -1.0  # bump center: the law there is uniform on [0, 1]
        grid = single_point_grid(Axis(x0 - 0.01, x0 + 0.01, 2, "x"),
                                 Axis(-0.2, 1.2, 2000, "U"))
        scn = quantile_initial_data(lambda x, u: scn_src.initial_cdf(x0 + 0.0 * (x + u), u), grid)
        ens = sample_ensemble(scn, 100_000, 77)
        samples = ens.values[:, 0]
        cdf = lambda y: np.asarray(scn_src.initial_cdf(np.full_like(y, x0), y))
        assert ks_distance(samples, cdf) <= 0.006

    def test_non_monotone_rejected(self):
        grid = single_point_grid(Axis(0, 1, 2, "x"), Axis(0, 1, 50, "U"))
        bad = lambda x, u: np.broadcast_to(np.sin(6 * u), np.broadcast_shapes(np.shape(x), np.shape(u)))
        with pytest.raises(ValueError, match="nondecreasing"):
            quantile_initial_data(bad, grid)


def test_ensemble_serialization_header():
    scn = build_scenario("shock-u")
    ens = sample_ensemble(scn, 2, 4)
    text = ensemble_to_text(ens)
    assert text.startswith("# ensemble n=2 seed=4")
    assert text.count("omega ") == 2
    assert text.count("kind=spatial") == 2
