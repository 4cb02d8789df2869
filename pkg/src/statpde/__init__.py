"""Evolution of pointwise solution statistics for 1-D hyperbolic PDEs with
random data, cross-validated against Monte Carlo ensembles."""

__version__ = "0.1.0"

from .advect import CflError
from .ensemble import (
    BernoulliHalf,
    ConvexFlux,
    Ensemble,
    GaussianLaw,
    LinearSpeed,
    PointMass,
    Uniform01,
    burgers_flux,
    evolve_ensemble,
    quantile_initial_data,
    sample_ensemble,
    shock_formation_time,
    solve_realization_conservation,
    solve_realization_linear,
)
from .evolve import (
    evolve_cdf_exact,
    evolve_cdf_fv,
    evolve_cdf_linear,
    evolve_pdf_linear,
    evolve_pdf_nonlocal,
    evolve_pdf_random_speed,
)
from .fields import (
    CdfField,
    DensityField,
    SpatialField,
    cdf_to_pdf,
    field_from_text,
    field_to_text,
    linear_interpolate,
    pdf_to_cdf,
    state_integral,
)
from .grids import Axis, PhaseGrid, single_point_grid
from .harness import (
    ConfigError,
    Report,
    RunConfig,
    kde_rate_study,
    kolmogorov_distance,
    l1_distance,
    moments,
    parse_config,
    run_experiment,
)
from .kde import KernelSpec, RateFit, bandwidth_rule, kde, kernel_cdf, rate_fit
from .multipoint import (
    MultiPointDensity,
    SourceSpec,
    evolve_n_point,
    evolve_two_point,
    evolve_two_point_sourced,
    marginalize,
    one_point_from_diagonal,
    wave_system_counterexample,
)
from .scenarios import (
    SCENARIO_NAMES,
    Scenario,
    build_scenario,
    initial_cdf_closed_form,
    initial_pdf_closed_form,
)
