"""Motif-matching forecasters and a chaos forecasting benchmark."""

from .dynsys import (
    IntegrationDivergedError,
    SystemSpec,
    TimeSeries,
    add_gaussian_noise,
    estimate_lle_benettin,
    integrate_rk4,
    read_trajectory_csv,
    sample_trajectory,
    write_trajectory_csv,
)
from .experiments import (
    PowerLawFit,
    SweepResult,
    fit_power_law,
    invariant_convergence,
    run_sweep,
    scaling_study,
)
from .forecasters import (
    EmbedParams,
    ForecastResult,
    KernelParams,
    knn_forecast,
    markov_parrot,
    mean_baseline,
    naive_baseline,
    nw_forecast,
    parrot_forecast,
    simplex_projection,
    smap_forecast,
)
from .metrics import (
    MetricReport,
    correlation_dimension,
    hellinger_psd,
    kl_attractor,
    lyapunov_rosenstein,
    mae,
    mse,
    smape,
    valid_prediction_time,
    welch_psd,
)
from .systems import REGISTRY, get_system, list_systems

__version__ = "0.1.0"
