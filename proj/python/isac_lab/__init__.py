"""Space-time-frequency ISAC bounds and estimators."""

from ._core import (
    SPEED_OF_LIGHT,
    Config,
    ConfigError,
    DegenerateGeometry,
    Error,
    PathGeometry,
    SingularGeometry,
    __version__,
    beta_ofdm,
    bound,
    crlb_sweep,
    crlb_sweep_csv,
    effective_bandwidth,
    fim_check,
    flat_comb_beta,
    heatmap,
    make_schedule,
    mse_vs_snr,
    path_geometry,
    run_cli,
    sigma_from_snr,
)

CSV_COLUMNS_HEAD = ("experiment", "estimator")
CSV_COLUMNS_TAIL = ("mse_pos", "mse_vel", "crlb_pos", "crlb_vel", "outage_rate", "trials", "seed")

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
