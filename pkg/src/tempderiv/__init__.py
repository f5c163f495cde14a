"""Calibration, simulation and Monte Carlo pricing of temperature derivatives."""

from .analysis import (
    PortfolioPosition,
    PortfolioRow,
    evaluate_portfolio,
    risk_aversion_sensitivity,
    shock_probability_scenario,
    size_hedge,
    volatility_sensitivity,
)
from .calibration import (
    JumpParams,
    MeanReversion,
    SeasonalMeanParams,
    TemperatureModel,
    VolatilityCurve,
    calibrate,
    compute_reference_temperature,
    compute_residuals,
    default_jump_params,
    estimate_kappa,
    evaluate_theta,
    fit_seasonal_mean,
    fit_volatility_spline,
)
from .diagnostics import ValidationReport, arch_lm, forecast_errors, ljung_box
from .indices import AccrualWindow, compute_cdd, compute_hdd, detect_events
from .ingest import (
    DailyTemperatureSeries,
    RawTemperatureRecord,
    aggregate_state,
    impute_gaps,
    parse_temperature_csv,
    remove_outliers,
    split_train_test,
)
from .pricing import ContractKind, ContractSpec, PricingResult, price_contract, put_call_decomposition
from .simulation import PathSet, SimulationConfig, sample_jump_schedule, simulate_paths

__version__ = "0.1.0"
