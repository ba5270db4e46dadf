"""optcorr: power-constrained correlator design for APD optical receivers.

Submodules:

* ``special_functions`` - monotone inversions behind the optimal waveforms
* ``signal_model``      - grids, waveforms, rates, gain laws, receiver config
* ``detector_design``   - FA/MD Chernoff exponents and optimal correlators
* ``delay_estimation``  - high-SNR delay-MSE design and noise-kernel solver
* ``montecarlo``        - independent simulator validating the analytic results
* ``cli``               - scenario-file driven command-line interface
"""

from .errors import DomainError, NumericError, OptcorrError
from .signal_model import (
    HBAR,
    GainModel,
    Grid,
    RateFunction,
    ReceiverConfig,
    SampledWaveform,
    first_derivative,
    gain_moments,
    normalize_power,
    pearson_correlation,
    raised_cosine_rate,
    rate_from_physical,
    second_derivative,
    tabulated_rate,
    two_level_rate,
)
from .special_functions import (
    DEFAULT_SETTINGS,
    InversionSettings,
    lambert_forward,
    lambert_p,
    lambert_p_log,
    p_zeta,
    p_zeta_forward,
    p_zeta_log,
)
from .detector_design import (
    DetectorDesign,
    ExponentCurve,
    curve_to_csv,
    dark_lagrangian_objective,
    dark_tradeoff_grid_search,
    design_detector,
    exponent_tradeoff_curve,
    fa_exponent,
    fa_exponent_dark,
    md_exponent_for_correlator,
    omf_correlator,
    solve_power_constant,
)
from .delay_estimation import (
    DelayLinearization,
    NoiseKernel,
    delay_design_csv,
    delay_mse,
    mse_closed_forms,
    nonwhite_optimal_correlator,
    optimal_delay_correlator,
    white_shot_kernel,
)
from .montecarlo import (
    MonteCarloReport,
    SimConfig,
    delay_experiment,
    detection_experiment,
    sample_arrivals,
    sample_gains,
    synthesize_signal,
    trial_rng,
    wilson_interval,
)

__all__ = [
    "HBAR",
    "DEFAULT_SETTINGS",
    "DelayLinearization",
    "DetectorDesign",
    "DomainError",
    "ExponentCurve",
    "GainModel",
    "Grid",
    "InversionSettings",
    "MonteCarloReport",
    "NoiseKernel",
    "NumericError",
    "OptcorrError",
    "RateFunction",
    "ReceiverConfig",
    "SampledWaveform",
    "SimConfig",
    "curve_to_csv",
    "dark_lagrangian_objective",
    "dark_tradeoff_grid_search",
    "delay_design_csv",
    "delay_experiment",
    "delay_mse",
    "design_detector",
    "detection_experiment",
    "exponent_tradeoff_curve",
    "fa_exponent",
    "fa_exponent_dark",
    "first_derivative",
    "gain_moments",
    "lambert_forward",
    "lambert_p",
    "lambert_p_log",
    "md_exponent_for_correlator",
    "mse_closed_forms",
    "nonwhite_optimal_correlator",
    "normalize_power",
    "omf_correlator",
    "optimal_delay_correlator",
    "p_zeta",
    "p_zeta_forward",
    "p_zeta_log",
    "pearson_correlation",
    "raised_cosine_rate",
    "rate_from_physical",
    "sample_arrivals",
    "sample_gains",
    "second_derivative",
    "solve_power_constant",
    "synthesize_signal",
    "tabulated_rate",
    "trial_rng",
    "two_level_rate",
    "white_shot_kernel",
    "wilson_interval",
]

__version__ = "0.1.0"
