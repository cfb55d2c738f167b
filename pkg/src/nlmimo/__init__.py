"""Nonlinear LNA distortion in the massive MIMO uplink.

Analytic machinery (orthogonal-polynomial amplifier models, cyclostationary
distortion kernels, array-gain case studies, effective-SINR bounds) next to
an oversampled waveform simulator that serves as its brute-force oracle.
"""

from .amplifier import (
    GAN_P1DB,
    HermiteCoefficients,
    PassbandPolynomial,
    PolynomialModel,
    baseband_eval,
    decompose,
    desensitization_curve,
    gan_reference_model,
    hermite_at_power,
    hermite_to_polynomial,
    model_from_json,
    model_to_json,
    one_db_compression_power,
    passband_eval,
    passband_to_baseband,
)
from .analysis import (
    DistortionAutocorrelation,
    FrequencyIndexSets,
    SinrEntry,
    case_multiuser,
    case_one_user_one_blocker,
    distortion_cross_correlation_general,
    effective_sinr,
    error_autocorrelation,
    fixed_gain_sinr,
    gain_loss_rho,
    los_mrc_error_autocorrelation,
    nu_index,
    term_census,
    third_degree_spatial_correlation,
    ucd_model,
)
from .channel import (
    DeviationModel,
    MultipathScenario,
    UlaLosScenario,
    array_gain,
    array_gain_envelope,
    composite_channel,
    draw_cluster_geometry,
    draw_deviated_gains,
    draw_multipath_channel,
    expected_deviation_gain,
    los_channel,
    mrc_weights,
    scenario_from_json,
)
from .hermite import (
    BasisChangeTable,
    OddHermiteSeries,
    basis_change,
    eval_ito_hermite,
    eval_odd_hermite,
    gaussian_autocorrelation_transform,
    gaussian_crosscorrelation_transform,
)
from .pulses import (
    AmbiguityTable,
    PulseSpec,
    aggregate_pulse,
    ambiguity_functions,
    cycle_coefficients,
    rrc_pulse,
    third_degree_pulses,
)
from .simulate import (
    RealizationResult,
    SimConfig,
    decode_and_estimate,
    empirical_error_autocorrelation,
    rate_vs_antennas,
    run_realizations,
)

__version__ = "0.1.0"
