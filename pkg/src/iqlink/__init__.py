"""Link-level simulation of uplink MU-MIMO OFDMA receivers under TX/RX I/Q
imbalance, with per-subcarrier and augmented (mirror-subcarrier) LMMSE and
MRC combining, analytic SINR decomposition, Monte Carlo SER and a flop-count
complexity model."""

from .analysis import (
    PowerDecomposition,
    SerResult,
    SinrReport,
    average_sinr,
    power_decomposition,
    qam_ser_awgn,
    ser_montecarlo,
    sinr,
    stream_mse,
    stream_powers,
    stream_sinr,
    trial_sinr,
)
from .combiners import (
    CombinerKind,
    CombinerWeights,
    SingularCovarianceError,
    augmented_lmmse_weights,
    combine,
    compute_weights,
    lmmse_weights,
    mrc_weights,
)
from .complexity import FlopModelInputs, chain_ratio, fft_flops, format_table2, table2
from .core import (
    EffectiveChannels,
    ImbalanceMode,
    InterfererConfig,
    IqBank,
    IqBranchParams,
    Side,
    SubcarrierScenario,
    UserConfig,
    effective_channels,
    iq_coeffs,
    irr_db,
    sample_imbalance,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    Metric,
    ResultTable,
    derive_trial_seed,
    emit_results,
    load_config,
    load_preset,
    parse_config,
    read_results,
    run_sweep,
)
from .scenarios import FixedScenario, ScenarioTemplate
from .signal import augment, covariance, rx_snapshot

__version__ = "0.1.0"

__all__ = [
    "augment",
    "augmented_lmmse_weights",
    "average_sinr",
    "chain_ratio",
    "combine",
    "CombinerKind",
    "CombinerWeights",
    "compute_weights",
    "ConfigError",
    "covariance",
    "derive_trial_seed",
    "effective_channels",
    "EffectiveChannels",
    "emit_results",
    "ExperimentConfig",
    "fft_flops",
    "FixedScenario",
    "FlopModelInputs",
    "format_table2",
    "ImbalanceMode",
    "InterfererConfig",
    "iq_coeffs",
    "IqBank",
    "IqBranchParams",
    "irr_db",
    "lmmse_weights",
    "load_config",
    "load_preset",
    "Metric",
    "mrc_weights",
    "parse_config",
    "power_decomposition",
    "PowerDecomposition",
    "qam_ser_awgn",
    "read_results",
    "ResultTable",
    "run_sweep",
    "rx_snapshot",
    "sample_imbalance",
    "ScenarioTemplate",
    "ser_montecarlo",
    "SerResult",
    "Side",
    "SingularCovarianceError",
    "sinr",
    "SinrReport",
    "stream_mse",
    "stream_powers",
    "stream_sinr",
    "SubcarrierScenario",
    "table2",
    "trial_sinr",
    "UserConfig",
]
