"""Spectrum-sharing radar precoding simulator.

Projection precoders steer a radar's probing waveform into the null space
(or a relaxed small-singular-value subspace) of the interference channel
toward a cluster of coordinating base stations; switched selection picks
the friendliest cluster each pulse repetition interval; zero-forcing and
MMSE precoders handle the cooperation downlink; metrics cover the
direction-estimation CRB, residual interference, and downlink BER.
"""

from .config import ConfigError, RunConfig, load_config, parse_config
from .estimation import (
    TrainingConfig,
    TrainingMatrix,
    design_training,
    estimate_channel,
    estimate_cluster_channel,
    estimated_composite,
)
from .matops import (
    SvdConvergenceError,
    SvdResult,
    default_rel_tol,
    derive_seed,
    frobenius_norm,
    hermitian,
    l2_norm,
    matmul,
    numeric_rank,
    random_complex_gaussian,
    svd,
)
from .metrics import (
    CrbInput,
    MetricRecord,
    coop_ber,
    crb_experiment,
    crb_theta,
    interference_norm,
)
from .precoders import (
    EmptyNullSpaceError,
    Precoder,
    WaveformBlock,
    ZfInfeasibleError,
    coherence_matrix,
    mmse_precoder,
    nsp_precoder,
    orthogonal_waveform,
    resolve_sigma_th,
    ssvsp_precoder,
    zf_precoder,
)
from .scenario import (
    CompositeChannel,
    CompTopology,
    RadarArray,
    Scenario,
    gen_cluster_channel,
    nullity,
    steering_derivative,
    steering_vector,
    uniform_topology,
)
from .selection import (
    NoFeasibleClusterError,
    PriCycleConfig,
    PriState,
    SelectionResult,
    run_pri_cycle,
    snsp_select,
    sssvsp_select,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "TrainingConfig",
    "TrainingMatrix",
    "design_training",
    "estimate_channel",
    "estimate_cluster_channel",
    "estimated_composite",
    "SvdConvergenceError",
    "SvdResult",
    "default_rel_tol",
    "derive_seed",
    "frobenius_norm",
    "hermitian",
    "l2_norm",
    "matmul",
    "numeric_rank",
    "random_complex_gaussian",
    "svd",
    "CrbInput",
    "MetricRecord",
    "coop_ber",
    "crb_experiment",
    "crb_theta",
    "interference_norm",
    "EmptyNullSpaceError",
    "Precoder",
    "WaveformBlock",
    "ZfInfeasibleError",
    "coherence_matrix",
    "mmse_precoder",
    "nsp_precoder",
    "orthogonal_waveform",
    "resolve_sigma_th",
    "ssvsp_precoder",
    "zf_precoder",
    "CompositeChannel",
    "CompTopology",
    "RadarArray",
    "Scenario",
    "gen_cluster_channel",
    "nullity",
    "steering_derivative",
    "steering_vector",
    "uniform_topology",
    "NoFeasibleClusterError",
    "PriCycleConfig",
    "PriState",
    "SelectionResult",
    "run_pri_cycle",
    "snsp_select",
    "sssvsp_select",
]
