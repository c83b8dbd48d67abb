"""Chua-circuit reservoir computer laboratory.

A driven chaotic ODE kernel with a piecewise-linear diode, a
time-multiplexed input/output pipeline with a trainable linear readout, a
toy learning-with-errors cryptosystem as the target workload, and a
benchmark/sweep harness.
"""

from .circuit import (
    DEFAULT_INITIAL_STATE,
    ChuaParams,
    CircuitState,
    DiodePwl,
    DriveSignal,
    NoiseSpec,
    Trace,
    bifurcation_scan,
    derivatives,
    diode_current,
    inject_noise,
    integrate,
    kennedy_circuit,
    power_spectrum,
    snr_db,
)
from .config import ExperimentConfig, config_digest, default_config, parse_config
from .errors import (
    ChuaRcError,
    ConfigurationError,
    GenerationError,
    InputDomainError,
    IntegrationError,
    LayoutError,
    MetricError,
    NoSignalError,
)
from .experiment import (
    MetricsReport,
    SweepGrid,
    axis_values,
    classification_surface,
    load_weight,
    run_experiment,
    run_sweep,
    save_weight,
)
from .lwe import (
    Ciphertext,
    GaussianErrors,
    LweParams,
    LweTestCase,
    PublicKey,
    UniformErrors,
    decrypt_bit,
    encrypt_bit,
    generate_testcases,
    keygen,
    multibit_decrypt,
    multibit_encrypt,
)
from .pipeline import (
    Mask,
    ReadoutWeight,
    ReservoirConfig,
    StateMatrix,
    demultiplex,
    envelope_extract,
    make_mask,
    modulate,
    multiplex,
    nmse,
    normalize,
    nrmse,
    predict,
    run_case,
    sample_hold,
    train_readout,
)
from .tasks import (
    Dataset,
    TaskSpec,
    build_dataset,
    classify,
    concentric_circles,
    decision_surface,
    modulo_teacher,
    pair_teachers,
    polynomial_teacher,
    split_dataset,
)

__version__ = "0.1.0"
