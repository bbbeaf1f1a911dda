"""Validation and fidelity certification of stabilizer-state preparations."""

from ._accel import backend_name
from .certification import (
    CertificationReport,
    EBStopConfig,
    Method,
    certify,
    ebstop,
    f_min,
    hoeffding_interval,
    hoeffding_samples,
    worst_case_state,
)
from .circuits import (
    Circuit,
    CountTable,
    NoiseModel,
    apply_circuit,
    apply_noise,
    correct_readout,
    ghz_circuit_cnot,
    ghz_circuit_ion,
    sample_shots,
)
from .estimation import ExpectationEstimate, MeasurementSetting, expectation_from_counts, plan_settings
from .oracle import build_fidelity_lp, check_uniqueness_noiseless, dense_min_fidelity_check, solve_lp
from .pauli import PauliOperator, commutes, multiply, parse_pauli, to_dense
from .stabilizer import (
    GeneratorSet,
    eigenbasis_projector,
    enumerate_group,
    gf2_rank,
    ghz_generators,
    stabilizer_state_dense,
    validate_generators,
)

__version__ = "0.1.0"
