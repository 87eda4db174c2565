"""Transmit beamforming for a secondary MIMO link sharing spectrum with primary links.

The pipeline is: sample a network (:mod:`cogbeam.channel`), build the
beamforming QCQP for an interference model (:mod:`cogbeam.problem`), solve its
semidefinite relaxation (:mod:`cogbeam.sdp`) and recover a beamformer
(:mod:`cogbeam.extraction`).
"""
from .channel import NetworkConfig, NetworkRealization, Receiver, realize_network
from .config import ExperimentConfig, load_config, parse_config
from .errors import (CogbeamError, ConfigError, DegenerateReceiverError, ExtractionError, GeometryError,
                     SingularityError, UnsupportedDimensionError, ZeroSignalError)
from .extraction import (BeamformerResult, Provenance, extract_k1, extract_k2, randomized_round,
                         rank_one_decompose, solve_beamformer)
from .problem import InterferenceSpec, QcqpProblem, Scenario, build_qcqp
from .rng import SeededStream
from .sdp import SdpInstance, SdpSolution, SdpStatus, SdpTolerances, kkt_verify, slater_certificate, solve_sdp
from .sweep import SweepRecord, run_sweep, write_csv

__version__ = "0.1.0"

__all__ = [
    "NetworkConfig", "NetworkRealization", "Receiver", "realize_network",
    "ExperimentConfig", "load_config", "parse_config",
    "CogbeamError", "ConfigError", "DegenerateReceiverError", "ExtractionError", "GeometryError",
    "SingularityError", "UnsupportedDimensionError", "ZeroSignalError",
    "BeamformerResult", "Provenance", "extract_k1", "extract_k2", "randomized_round", "rank_one_decompose",
    "solve_beamformer", "InterferenceSpec", "QcqpProblem", "Scenario", "build_qcqp", "SeededStream",
    "SdpInstance", "SdpSolution", "SdpStatus", "SdpTolerances", "kkt_verify", "slater_certificate", "solve_sdp",
    "SweepRecord", "run_sweep", "write_csv",
]
