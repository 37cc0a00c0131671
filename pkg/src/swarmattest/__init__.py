"""Minimum-consensus collective attestation for dynamic device swarms.

A protocol library plus a deterministic discrete-event simulator: nodes
self-attest at shared pseudo-random times, gossip 2-bit status observations
fused by bitwise AND (elementwise minimum), and a verifier can pull the
network's status snapshot from any single node.
"""

from .bitmask import CellStatus, ObservationBitmask, combine
from .config import ScenarioConfig, from_dict, parse_config
from .crypto import Prng, PrngState, SymKey, mac_keygen, mac_sign, mac_verify, measure, prng_next
from .engine import Engine, RunResult, run_scenario
from .errors import ConfigError, MalformedMessageError, ProtocolError, QueryFailedError
from .metrics import (CoverageSample, EnergyConstants, MetricsLedger, coverage,
                      mct, memory_bits, message_bits, representativity)
from .protocol import (AttestationMessage, AttestationSchedule, ProverState,
                       ValidityWindow, build_message, decode_message, encode_message,
                       handle_message, next_attestation_time, self_attest, wire_bits,
                       wire_bytes)
from .verifier import VerificationOutcome, verify_query

__version__ = "0.1.0"

__all__ = [
    "AttestationMessage", "AttestationSchedule", "CellStatus", "ConfigError",
    "CoverageSample", "Engine", "EnergyConstants", "MalformedMessageError",
    "MetricsLedger", "ObservationBitmask", "Prng", "PrngState", "ProtocolError",
    "ProverState", "QueryFailedError", "RunResult", "ScenarioConfig", "SymKey",
    "ValidityWindow", "VerificationOutcome", "build_message", "combine", "coverage",
    "decode_message", "encode_message", "from_dict", "handle_message", "mac_keygen",
    "mac_sign", "mac_verify", "mct", "measure", "memory_bits", "message_bits",
    "next_attestation_time", "parse_config", "prng_next", "representativity",
    "run_scenario", "self_attest", "verify_query", "wire_bits", "wire_bytes",
]
