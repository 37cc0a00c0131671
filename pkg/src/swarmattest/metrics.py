"""Evaluation quantities: coverage, minimum coverage time, energy, static overheads.

Coverage C_X = Y means at least a fraction X of all provers each hold status
information about at least a fraction Y of the *reachable* population R
(provers that took part in the protocol at least once). The minimum coverage
time (MCT) for a target (X, Y) is the earliest time, measured from the
attestation instant, at which that holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .bitmask import ObservationBitmask
from .errors import ConfigError


def message_bits(n: int) -> int:
    """Wire size of one status broadcast: 2n bitmask bits plus 224 fixed bits."""
    if n < 1:
        raise ConfigError("network size must be >= 1")
    return 2 * n + 224


def memory_bits(key_bits: int, n: int, h_size: int) -> int:
    """Per-device state: shared key, 2n-bit bitmask, one 160-bit digest per good config."""
    if key_bits < 1 or n < 1 or h_size < 1:
        raise ConfigError("key_bits, n and h_size must all be >= 1")
    return key_bits + 2 * n + 160 * h_size


def message_payload_bytes(n: int) -> float:
    """Paper-exact byte count used for energy accounting: 28 + 2n/8."""
    return 28 + 2 * n / 8


def representativity(mask: ObservationBitmask) -> float:
    """Fraction of the network a snapshot actually reports: non-Unknown cells / n."""
    return mask.known_count() / mask.n


def coverage(states: Sequence[ObservationBitmask], reachable: set[int], x: float) -> float:
    """Largest Y such that at least ceil(x*n) provers know >= ceil(Y*|R|) reachable provers.

    Computed as the ceil(x*n)-th largest per-prover ratio of known reachable
    cells to |R|.
    """
    if not 0 < x <= 1:
        raise ConfigError(f"coverage fraction x must be in (0, 1], got {x}")
    if not reachable:
        raise ValueError("reachable set is empty; coverage is undefined")
    n = len(states)
    r = len(reachable)
    ratios = sorted(
        (sum(1 for j in reachable if mask.cell(j) != 0b11) / r for mask in states),
        reverse=True,
    )
    return ratios[math.ceil(x * n) - 1]


@dataclass(frozen=True)
class CoverageSample:
    t_us: int
    x: float
    y: float


def mct(series: Iterable[CoverageSample], x: float, y_target: float) -> Optional[int]:
    """Earliest sample time at which coverage for fraction ``x`` reaches ``y_target``.

    Returns None when the target is never attained within the series.
    """
    best = None
    for sample in series:
        if sample.x == x and sample.y >= y_target - 1e-12:
            if best is None or sample.t_us < best:
                best = sample.t_us
    return best


@dataclass
class EnergyConstants:
    """Per-operation energy costs. send/recv are per byte, the rest per operation.

    Defaults are placeholder magnitudes typical of low-power radios and MCUs;
    they scale results without affecting any protocol behavior.
    """

    e_send_uj_per_byte: float = 0.6
    e_recv_uj_per_byte: float = 0.67
    e_hmac_uj: float = 15.0
    e_min_uj: float = 0.0
    e_att_uj: float = 2000.0


@dataclass
class EnergyLedger:
    """Per-node operation counts; energy totals are constants times counts."""

    n: int
    constants: EnergyConstants
    msg_bytes: float
    sends: list[int] = field(init=False)
    recvs: list[int] = field(init=False)
    hmac_ops: list[int] = field(init=False)
    min_ops: list[int] = field(init=False)
    attests: list[int] = field(init=False)

    def __post_init__(self) -> None:
        self.sends = [0] * self.n
        self.recvs = [0] * self.n
        self.hmac_ops = [0] * self.n
        self.min_ops = [0] * self.n
        self.attests = [0] * self.n

    def node_total_uj(self, i: int) -> float:
        c = self.constants
        return (self.sends[i] * c.e_send_uj_per_byte * self.msg_bytes
                + self.recvs[i] * c.e_recv_uj_per_byte * self.msg_bytes
                + self.hmac_ops[i] * c.e_hmac_uj
                + self.min_ops[i] * c.e_min_uj
                + self.attests[i] * c.e_att_uj)

    def total_uj(self) -> float:
        return sum(self.node_total_uj(i) for i in range(self.n))


def energy_bound_uj(neighbor_counts: Sequence[int], attest_count: int, n: int,
                    constants: EnergyConstants) -> float:
    """Upper bound on one prover's energy from its broadcast-round trace.

    ``neighbor_counts`` holds |N_i(t) ∩ A(t)| for each round the prover
    broadcast in; per round the bound charges one MAC plus a send, and one
    MAC plus a receive per responsive neighbor. The bound presumes every
    neighbor's message of that round is actually received, so it is exact
    for round-synchronized lossless runs and an overestimate otherwise.
    """
    b = message_payload_bytes(n)
    c = constants
    per_round = sum(c.e_hmac_uj + c.e_send_uj_per_byte * b
                    + (c.e_hmac_uj + c.e_recv_uj_per_byte * b) * cnt
                    for cnt in neighbor_counts)
    return c.e_att_uj * attest_count + per_round


@dataclass
class MetricsLedger:
    """Everything a run reports: coverage, MCT, traffic counters, energy, outcome."""

    n: int
    t_att_us: Optional[int] = None
    reachable: set[int] = field(default_factory=set)
    coverage_series: list[CoverageSample] = field(default_factory=list)
    mct_us: dict[tuple[float, float], Optional[int]] = field(default_factory=dict)
    messages_sent: int = 0
    messages_delivered: int = 0
    frames_sent: int = 0
    bytes_sent: int = 0
    superseded: int = 0
    combines: int = 0
    rejections: dict[str, int] = field(default_factory=lambda: {
        "bad_mac": 0, "wrong_epoch": 0, "stale_timestamp": 0, "malformed": 0})
    forged_accepted: int = 0
    replayed_cross_epoch_accepted: int = 0
    energy: Optional[EnergyLedger] = None
    bound_neighbor_counts: list[list[int]] = field(default_factory=list)
    attest_rounds: int = 0
    final_classification: list[str] = field(default_factory=list)
    convergence_round: Optional[int] = None

    def counters_consistent(self) -> bool:
        return (self.frames_sent >= self.messages_sent
                and self.messages_delivered >= self.combines)


def classify_cells(mask: ObservationBitmask) -> list[str]:
    names = {0b00: "compromised", 0b10: "healthy", 0b11: "unknown"}
    return [names[int(mask.cell(j))] for j in range(mask.n)]


def compute_mct_from_events(count_events: Sequence[tuple[int, int, int]], n: int,
                            reachable: set[int], t_att_us: int,
                            targets: Sequence[tuple[float, float]],
                            ) -> dict[tuple[float, float], Optional[int]]:
    """Exact coverage-crossing times from the per-node known-count event trace.

    ``count_events`` holds (t_us, node, non-unknown cell count) records in
    time order; a node outside R contributes its own self cell to that count,
    which is discounted here since only reachable cells count toward Y.
    """
    if not reachable:
        return {t: None for t in targets}
    r = len(reachable)
    out: dict[tuple[float, float], Optional[int]] = {}
    for x, y in targets:
        k_needed = math.ceil(y * r) if y > 0 else 0
        nodes_needed = math.ceil(x * n)
        meeting = 0
        counts = [0] * n
        crossed = None
        if k_needed == 0:
            crossed = t_att_us
        else:
            for t_us, node, count in count_events:
                eff = count - (0 if node in reachable else 1)
                if counts[node] < k_needed <= eff:
                    meeting += 1
                    if meeting >= nodes_needed:
                        crossed = t_us
                        break
                counts[node] = eff
        out[(x, y)] = None if crossed is None else crossed - t_att_us
    return out


def sample_coverage_series(count_events: Sequence[tuple[int, int, int]], n: int,
                           reachable: set[int], t_att_us: int, t_end_us: int,
                           xs: Sequence[float], interval_us: int,
                           ) -> list[CoverageSample]:
    """Coverage time series on a fixed sampling grid, one value per requested X."""
    if not reachable:
        return []
    r = len(reachable)
    counts = [0] * n
    samples: list[CoverageSample] = []
    idx = 0
    events = list(count_events)
    t = t_att_us
    while t <= t_end_us:
        while idx < len(events) and events[idx][0] <= t:
            _, node, count = events[idx]
            counts[node] = count - (0 if node in reachable else 1)
            idx += 1
        ordered = sorted(counts, reverse=True)
        for x in xs:
            kth = ordered[math.ceil(x * n) - 1]
            samples.append(CoverageSample(t, x, kth / r))
        t += interval_us
    return samples
