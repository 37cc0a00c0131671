"""Prover state machine: self-attestation, message codec, consensus update.

Wire format of a status broadcast, as one little-endian bit stream (bit k of
the stream is bit k of the packed integer; bytes are emitted little-endian):

    bitmask   2n bits   one 2-bit cell per prover, cell index order
    t_stamp   32 bits   send time, whole seconds since scenario start
    t_att     32 bits   attestation epoch time, whole seconds
    tag      160 bits   MAC over the preceding 2n + 64 bits (zero-padded
                        to whole bytes), keyed with the shared attestation key

Total: 2n + 224 bits; the byte encoding pads the final byte with zeros and a
decoder rejects nonzero padding. Binding t_att under the MAC ties a message
to its epoch, which is what defeats cross-epoch replays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import crypto
from .bitmask import CellStatus, ObservationBitmask, combine
from .crypto import PrngState, SymKey
from .errors import ConfigError, MalformedMessageError, ProtocolError

TAG_BITS = crypto.DEFAULT_TAG_BITS
_U32 = 2**32


def wire_bits(n: int) -> int:
    """Exact serialized size of a status broadcast for an n-prover network."""
    return 2 * n + 64 + TAG_BITS


def wire_bytes(n: int) -> int:
    return (wire_bits(n) + 7) // 8


@dataclass
class AttestationMessage:
    bitmask: ObservationBitmask
    t_att: int
    t_stamp: int
    tag: bytes

    def header_bytes(self) -> bytes:
        """The MAC'd portion: bitmask, then t_stamp, then t_att."""
        return _pack_header(self.bitmask, self.t_stamp, self.t_att)


def _pack_header(bitmask: ObservationBitmask, t_stamp: int, t_att: int) -> bytes:
    for name, value in (("t_stamp", t_stamp), ("t_att", t_att)):
        if not 0 <= value < _U32:
            raise ProtocolError(f"{name} out of 32-bit range: {value}")
    nbits = 2 * bitmask.n
    header = bitmask.packed | t_stamp << nbits | t_att << (nbits + 32)
    return header.to_bytes((nbits + 64 + 7) // 8, "little")


def encode_message(msg: AttestationMessage) -> bytes:
    nbits = 2 * msg.bitmask.n
    stream = (msg.bitmask.packed
              | msg.t_stamp << nbits
              | msg.t_att << (nbits + 32)
              | int.from_bytes(msg.tag, "little") << (nbits + 64))
    return stream.to_bytes(wire_bytes(msg.bitmask.n), "little")


def decode_message(data: bytes, n: int) -> AttestationMessage:
    """Parse and structurally validate a wire message (padding, cell codes)."""
    if len(data) != wire_bytes(n):
        raise MalformedMessageError(f"expected {wire_bytes(n)} bytes for n={n}, got {len(data)}")
    stream = int.from_bytes(data, "little")
    if stream >> wire_bits(n):
        raise MalformedMessageError("nonzero padding bits")
    nbits = 2 * n
    mask = ObservationBitmask(n, stream & ((1 << nbits) - 1))
    if mask.has_invalid_cell():
        raise MalformedMessageError("bitmask contains a 01 cell")
    t_stamp = (stream >> nbits) & (_U32 - 1)
    t_att = (stream >> (nbits + 32)) & (_U32 - 1)
    tag = ((stream >> (nbits + 64)) & ((1 << TAG_BITS) - 1)).to_bytes(TAG_BITS // 8, "little")
    return AttestationMessage(mask, t_att, t_stamp, tag)


def next_attestation_time(prng: PrngState, current_t_att: int,
                          delta_t_max: int) -> tuple[int, PrngState]:
    """Next shared attestation time: current + gap, 0 < gap <= delta_t_max seconds.

    Every prover holds an identical PRNG state, so all compute the same time.
    """
    if delta_t_max <= 0:
        raise ConfigError("delta_t_max must be positive")
    value, state = crypto.prng_next(prng)
    return current_t_att + 1 + value % delta_t_max, state


@dataclass
class AttestationSchedule:
    """Shared pseudo-random sequence of attestation times."""

    prng: PrngState
    delta_t_max: int
    next_t_att: int = field(init=False)

    def __post_init__(self) -> None:
        self.next_t_att, self.prng = next_attestation_time(self.prng, 0, self.delta_t_max)

    def advance(self) -> int:
        """Consume the pending time and schedule the following one."""
        current = self.next_t_att
        self.next_t_att, self.prng = next_attestation_time(self.prng, current, self.delta_t_max)
        return current


@dataclass
class ValidityWindow:
    """Freshness bounds on a received timestamp: [t_att - past_slack, now]."""

    past_slack: int


@dataclass
class ProverState:
    id: int
    n: int
    key: SymKey
    good_configs: frozenset
    schedule: AttestationSchedule
    region: bytearray
    bitmask: ObservationBitmask = field(init=False)
    self_result: Optional[int] = None
    current_t_att: Optional[int] = None
    epoch: int = 0

    def __post_init__(self) -> None:
        self.bitmask = ObservationBitmask.all_unknown(self.n)

    @property
    def next_t_att(self) -> int:
        return self.schedule.next_t_att

    def has_attested(self) -> bool:
        return self.current_t_att is not None


def self_attest(state: ProverState, now: int) -> ProverState:
    """Measure the attested region and open a fresh observation epoch at ``now``.

    The own cell becomes HEALTHY or COMPROMISED by checking the measurement
    against the provisioned good-configuration set; every other cell resets
    to UNKNOWN because a new epoch is a new snapshot.
    """
    digest = crypto.measure(bytes(state.region))
    state.self_result = 1 if digest in state.good_configs else 0
    state.bitmask = ObservationBitmask.all_unknown(state.n)
    state.bitmask.set_cell(state.id,
                           CellStatus.HEALTHY if state.self_result else CellStatus.COMPROMISED)
    state.current_t_att = now
    state.epoch += 1
    state.schedule.advance()
    return state


def build_message(state: ProverState, now: int) -> AttestationMessage:
    """MAC'd snapshot of the prover's current observation, stamped ``now``."""
    if not state.has_attested():
        raise ProtocolError(f"prover {state.id} has not attested yet")
    header = _pack_header(state.bitmask, now, state.current_t_att)
    tag = crypto.mac_sign(state.key, header)
    return AttestationMessage(state.bitmask.copy(), state.current_t_att, now, tag)


def handle_message(state: ProverState, msg: AttestationMessage, now: int,
                   window: ValidityWindow) -> Optional[str]:
    """Validate a received broadcast and fuse it into the local observation.

    Returns None when the message was accepted, otherwise the rejection cause:
    'bad_mac', 'wrong_epoch', 'stale_timestamp' or 'malformed'. Rejection
    leaves the state untouched; the protocol stays silent about it.
    """
    if msg.bitmask.n != state.n:
        return "malformed"
    if not crypto.mac_verify(state.key, msg.tag, msg.header_bytes()):
        return "bad_mac"
    if not state.has_attested() or msg.t_att != state.current_t_att:
        return "wrong_epoch"
    if not state.current_t_att - window.past_slack <= msg.t_stamp <= now:
        return "stale_timestamp"
    if msg.bitmask.has_invalid_cell():
        return "malformed"
    state.bitmask = combine(state.bitmask, [msg.bitmask])
    return None
