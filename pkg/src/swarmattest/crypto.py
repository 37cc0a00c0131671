"""Deterministic cryptographic primitives: keyed MAC, counter PRNG, memory measurement.

Everything here is replayable: the PRNG is a counter construction keyed by a
seed, so any (seed, step) pair always yields the same output. MAC and hash
primitives come from hashlib; tag and digest lengths are configurable and
default to 160 bits so message-size accounting matches the protocol's wire
format.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .errors import ConfigError

SUPPORTED_KEY_BITS = (128, 160, 256)

DEFAULT_KEY_BITS = 160
DEFAULT_TAG_BITS = 160
DEFAULT_DIGEST_BITS = 160
DEFAULT_HASH = "sha256"


@dataclass(frozen=True)
class SymKey:
    """Symmetric attestation key shared by all honest provers."""

    data: bytes

    def __post_init__(self) -> None:
        if not self.data:
            raise ConfigError("empty key")

    @property
    def bits(self) -> int:
        return len(self.data) * 8


@dataclass(frozen=True)
class PrngState:
    """Immutable state of the counter PRNG: (seed, step) fully determines the stream."""

    seed: bytes
    counter: int = 0


def mac_keygen(security_param: int, rng: "Prng") -> SymKey:
    """Draw a uniformly random key of ``security_param`` bits from the run RNG."""
    if security_param not in SUPPORTED_KEY_BITS:
        raise ConfigError(
            f"unsupported key length {security_param}, expected one of {SUPPORTED_KEY_BITS}"
        )
    return SymKey(rng.next_bytes(security_param // 8))


def mac_sign(key: SymKey, message: bytes, tag_bits: int = DEFAULT_TAG_BITS,
             algorithm: str = DEFAULT_HASH) -> bytes:
    """Keyed digest of ``message``, truncated to ``tag_bits``."""
    if tag_bits % 8 != 0 or tag_bits <= 0:
        raise ConfigError(f"tag length must be a positive multiple of 8 bits, got {tag_bits}")
    full = hmac.digest(key.data, message, algorithm)
    nbytes = tag_bits // 8
    if nbytes > len(full):
        raise ConfigError(f"{algorithm} cannot produce {tag_bits}-bit tags")
    return full[:nbytes]


def mac_verify(key: SymKey, tag: bytes, message: bytes, tag_bits: int = DEFAULT_TAG_BITS,
               algorithm: str = DEFAULT_HASH) -> bool:
    """Accept iff ``tag`` equals the tag of ``message`` under ``key``."""
    expected = mac_sign(key, message, tag_bits, algorithm)
    return hmac.compare_digest(expected, tag)


def prng_next(state: PrngState) -> tuple[int, PrngState]:
    """Advance the counter PRNG one step; returns (32-bit value, new state)."""
    block = hashlib.sha256(state.seed + state.counter.to_bytes(8, "little")).digest()
    value = int.from_bytes(block[:4], "little")
    return value, PrngState(state.seed, state.counter + 1)


def measure(region: bytes, digest_bits: int = DEFAULT_DIGEST_BITS,
            algorithm: str = DEFAULT_HASH) -> bytes:
    """Hash digest of an attested memory region, truncated to ``digest_bits``."""
    if not region:
        raise ValueError("cannot measure an empty memory region")
    full = hashlib.new(algorithm, region).digest()
    return full[: digest_bits // 8]


def derive_seed(master: bytes, *labels: object) -> bytes:
    """Domain-separated sub-seed so independent subsystems get independent streams."""
    h = hashlib.sha256(master)
    for label in labels:
        h.update(b"/" + str(label).encode())
    return h.digest()


class Prng:
    """Convenience wrapper advancing a PrngState in place.

    All simulation randomness (mobility, loss draws, adversary choices, key
    generation) flows through instances of this class so runs replay exactly.
    """

    def __init__(self, seed: bytes):
        self.state = PrngState(seed)

    def next_u32(self) -> int:
        value, self.state = prng_next(self.state)
        return value

    def next_bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self.next_u32().to_bytes(4, "little")
        return bytes(out[:n])

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * (self.next_u32() / 2**32)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n); n must fit comfortably below 2**32."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        # rejection sampling keeps the draw unbiased
        limit = (2**32 // n) * n
        while True:
            v = self.next_u32()
            if v < limit:
                return v % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]
