"""Observation bitmask: one 2-bit status cell per prover, fused by bitwise AND.

Cell codes (unsigned 2-bit values):

    COMPROMISED = 00   responsive prover with a bad configuration
    HEALTHY     = 10   responsive prover with a good configuration
    UNKNOWN     = 11   prover nobody has heard from yet

Code 01 is never produced by honest nodes; any message containing it is
rejected whole. Over {00, 10, 11} the bitwise AND of two cells equals their
unsigned minimum, so fusing two observations is a single AND over the packed
words. Cell ``j`` occupies bits [2j, 2j+1] of the packed integer (cell index
order, little-endian bit numbering), which is also the wire layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import MalformedMessageError, ProtocolError


class CellStatus(IntEnum):
    COMPROMISED = 0b00
    HEALTHY = 0b10
    UNKNOWN = 0b11


VALID_CELLS = frozenset(CellStatus)
_INVALID_CELL = 0b01


@lru_cache(maxsize=None)
def _lo_mask(n: int) -> int:
    """Integer with the low bit of each of n cells set: 0b...010101."""
    return ((1 << (2 * n)) - 1) // 3


@dataclass
class ObservationBitmask:
    """Packed 2n-bit view of the network's attestation status."""

    n: int
    packed: int = 0

    @classmethod
    def all_unknown(cls, n: int) -> "ObservationBitmask":
        if n < 1:
            raise ProtocolError("bitmask needs at least one cell")
        return cls(n, (1 << (2 * n)) - 1)

    @classmethod
    def from_cells(cls, cells: Sequence[int]) -> "ObservationBitmask":
        packed = 0
        for j, cell in enumerate(cells):
            if cell not in VALID_CELLS:
                raise MalformedMessageError(f"invalid cell value {cell:#04b} at index {j}")
            packed |= int(cell) << (2 * j)
        return cls(len(cells), packed)

    @property
    def bits(self) -> int:
        return 2 * self.n

    def cell(self, j: int) -> CellStatus:
        return CellStatus((self.packed >> (2 * j)) & 0b11)

    def set_cell(self, j: int, value: CellStatus) -> None:
        self.packed = (self.packed & ~(0b11 << (2 * j))) | (int(value) << (2 * j))

    def cells(self) -> list[CellStatus]:
        return [self.cell(j) for j in range(self.n)]

    def has_invalid_cell(self) -> bool:
        """True if any cell holds the reserved 01 code."""
        lo = _lo_mask(self.n)
        return bool(self.packed & ~(self.packed >> 1) & lo)

    def known_count(self) -> int:
        """Number of cells that are not UNKNOWN."""
        lo = _lo_mask(self.n)
        unknown = self.packed & (self.packed >> 1) & lo
        return self.n - unknown.bit_count()

    def copy(self) -> "ObservationBitmask":
        return ObservationBitmask(self.n, self.packed)

    def to_bytes(self) -> bytes:
        """Cells packed 2 bits each in index order, little-endian, zero padded."""
        return self.packed.to_bytes((self.bits + 7) // 8, "little")

    @classmethod
    def from_bytes(cls, data: bytes, n: int) -> "ObservationBitmask":
        if len(data) != (2 * n + 7) // 8:
            raise MalformedMessageError(f"bitmask for n={n} needs {(2*n+7)//8} bytes, got {len(data)}")
        packed = int.from_bytes(data, "little")
        if packed >> (2 * n):
            raise MalformedMessageError("nonzero padding bits in bitmask")
        return cls(n, packed)


def combine(own: ObservationBitmask,
            received: Iterable[ObservationBitmask]) -> ObservationBitmask:
    """Elementwise minimum of own and received observations (one AND per input).

    Raises ProtocolError on a cell-count mismatch and MalformedMessageError if
    any input carries a 01 cell; honest senders never emit either.
    """
    if own.has_invalid_cell():
        raise MalformedMessageError("own bitmask contains a 01 cell")
    packed = own.packed
    for mask in received:
        if mask.n != own.n:
            raise ProtocolError(f"bitmask length mismatch: {mask.n} cells vs {own.n}")
        if mask.has_invalid_cell():
            raise MalformedMessageError("received bitmask contains a 01 cell")
        packed &= mask.packed
    return ObservationBitmask(own.n, packed)
