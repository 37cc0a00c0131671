"""Attacker behaviors injected into the event loop.

Three flavors, composable within a scenario:

* channel adversary: Dolev-Yao control of the radio; drops frames, replays
  captured broadcasts (also across epochs), and emits forged broadcasts. It
  never holds the shared attestation key, so forged tags are uniform random.
* software adversary: tampers the attested memory region of its victims at a
  chosen time. The protocol code and key live behind ROM/MPU, so victims keep
  running the protocol honestly and MAC their true (self-incriminating) state.
* mobile software adversary: compromised nodes that steer away from every
  honest node to stay out of radio range and remain Unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .bitmask import CellStatus, ObservationBitmask
from .crypto import Prng
from .netsim import Arena, NodePose
from .protocol import AttestationMessage


class InterceptAction(Enum):
    DELIVER = "deliver"
    DROP = "drop"
    REPLACE = "replace"


@dataclass
class Intercept:
    action: InterceptAction
    message: Optional[AttestationMessage] = None


@dataclass
class CapturedFrame:
    t_att: int
    message: AttestationMessage


class ChannelAdversary:
    """Realizes drop / replay / forge over every frame crossing the channel."""

    def __init__(self, drop_rate: float, replay: bool, forge: bool, rng: Prng):
        self.drop_rate = drop_rate
        self.replay = replay
        self.forge = forge
        self.rng = rng
        self.captured: list[CapturedFrame] = []

    def capture(self, msg: AttestationMessage) -> None:
        if self.replay:
            self.captured.append(CapturedFrame(msg.t_att, msg))

    def frame_dropped(self) -> bool:
        return self.drop_rate > 0 and self.rng.uniform() < self.drop_rate

    def intercept_query(self, msg: AttestationMessage) -> Intercept:
        """Interference with the verifier's pull: drop it, tamper it, or let it by."""
        if self.frame_dropped():
            return Intercept(InterceptAction.DROP)
        if self.forge and self.rng.uniform() < 0.5:
            tampered = AttestationMessage(msg.bitmask.copy(), msg.t_att, msg.t_stamp,
                                          self.rng.next_bytes(len(msg.tag)))
            return Intercept(InterceptAction.REPLACE, tampered)
        return Intercept(InterceptAction.DELIVER)

    def forge_message(self, n: int, claim_node: int, t_att: int,
                      t_stamp: int) -> AttestationMessage:
        """Whitewash attempt: claim ``claim_node`` healthy under a random tag."""
        mask = ObservationBitmask.all_unknown(n)
        mask.set_cell(claim_node, CellStatus.HEALTHY)
        return AttestationMessage(mask, t_att, t_stamp, self.rng.next_bytes(20))

    def pick_replay(self, current_t_att: int) -> Optional[CapturedFrame]:
        """Prefer frames captured in earlier epochs; they test freshness checks."""
        if not self.captured:
            return None
        stale = [c for c in self.captured if c.t_att != current_t_att]
        pool = stale if stale else self.captured
        return pool[self.rng.randrange(len(pool))]


@dataclass
class SoftwarePlan:
    victims: list[int]
    tamper_time_s: float


def soft_compromise(region: bytearray) -> None:
    """Flip a byte of the attested region so its measurement leaves the good set."""
    region[0] ^= 0xA5


@dataclass
class MobilePlan:
    victims: list[int] = field(default_factory=list)


def mob_evade(pose: NodePose, nearest_honest: tuple[float, float], max_speed: float,
              dt: float, arena: Arena) -> NodePose:
    """Steer directly away from the nearest honest node at top speed."""
    dx = pose.x - nearest_honest[0]
    dy = pose.y - nearest_honest[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        dx, dy, d = 1.0, 0.0, 1.0
    step = max_speed * dt
    pose.x, pose.y = arena.clamp(pose.x + step * dx / d, pose.y + step * dy / d)
    pose.wx, pose.wy = pose.x, pose.y
    pose.speed = max_speed
    return pose
