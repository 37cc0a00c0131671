"""Verifier-side query: fetch one prover's snapshot, validate it, classify all nodes.

The verifier listens for the chosen prover's next broadcast; here that is
modeled as pulling a freshly built (and freshly stamped) message at query
time, which carries identical content. The result is accepted (r=1) only if
the MAC verifies and the timestamp falls inside [t_att - slack, t_max].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import crypto
from .adversary import ChannelAdversary, InterceptAction
from .crypto import Prng, SymKey
from .errors import QueryFailedError
from .metrics import classify_cells, representativity
from .protocol import AttestationMessage, ProverState, build_message


@dataclass
class VerificationOutcome:
    r: int
    rho: float
    classification: list[str]
    queried_node: int
    t_query_us: int
    msg_t_att: Optional[int] = None
    flagged: list[int] = field(default_factory=list)


def verify_snapshot(key: SymKey, msg: AttestationMessage, window_low_s: int,
                    window_high_s: float) -> bool:
    if not crypto.mac_verify(key, msg.tag, msg.header_bytes()):
        return False
    return window_low_s <= msg.t_stamp <= window_high_s


def verify_query(provers: list[ProverState], in_range: list[int], t_query_us: int,
                 window_low_s: int, window_high_s: float, chooser: Prng,
                 channel: Optional[ChannelAdversary] = None,
                 conservative: bool = False) -> VerificationOutcome:
    """Query a uniformly chosen in-range prover and validate its snapshot.

    Raises QueryFailedError when nobody is in range or the pull is jammed;
    a snapshot that fails validation yields r=0 instead.
    """
    candidates = sorted(i for i in in_range if provers[i].has_attested())
    if not candidates:
        raise QueryFailedError(f"no attested prover in range at t={t_query_us}us")
    node = candidates[chooser.randrange(len(candidates))]
    msg = build_message(provers[node], t_query_us // 1_000_000)
    if channel is not None:
        hit = channel.intercept_query(msg)
        if hit.action is InterceptAction.DROP:
            raise QueryFailedError(f"query response to node {node} was jammed")
        if hit.action is InterceptAction.REPLACE:
            msg = hit.message

    if not verify_snapshot(provers[node].key, msg, window_low_s, window_high_s):
        return VerificationOutcome(0, 0.0, [], node, t_query_us)

    classes = classify_cells(msg.bitmask)
    flagged = [j for j, c in enumerate(classes) if c == "unknown"] if conservative else []
    return VerificationOutcome(1, representativity(msg.bitmask), classes, node,
                               t_query_us, msg_t_att=msg.t_att, flagged=flagged)
