"""Naive spanning-tree MAC-aggregation baseline for static-tree comparisons.

A deliberately simple reference point, not a reimplementation of any richer
aggregate-signature protocol: the root floods a query down a complete tree,
every node self-attests on receipt, and reports travel back up with each hop
re-MAC'd by the parent after verifying its children one at a time. The
completion time is when the root finishes folding in its last child.

Per-hop costs reuse the simulator's constants: one hash delay to sign, the
frame transmission time, and one hash delay to verify. Reports are the same
size as a consensus broadcast; queries fit one frame.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ScenarioConfig
from .errors import ConfigError
from .netsim import RadioModel
from .protocol import wire_bytes


@dataclass
class BaselineResult:
    n: int
    branching: int
    completion_us: int


def run_tree_baseline(cfg: ScenarioConfig) -> BaselineResult:
    if cfg.topology.kind != "static_tree":
        raise ConfigError("the tree-aggregation baseline requires a static_tree topology")
    n = cfg.n
    br = cfg.topology.branching
    radio = RadioModel(cfg.radio.range_m, cfg.radio.data_rate_bps,
                       cfg.radio.frame_size_bytes, cfg.radio.frame_payload_bytes)
    mac_us = cfg.delays.hash_ms * 1000
    attest_us = cfg.delays.attest_ms * 1000
    query_tx_us = radio.frame_time_us()  # query fits a single frame
    report_tx_us = radio.tx_time_us(wire_bytes(n))

    children = [[c for c in range(br * k + 1, br * k + br + 1) if c < n]
                for k in range(n)]

    # downward sweep: when the query reaches each node (root holds it at 0)
    arrival = [0] * n
    for k in range(n):
        for c in children[k]:
            arrival[c] = arrival[k] + mac_us + query_tx_us + mac_us
    attest_done = [arrival[k] + attest_us for k in range(n)]

    # upward sweep: children have larger indices, so a reverse pass suffices
    ready = [0] * n
    for k in range(n - 1, -1, -1):
        if not children[k]:
            ready[k] = attest_done[k]
            continue
        verified = 0
        for c in children[k]:  # same arrival for a complete level; id breaks ties
            report_at = ready[c] + mac_us + report_tx_us
            verified = max(verified, report_at) + mac_us
        ready[k] = max(attest_done[k], verified)
    return BaselineResult(n=n, branching=br, completion_us=ready[0])
