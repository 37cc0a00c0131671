"""Scenario configuration: JSON schema, validation, defaults.

A scenario file is a single JSON object. Unknown keys are rejected so typos
fail loudly, and every diagnostic carries the offending key path. Parsing
fills defaults, so ``parse -> serialize -> parse`` is the identity on the
resolved configuration.

Minimal scenario::

    {"n": 128, "seeds": [1]}

which resolves to a mobile swarm in a 1000x1000 m arena (the arena scales
proportionally to n), 75 m radio range at 250 kbps with 127-byte frames, and
a 500 ms broadcast period (100 ms on static topologies).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from .errors import ConfigError
from .metrics import EnergyConstants

BASE_ARENA_SIDE_M = 1000.0
BASE_ARENA_POPULATION = 128

MOBILE_PERIOD_S = 0.5
STATIC_PERIOD_S = 0.1


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _take(d: dict, path: str, allowed: dict[str, Any]) -> dict:
    """Return a copy of d with defaults filled; reject keys not in allowed."""
    unknown = set(d) - set(allowed)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")
    out = dict(allowed)
    out.update(d)
    return out


@dataclass
class TopologyCfg:
    kind: str = "random_mobility"
    branching: Optional[int] = None
    edges: Optional[list[list[int]]] = None


@dataclass
class ArenaCfg:
    width_m: float
    height_m: float


@dataclass
class RadioCfg:
    range_m: float = 75.0
    data_rate_bps: int = 250_000
    frame_size_bytes: int = 127
    frame_payload_bytes: int = 102
    loss_prob: float = 0.0


@dataclass
class DelayCfg:
    hash_ms: int = 48
    attest_ms: int = 187


@dataclass
class MobilityCfg:
    speed_min_mps: float = 1.0
    speed_max_mps: float = 15.0
    tick_s: float = 0.5


@dataclass
class AdversaryCfg:
    kind: str
    drop_rate: float = 0.0
    replay: bool = False
    forge: bool = False
    victims: list[int] = field(default_factory=list)
    tamper_time_s: Optional[float] = None


@dataclass
class VerifierCfg:
    query_times_s: list[float] = field(default_factory=list)
    position: Optional[list[float]] = None  # None = arena center
    conservative: bool = False


@dataclass
class ScenarioConfig:
    n: int
    seeds: list[int]
    t_end_s: float = 600.0
    topology: TopologyCfg = field(default_factory=TopologyCfg)
    arena: Optional[ArenaCfg] = None
    radio: RadioCfg = field(default_factory=RadioCfg)
    broadcast_period_s: float = MOBILE_PERIOD_S
    delta_t_max_s: int = 600
    t_att_start_s: Optional[int] = None
    delays: DelayCfg = field(default_factory=DelayCfg)
    good_config_count: int = 1
    compromised_fraction: float = 0.0
    adversaries: list[AdversaryCfg] = field(default_factory=list)
    coverage_targets: list[tuple[float, float]] = field(default_factory=lambda: [(0.95, 0.95)])
    mobility: MobilityCfg = field(default_factory=MobilityCfg)
    validity_window_s: int = 1
    t_max_s: float = 600.0
    verifier: Optional[VerifierCfg] = None
    energy: EnergyConstants = field(default_factory=EnergyConstants)
    key_bits: int = 160
    sample_interval_s: float = 0.5
    stop_when_covered: bool = True
    sync_rounds: bool = False
    check_provenance: bool = False
    baseline: str = "none"
    output_dir: Optional[str] = None

    def arena_side_m(self) -> float:
        """Arena side when scaled with population: area proportional to n."""
        return BASE_ARENA_SIDE_M * math.sqrt(self.n / BASE_ARENA_POPULATION)

    def resolved_arena(self) -> ArenaCfg:
        if self.arena is not None:
            return self.arena
        side = self.arena_side_m()
        return ArenaCfg(side, side)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["topology"] = {k: v for k, v in d["topology"].items() if v is not None}
        d["coverage_targets"] = [{"x": x, "y": y} for x, y in self.coverage_targets]
        advs = []
        for a in self.adversaries:
            if a.kind == "com":
                advs.append({"kind": "com", "drop_rate": a.drop_rate,
                             "replay": a.replay, "forge": a.forge})
            elif a.kind == "soft":
                advs.append({"kind": "soft", "victims": list(a.victims),
                             "tamper_time_s": a.tamper_time_s})
            else:
                advs.append({"kind": "mob", "victims": list(a.victims)})
        d["adversaries"] = advs
        if d["arena"] is None:
            del d["arena"]
        if d["verifier"] is None:
            del d["verifier"]
        if d["t_att_start_s"] is None:
            del d["t_att_start_s"]
        if d["output_dir"] is None:
            del d["output_dir"]
        return d


def _parse_topology(raw: Any, n: int) -> TopologyCfg:
    _require(isinstance(raw, dict), "topology", "must be an object")
    kind = raw.get("kind")
    _require(kind in ("random_mobility", "static_tree", "static_graph"),
             "topology.kind", f"unknown topology {kind!r}")
    if kind == "random_mobility":
        d = _take(raw, "topology", {"kind": kind})
        return TopologyCfg(kind=kind)
    if kind == "static_tree":
        d = _take(raw, "topology", {"kind": kind, "branching": None})
        _require(isinstance(d["branching"], int) and d["branching"] >= 2,
                 "topology.branching", "must be an integer >= 2")
        return TopologyCfg(kind=kind, branching=d["branching"])
    d = _take(raw, "topology", {"kind": kind, "edges": None})
    _require(isinstance(d["edges"], list), "topology.edges", "must be a list of [i, j] pairs")
    for k, e in enumerate(d["edges"]):
        ok = (isinstance(e, list) and len(e) == 2
              and all(isinstance(v, int) and 0 <= v < n for v in e) and e[0] != e[1])
        _require(ok, f"topology.edges[{k}]", f"invalid edge {e!r} for n={n}")
    return TopologyCfg(kind=kind, edges=[list(e) for e in d["edges"]])


def _parse_adversary(raw: Any, idx: int, n: int, t_end_s: float) -> AdversaryCfg:
    path = f"adversaries[{idx}]"
    _require(isinstance(raw, dict), path, "must be an object")
    kind = raw.get("kind")
    _require(kind in ("com", "soft", "mob"), f"{path}.kind", f"unknown adversary {kind!r}")
    if kind == "com":
        d = _take(raw, path, {"kind": kind, "drop_rate": 0.0, "replay": False, "forge": False})
        _require(0.0 <= d["drop_rate"] <= 1.0, f"{path}.drop_rate", "must be in [0, 1]")
        return AdversaryCfg(kind=kind, drop_rate=float(d["drop_rate"]),
                            replay=bool(d["replay"]), forge=bool(d["forge"]))
    if kind == "soft":
        d = _take(raw, path, {"kind": kind, "victims": None, "tamper_time_s": None})
        _require(isinstance(d["victims"], list), f"{path}.victims", "must be a list of node ids")
        for v in d["victims"]:
            _require(isinstance(v, int) and 0 <= v < n, f"{path}.victims", f"node {v!r} not in [0, {n})")
        _require(d["tamper_time_s"] is not None, f"{path}.tamper_time_s", "is required")
        t = float(d["tamper_time_s"])
        _require(0 <= t <= t_end_s, f"{path}.tamper_time_s", "must lie within the run horizon")
        return AdversaryCfg(kind=kind, victims=list(d["victims"]), tamper_time_s=t)
    d = _take(raw, path, {"kind": kind, "victims": None})
    _require(isinstance(d["victims"], list), f"{path}.victims", "must be a list of node ids")
    for v in d["victims"]:
        _require(isinstance(v, int) and 0 <= v < n, f"{path}.victims", f"node {v!r} not in [0, {n})")
    return AdversaryCfg(kind=kind, victims=list(d["victims"]))


def from_dict(raw: dict) -> ScenarioConfig:
    _require(isinstance(raw, dict), "", "scenario must be a JSON object")
    d = _take(raw, "", {
        "n": None, "seeds": None, "t_end_s": 600.0, "topology": {"kind": "random_mobility"},
        "arena": None, "radio": {}, "broadcast_period_s": None, "delta_t_max_s": 600,
        "t_att_start_s": None, "delays": {}, "good_config_count": 1,
        "compromised_fraction": 0.0, "adversaries": [], "coverage_targets": None,
        "mobility": {}, "validity_window_s": None, "t_max_s": None, "verifier": None,
        "energy": {}, "key_bits": 160, "sample_interval_s": 0.5,
        "stop_when_covered": True, "sync_rounds": False, "check_provenance": False,
        "baseline": "none", "output_dir": None,
    })

    _require(isinstance(d["n"], int) and d["n"] >= 1, "n", "must be an integer >= 1")
    n = d["n"]

    _require(isinstance(d["seeds"], list) and d["seeds"], "seeds", "must be a non-empty list")
    seeds: list[int] = []
    for s in d["seeds"]:
        _require(isinstance(s, int), "seeds", f"seed {s!r} must be an integer")
        if s in seeds:
            warnings.warn(f"duplicate seed {s} removed from scenario seed list")
        else:
            seeds.append(s)

    t_end_s = float(d["t_end_s"])
    _require(t_end_s > 0, "t_end_s", "must be positive")

    topology = _parse_topology(d["topology"], n)

    arena = None
    if d["arena"] is not None:
        a = _take(d["arena"], "arena", {"width_m": None, "height_m": None})
        _require(a["width_m"] and a["width_m"] > 0, "arena.width_m", "must be positive")
        _require(a["height_m"] and a["height_m"] > 0, "arena.height_m", "must be positive")
        arena = ArenaCfg(float(a["width_m"]), float(a["height_m"]))

    r = _take(d["radio"], "radio", {"range_m": 75.0, "data_rate_bps": 250_000,
                                    "frame_size_bytes": 127, "frame_payload_bytes": 102,
                                    "loss_prob": 0.0})
    radio = RadioCfg(float(r["range_m"]), int(r["data_rate_bps"]),
                     int(r["frame_size_bytes"]), int(r["frame_payload_bytes"]),
                     float(r["loss_prob"]))
    _require(radio.range_m > 0, "radio.range_m", "must be positive")
    _require(radio.data_rate_bps > 0, "radio.data_rate_bps", "must be positive")
    _require(0 < radio.frame_payload_bytes < radio.frame_size_bytes,
             "radio.frame_payload_bytes", "must be positive and below frame_size_bytes")
    _require(0.0 <= radio.loss_prob <= 1.0, "radio.loss_prob", "must be in [0, 1]")

    period_s = d["broadcast_period_s"]
    if period_s is None:
        period_s = MOBILE_PERIOD_S if topology.kind == "random_mobility" else STATIC_PERIOD_S
    period_s = float(period_s)
    _require(period_s > 0, "broadcast_period_s", "must be positive")

    _require(isinstance(d["delta_t_max_s"], int) and d["delta_t_max_s"] >= 1,
             "delta_t_max_s", "must be an integer >= 1")

    t_att_start = d["t_att_start_s"]
    if t_att_start is not None:
        _require(isinstance(t_att_start, int) and 0 <= t_att_start < t_end_s,
                 "t_att_start_s", "must be an integer within [0, t_end_s)")

    dl = _take(d["delays"], "delays", {"hash_ms": 48, "attest_ms": 187})
    delays = DelayCfg(int(dl["hash_ms"]), int(dl["attest_ms"]))
    _require(delays.hash_ms >= 0 and delays.attest_ms >= 0, "delays", "must be nonnegative")

    _require(isinstance(d["good_config_count"], int) and d["good_config_count"] >= 1,
             "good_config_count", "must be an integer >= 1")
    _require(0.0 <= float(d["compromised_fraction"]) <= 1.0,
             "compromised_fraction", "must be in [0, 1]")

    adversaries = [_parse_adversary(a, i, n, t_end_s) for i, a in enumerate(d["adversaries"])]

    raw_targets = d["coverage_targets"]
    if raw_targets is None:
        raw_targets = [{"x": 0.95, "y": 0.95}]
    targets: list[tuple[float, float]] = []
    for i, t in enumerate(raw_targets):
        tt = _take(t, f"coverage_targets[{i}]", {"x": None, "y": None})
        _require(tt["x"] is not None and 0 < float(tt["x"]) <= 1,
                 f"coverage_targets[{i}].x", "must be in (0, 1]")
        _require(tt["y"] is not None and 0 < float(tt["y"]) <= 1,
                 f"coverage_targets[{i}].y", "must be in (0, 1]")
        targets.append((float(tt["x"]), float(tt["y"])))

    m = _take(d["mobility"], "mobility",
              {"speed_min_mps": 1.0, "speed_max_mps": 15.0, "tick_s": 0.5})
    mobility = MobilityCfg(float(m["speed_min_mps"]), float(m["speed_max_mps"]),
                           float(m["tick_s"]))
    _require(0 < mobility.speed_min_mps <= mobility.speed_max_mps,
             "mobility.speed_min_mps", "must satisfy 0 < min <= max")
    _require(mobility.tick_s > 0, "mobility.tick_s", "must be positive")

    window_s = d["validity_window_s"]
    if window_s is None:
        window_s = max(1, math.ceil(2 * period_s))
    _require(isinstance(window_s, int) and window_s >= 1,
             "validity_window_s", "must be an integer >= 1")

    t_max_s = float(d["t_max_s"]) if d["t_max_s"] is not None else t_end_s
    _require(t_max_s > 0, "t_max_s", "must be positive")

    verifier = None
    if d["verifier"] is not None:
        v = _take(d["verifier"], "verifier",
                  {"query_times_s": [], "position": None, "conservative": False})
        times = [float(q) for q in v["query_times_s"]]
        _require(all(q >= 0 for q in times), "verifier.query_times_s", "must be nonnegative")
        pos = v["position"]
        if pos is not None:
            _require(isinstance(pos, list) and len(pos) == 2,
                     "verifier.position", "must be [x, y]")
            pos = [float(pos[0]), float(pos[1])]
        verifier = VerifierCfg(times, pos, bool(v["conservative"]))

    e = _take(d["energy"], "energy", {
        "e_send_uj_per_byte": 0.6, "e_recv_uj_per_byte": 0.67,
        "e_hmac_uj": 15.0, "e_min_uj": 0.0, "e_att_uj": 2000.0})
    energy = EnergyConstants(float(e["e_send_uj_per_byte"]), float(e["e_recv_uj_per_byte"]),
                             float(e["e_hmac_uj"]), float(e["e_min_uj"]), float(e["e_att_uj"]))

    _require(d["key_bits"] in (128, 160, 256), "key_bits", "must be one of 128, 160, 256")
    sample_interval_s = float(d["sample_interval_s"])
    _require(sample_interval_s > 0, "sample_interval_s", "must be positive")

    _require(d["baseline"] in ("none", "naive_tree_aggregation"),
             "baseline", f"unknown baseline {d['baseline']!r}")
    if d["baseline"] == "naive_tree_aggregation":
        _require(topology.kind == "static_tree", "baseline",
                 "naive_tree_aggregation requires a static_tree topology")

    return ScenarioConfig(
        n=n, seeds=seeds, t_end_s=t_end_s, topology=topology, arena=arena, radio=radio,
        broadcast_period_s=period_s, delta_t_max_s=d["delta_t_max_s"],
        t_att_start_s=t_att_start, delays=delays,
        good_config_count=d["good_config_count"],
        compromised_fraction=float(d["compromised_fraction"]),
        adversaries=adversaries, coverage_targets=targets, mobility=mobility,
        validity_window_s=window_s, t_max_s=t_max_s, verifier=verifier, energy=energy,
        key_bits=d["key_bits"], sample_interval_s=sample_interval_s,
        stop_when_covered=bool(d["stop_when_covered"]), sync_rounds=bool(d["sync_rounds"]),
        check_provenance=bool(d["check_provenance"]), baseline=d["baseline"],
        output_dir=d["output_dir"],
    )


def parse_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file is not valid JSON: {exc}")
    return from_dict(raw)


def dump_config(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)
