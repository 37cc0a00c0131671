import swarmattest as sa
from swarmattest.bitmask import CellStatus

UNKNOWN = CellStatus.UNKNOWN
COMPROMISED = CellStatus.COMPROMISED
HEALTHY = CellStatus.HEALTHY


def run(overrides, seed=1):
    base = {"n": 7, "seeds": [seed], "t_att_start_s": 1, "t_end_s": 20,
            "delta_t_max_s": 1000,
            "topology": {"kind": "static_tree", "branching": 2}}
    base.update(overrides)
    return sa.run_scenario(sa.from_dict(base), seed)


def test_full_drop_leaves_all_foreign_cells_unknown():
    res = run({"adversaries": [{"kind": "com", "drop_rate": 1.0}], "t_end_s": 10})
    assert res.ledger.combines == 0
    assert res.ledger.mct_us[(0.95, 0.95)] is None
    for p in res.provers:
        assert p.bitmask.known_count() == 1


def test_forged_whitewash_never_accepted():
    res = run({"adversaries": [
        {"kind": "soft", "victims": [3], "tamper_time_s": 0.2},
        {"kind": "com", "forge": True}]})
    led = res.ledger
    assert led.forged_accepted == 0
    assert led.rejections["bad_mac"] > 0  # forgeries were actually injected
    # the whitewash failed: every other node ends up knowing node 3 is bad
    for p in res.provers:
        if p.id != 3:
            assert p.bitmask.cell(3) == COMPROMISED


def test_cross_epoch_replay_rejected():
    res = run({"delta_t_max_s": 3, "t_att_start_s": 1, "t_end_s": 14,
               "adversaries": [{"kind": "com", "replay": True}],
               "stop_when_covered": False})
    led = res.ledger
    assert led.attest_rounds >= 2  # several epochs actually happened
    assert led.replayed_cross_epoch_accepted == 0
    assert led.rejections["wrong_epoch"] > 0  # stale replays were injected


def test_soft_tamper_before_attestation_detected_network_wide():
    res = run({"adversaries": [{"kind": "soft", "victims": [5], "tamper_time_s": 0.5}]})
    truth = res.truth_by_t_att[1]
    assert truth[5] == 0
    for p in res.provers:
        assert p.bitmask.cell(5) == COMPROMISED


def test_soft_tamper_after_attestation_stays_healthy_this_epoch():
    res = run({"adversaries": [{"kind": "soft", "victims": [5], "tamper_time_s": 3.0}]})
    assert res.truth_by_t_att[1][5] == 1  # measured before the tampering
    for p in res.provers:
        assert p.bitmask.cell(5) == HEALTHY


def test_empty_victim_set_is_a_no_op():
    clean = run({})
    noop = run({"adversaries": [{"kind": "soft", "victims": [], "tamper_time_s": 0.5}]})
    assert clean.ledger.mct_us == noop.ledger.mct_us
    assert clean.ledger.combines == noop.ledger.combines
    assert [p.bitmask.packed for p in clean.provers] == \
        [p.bitmask.packed for p in noop.provers]


def test_mobile_evader_stays_unknown_everywhere():
    res = run({"n": 6, "topology": {"kind": "random_mobility"},
               "arena": {"width_m": 4000.0, "height_m": 4000.0},
               "t_att_start_s": 20, "t_end_s": 50, "stop_when_covered": False,
               "adversaries": [
                   {"kind": "soft", "victims": [2], "tamper_time_s": 5.0},
                   {"kind": "mob", "victims": [2]}]})
    for p in res.provers:
        if p.id != 2:
            assert p.bitmask.cell(2) == UNKNOWN  # never 10, never 00


def test_evasion_impossible_when_range_covers_arena():
    # 50x50 m arena has a 71 m diagonal, below the 75 m radio range: the
    # evader is always in range of everyone and its own broadcast betrays it
    res = run({"n": 4, "topology": {"kind": "random_mobility"},
               "arena": {"width_m": 50.0, "height_m": 50.0},
               "t_att_start_s": 5, "t_end_s": 20, "stop_when_covered": False,
               "adversaries": [
                   {"kind": "soft", "victims": [2], "tamper_time_s": 1.0},
                   {"kind": "mob", "victims": [2]}]})
    for p in res.provers:
        if p.id != 2:
            assert p.bitmask.cell(2) == COMPROMISED


def test_initially_compromised_fraction():
    res = run({"n": 10, "compromised_fraction": 0.4, "t_end_s": 15})
    truth = res.truth_by_t_att[1]
    assert sum(1 for r in truth if r == 0) == 4
    # consensus converged on exactly the compromised set
    for p in res.provers:
        for j in range(10):
            expected = HEALTHY if truth[j] else COMPROMISED
            assert p.bitmask.cell(j) == expected
