import pytest

from swarmattest import crypto
from swarmattest.bitmask import CellStatus, ObservationBitmask
from swarmattest.crypto import Prng, PrngState, SymKey
from swarmattest.errors import ProtocolError
from swarmattest.protocol import (AttestationMessage, AttestationSchedule, ProverState,
                                  ValidityWindow, build_message, decode_message,
                                  encode_message, handle_message, next_attestation_time,
                                  self_attest, wire_bits, wire_bytes)

KEY = SymKey(b"\x42" * 20)
GOOD_REGION = b"firmware-image--" * 4
GOOD = frozenset({crypto.measure(GOOD_REGION)})


def make_prover(i=0, n=4, delta_t_max=600, tampered=False):
    region = bytearray(GOOD_REGION)
    if tampered:
        region[0] ^= 0xA5
    return ProverState(id=i, n=n, key=KEY, good_configs=GOOD,
                       schedule=AttestationSchedule(PrngState(b"shared"), delta_t_max),
                       region=region)


def attested(i=0, n=4, now=10, tampered=False):
    p = make_prover(i, n, tampered=tampered)
    return self_attest(p, now)


# ---------------------------------------------------------------- wire format

def test_wire_size_formula():
    assert wire_bits(128) == 480
    assert wire_bytes(128) == 60
    assert wire_bits(1024) == 2272
    assert wire_bytes(1024) == 284
    assert wire_bits(1) == 226
    assert wire_bytes(1) == 29


def test_message_payload_matches_formula():
    p = attested(0, 128)
    data = encode_message(build_message(p, 11))
    assert len(data) == 60


def test_codec_round_trip():
    rng = Prng(b"codec")
    for n in (1, 3, 8, 128):
        mask = ObservationBitmask.all_unknown(n)
        if n > 2:
            mask.set_cell(2, CellStatus.COMPROMISED)
        msg = AttestationMessage(mask, t_att=1234, t_stamp=1250, tag=rng.next_bytes(20))
        back = decode_message(encode_message(msg), n)
        assert back.bitmask.packed == msg.bitmask.packed
        assert back.t_att == msg.t_att
        assert back.t_stamp == msg.t_stamp
        assert back.tag == msg.tag


def test_decode_rejects_wrong_length_and_padding():
    from swarmattest.errors import MalformedMessageError
    p = attested(0, 3)
    data = encode_message(build_message(p, 11))
    with pytest.raises(MalformedMessageError):
        decode_message(data, 8)
    # 2n+224 = 230 bits for n=3, so the top 2 bits of the last byte are padding
    tampered = data[:-1] + bytes([data[-1] | 0x80])
    with pytest.raises(MalformedMessageError):
        decode_message(tampered, 3)


# ------------------------------------------------------------------- schedule

def test_gap_is_one_when_delta_is_one():
    state = PrngState(b"s")
    t = 0
    for _ in range(50):
        t_next, state = next_attestation_time(state, t, 1)
        assert t_next == t + 1
        t = t_next


def test_shared_seed_identical_sequences():
    a, b = PrngState(b"shared-seed"), PrngState(b"shared-seed")
    ta = tb = 0
    for _ in range(100):
        ta, a = next_attestation_time(a, ta, 600)
        tb, b = next_attestation_time(b, tb, 600)
        assert ta == tb


def test_gap_range_scan():
    state = PrngState(b"gaps")
    t = 0
    for _ in range(10_000):
        t_next, state = next_attestation_time(state, t, 37)
        assert 0 < t_next - t <= 37
        t = t_next


# ------------------------------------------------------------- self-attestation

def test_self_attest_healthy():
    p = attested(1, n=4)
    assert p.self_result == 1
    assert p.bitmask.cell(1) == CellStatus.HEALTHY
    assert p.current_t_att == 10


def test_self_attest_tampered_region():
    p = attested(1, n=4, tampered=True)
    assert p.self_result == 0
    assert p.bitmask.cell(1) == CellStatus.COMPROMISED


def test_self_attest_resets_foreign_cells():
    p = attested(0, n=8)
    # learn something, then start a new epoch
    p.bitmask.set_cell(3, CellStatus.HEALTHY)
    self_attest(p, 20)
    unknown = sum(1 for j in range(8) if p.bitmask.cell(j) == CellStatus.UNKNOWN)
    assert unknown == 7


def test_initial_mask_all_unknown():
    p = make_prover()
    assert p.bitmask.known_count() == 0
    assert not p.has_attested()


def test_schedule_advances_on_attest():
    p = make_prover(delta_t_max=600)
    first = p.next_t_att
    self_attest(p, first)
    assert p.next_t_att > first


# ------------------------------------------------------------------- messages

def test_build_message_before_attestation_fails():
    with pytest.raises(ProtocolError):
        build_message(make_prover(), 5)


def test_build_message_fields_and_tag():
    p = attested(0, n=4, now=10)
    msg = build_message(p, 12)
    assert msg.t_att == 10
    assert msg.t_stamp == 12
    assert crypto.mac_verify(KEY, msg.tag, msg.header_bytes())


WINDOW = ValidityWindow(past_slack=2)


def test_handle_message_propagates_compromise():
    sender = attested(1, n=4, now=10, tampered=True)
    receiver = attested(0, n=4, now=10)
    msg = build_message(sender, 11)
    assert handle_message(receiver, msg, 11, WINDOW) is None
    assert receiver.bitmask.cell(1) == CellStatus.COMPROMISED


def test_handle_message_rejects_forged_tag():
    sender = attested(1, n=4, now=10)
    receiver = attested(0, n=4, now=10)
    msg = build_message(sender, 11)
    forged = AttestationMessage(msg.bitmask, msg.t_att, msg.t_stamp, b"\x00" * 20)
    before = receiver.bitmask.packed
    assert handle_message(receiver, forged, 11, WINDOW) == "bad_mac"
    assert receiver.bitmask.packed == before


def test_handle_message_rejects_prior_epoch_replay():
    sender = attested(1, n=4, now=10)
    receiver = attested(0, n=4, now=10)
    stale = build_message(sender, 11)
    # both move to the next epoch; the captured message carries t_att = 10
    self_attest(sender, 20)
    self_attest(receiver, 20)
    before = receiver.bitmask.packed
    assert handle_message(receiver, stale, 21, WINDOW) == "wrong_epoch"
    assert receiver.bitmask.packed == before


def test_handle_message_rejects_future_timestamp():
    sender = attested(1, n=4, now=10)
    receiver = attested(0, n=4, now=10)
    msg = build_message(sender, 99)  # stamped in the future
    assert handle_message(receiver, msg, 11, WINDOW) == "stale_timestamp"


def test_handle_message_rejects_too_old_timestamp():
    sender = attested(1, n=4, now=10)
    receiver = attested(0, n=4, now=10)
    msg = AttestationMessage(sender.bitmask.copy(), 10, 7, b"")
    msg = AttestationMessage(msg.bitmask, msg.t_att, msg.t_stamp,
                             crypto.mac_sign(KEY, msg.header_bytes()))
    # window lower bound is t_att - 2 = 8, the stamp says 7
    assert handle_message(receiver, msg, 11, WINDOW) == "stale_timestamp"


def test_handle_message_rejects_invalid_cell_even_with_valid_tag():
    receiver = attested(0, n=4, now=10)
    bad_mask = ObservationBitmask(4, 0b01_11_11_11)
    msg = AttestationMessage(bad_mask, 10, 11, b"")
    msg = AttestationMessage(bad_mask, 10, 11, crypto.mac_sign(KEY, msg.header_bytes()))
    assert handle_message(receiver, msg, 11, WINDOW) == "malformed"


def test_handle_message_rejects_size_mismatch():
    receiver = attested(0, n=4, now=10)
    other = attested(1, n=5, now=10)
    msg = build_message(other, 11)
    assert handle_message(receiver, msg, 11, WINDOW) == "malformed"


def test_no_rejected_message_ever_changes_state():
    sender = attested(1, n=4, now=10)
    receiver = attested(0, n=4, now=10)
    rng = Prng(b"integrity")
    msg = build_message(sender, 11)
    before = receiver.bitmask.packed
    for _ in range(1000):
        forged = AttestationMessage(msg.bitmask, msg.t_att, msg.t_stamp,
                                    rng.next_bytes(20))
        assert handle_message(receiver, forged, 11, WINDOW) == "bad_mac"
    assert receiver.bitmask.packed == before
