import numpy as np
import pytest

from clesc import stack
from clesc.bits import hex_from_bits, random_bits
from clesc.errors import ConfigurationError, FramingError, IncompleteGroupError


def test_packetize_arithmetic():
    bits = random_bits(np.random.default_rng(0), 3000)
    payloads = stack.packetize(bits, 1024)
    assert [p.size for p in payloads] == [1024, 1024, 952]
    assert np.array_equal(np.concatenate(payloads), bits)


def test_packetize_exact_fit_and_empty():
    bits = random_bits(np.random.default_rng(1), 1024)
    assert [p.size for p in stack.packetize(bits, 1024)] == [1024]
    empty = stack.packetize(np.zeros(0, np.uint8), 1024)
    assert len(empty) == 1 and empty[0].size == 0


def test_packetize_bad_size():
    with pytest.raises(ConfigurationError):
        stack.packetize(random_bits(np.random.default_rng(2), 10), 0)


def test_header_round_trip_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        payload = random_bits(rng, int(rng.integers(0, 1025)))
        level = int(rng.integers(1, 6))
        gid = int(rng.integers(0, 1 << 16))
        seq = int(rng.integers(0, 1 << 16))
        packet = stack.attach_header(payload, level, gid, seq)
        assert packet.size == stack.HEADER_BITS + payload.size
        out, lv, g, s = stack.strip_header(packet)
        assert (lv, g, s) == (level, gid, seq)
        assert np.array_equal(out, payload)


def test_header_golden_fixtures():
    # level 5, group 0, seq 0, empty payload: 56-bit packet
    pkt = stack.attach_header(np.zeros(0, np.uint8), 5, 0, 0)
    assert pkt.size == 56
    assert hex_from_bits(pkt) == "05000000000000"

    # level 3, group 0x0102, seq 0x0304, 5-bit payload 10110
    payload = np.array([1, 0, 1, 1, 0], np.uint8)
    pkt2 = stack.attach_header(payload, 3, 0x0102, 0x0304)
    assert pkt2.size == 61
    # header bytes 03 01 02 03 04 00 05 then payload bits (packed, right pad)
    assert hex_from_bits(pkt2) == "03010203040005b0"


def test_header_field_validation():
    payload = np.zeros(4, np.uint8)
    for bad_level in (0, 6):
        with pytest.raises(ConfigurationError):
            stack.attach_header(payload, bad_level, 0, 0)
    with pytest.raises(ConfigurationError):
        stack.attach_header(payload, 1, 1 << 16, 0)
    with pytest.raises(ConfigurationError):
        stack.attach_header(np.zeros(1 << 16, np.uint8), 1, 0, 0)


def test_strip_header_framing_errors():
    with pytest.raises(FramingError):
        stack.strip_header(np.zeros(55, np.uint8))
    # level byte of zero is invalid
    with pytest.raises(FramingError):
        stack.strip_header(np.zeros(56, np.uint8))
    # payload_len larger than carried bits
    pkt = stack.attach_header(np.zeros(8, np.uint8), 2, 0, 0)
    with pytest.raises(FramingError):
        stack.strip_header(pkt[:-4])


def test_reassemble_round_trip_and_order_independence():
    rng = np.random.default_rng(4)
    for _ in range(60):
        n = int(rng.integers(1, 10 * 1024))
        bits = random_bits(rng, n)
        payloads = stack.packetize(bits, 1024)
        packets = [
            stack.attach_header(p, 2, 7, seq) for seq, p in enumerate(payloads)
        ]
        order = rng.permutation(len(packets))
        out = stack.reassemble([packets[i] for i in order], len(packets))
        assert np.array_equal(out, bits)


def test_reassemble_missing_packet_names_seq():
    bits = random_bits(np.random.default_rng(5), 3000)
    packets = [
        stack.attach_header(p, 4, 1, seq)
        for seq, p in enumerate(stack.packetize(bits, 1024))
    ]
    with pytest.raises(IncompleteGroupError) as err:
        stack.reassemble([packets[0], packets[2]], 3)
    assert err.value.missing == [1]
    assert err.value.group_id == 1


def test_reassemble_rejects_mixed_groups():
    a = stack.attach_header(np.zeros(8, np.uint8), 1, 0, 0)
    b = stack.attach_header(np.zeros(8, np.uint8), 1, 1, 1)
    with pytest.raises(FramingError):
        stack.reassemble([a, b], 2)
