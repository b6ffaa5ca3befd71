"""Priority tagging layer: packet segmentation, headers, reassembly.

Header layout, most significant bit first, 56 bits total:

    level(8) | group_id(16) | seq(16) | payload_len(16)

The level field is the importance indication; the other three fields are
routing plumbing covered by the same indication check so a misdelivered
packet cannot slip through verification.
"""
from __future__ import annotations

import numpy as np

from .bits import bits_from_int, int_from_bits, zero_bits
from .errors import ConfigurationError, FramingError, IncompleteGroupError

LEVEL_BITS = 8
GROUP_BITS = 16
SEQ_BITS = 16
LEN_BITS = 16
HEADER_BITS = LEVEL_BITS + GROUP_BITS + SEQ_BITS + LEN_BITS  # 56

MAX_LEVEL = 5
_FIELD_MAX = (1 << 16) - 1


def packetize(group_bits: np.ndarray, packet_size: int) -> list[np.ndarray]:
    """Split a group's bit sequence into payloads of at most packet_size bits.

    All payloads except the last are exactly packet_size. An empty group
    degenerates to a single empty payload so the group still exists on air.
    """
    if packet_size < 1 or packet_size > _FIELD_MAX:
        raise ConfigurationError(f"packet size must be 1..{_FIELD_MAX} bits")
    group_bits = np.asarray(group_bits, dtype=np.uint8)
    if group_bits.size == 0:
        return [zero_bits(0)]
    return [
        group_bits[i : i + packet_size]
        for i in range(0, group_bits.size, packet_size)
    ]


def attach_header(
    payload: np.ndarray, level: int, group_id: int, seq: int
) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    if not 1 <= level <= MAX_LEVEL:
        raise ConfigurationError(f"importance level must be 1..{MAX_LEVEL}, got {level}")
    if not 0 <= group_id <= _FIELD_MAX or not 0 <= seq <= _FIELD_MAX:
        raise ConfigurationError("group_id and seq must fit in 16 bits")
    if payload.size > _FIELD_MAX:
        raise ConfigurationError("payload exceeds the 16-bit length field")
    header = np.concatenate(
        [
            bits_from_int(level, LEVEL_BITS),
            bits_from_int(group_id, GROUP_BITS),
            bits_from_int(seq, SEQ_BITS),
            bits_from_int(payload.size, LEN_BITS),
        ]
    )
    return np.concatenate([header, payload])


def strip_header(packet_bits: np.ndarray) -> tuple[np.ndarray, int, int, int]:
    """Parse a packet into (payload, level, group_id, seq)."""
    packet_bits = np.asarray(packet_bits, dtype=np.uint8)
    if packet_bits.size < HEADER_BITS:
        raise FramingError(
            f"packet of {packet_bits.size} bits is shorter than the {HEADER_BITS}-bit header"
        )
    level = int_from_bits(packet_bits[:LEVEL_BITS])
    group_id = int_from_bits(packet_bits[LEVEL_BITS : LEVEL_BITS + GROUP_BITS])
    seq = int_from_bits(
        packet_bits[LEVEL_BITS + GROUP_BITS : LEVEL_BITS + GROUP_BITS + SEQ_BITS]
    )
    payload_len = int_from_bits(packet_bits[HEADER_BITS - LEN_BITS : HEADER_BITS])
    if not 1 <= level <= MAX_LEVEL:
        raise FramingError(f"parsed level {level} is outside 1..{MAX_LEVEL}")
    if payload_len > packet_bits.size - HEADER_BITS:
        raise FramingError(
            f"payload_len {payload_len} exceeds the {packet_bits.size - HEADER_BITS} carried bits"
        )
    payload = packet_bits[HEADER_BITS : HEADER_BITS + payload_len]
    return payload, level, group_id, seq


def reassemble(packets, expected_count: int | None = None) -> np.ndarray:
    """Concatenate packet payloads in seq order into the group bit sequence.

    Raises IncompleteGroupError naming the missing seq numbers when the
    set is not contiguous from 0.
    """
    by_seq: dict[int, np.ndarray] = {}
    group_id = None
    for packet in packets:
        payload, _level, gid, seq = strip_header(packet)
        if group_id is None:
            group_id = gid
        elif gid != group_id:
            raise FramingError(f"packets from groups {group_id} and {gid} mixed")
        by_seq[seq] = payload
    if not by_seq:
        raise IncompleteGroupError(-1, [])
    count = expected_count if expected_count is not None else max(by_seq) + 1
    missing = [s for s in range(count) if s not in by_seq]
    if missing:
        raise IncompleteGroupError(group_id, missing)
    return np.concatenate([by_seq[s] for s in range(count)])
