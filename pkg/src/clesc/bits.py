"""Bit-sequence helpers.

Every layer exchanges bits as 1-D numpy arrays of dtype uint8 holding 0/1
values. Within multi-bit fields the first array element is the most
significant bit.
"""
from __future__ import annotations

import numpy as np


def as_bits(values) -> np.ndarray:
    """Coerce a sequence of 0/1 values to the canonical bit array."""
    arr = np.asarray(values, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequences may only contain 0 and 1")
    return arr


def zero_bits(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.uint8)


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def bits_from_bytes(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bytes_from_bits(bits: np.ndarray) -> bytes:
    """Pack bits MSB-first, zero-padding the final byte on the right."""
    return np.packbits(bits).tobytes()


def bits_from_int(value: int, width: int) -> np.ndarray:
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return bits_from_bytes(value.to_bytes((width + 7) // 8, "big"))[-width:]


def int_from_bits(bits: np.ndarray) -> int:
    n = len(bits)
    if n == 0:
        return 0
    return int.from_bytes(np.packbits(bits).tobytes(), "big") >> (-n % 8)


def hex_from_bits(bits: np.ndarray) -> str:
    """Hex dump of the packed bits (right-padded to a whole byte)."""
    return bytes_from_bits(bits).hex()


def bits_from_hex(text: str, n: int | None = None) -> np.ndarray:
    bits = bits_from_bytes(bytes.fromhex(text))
    return bits if n is None else bits[:n]
