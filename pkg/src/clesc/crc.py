"""GF(2) cyclic redundancy checks with the level-to-polynomial mapping.

The check value is the plain polynomial remainder of data(x) * x^k modulo
the generator, with no initial register value, final xor, or bit
reflection, so remainders match textbook long division bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import bits_from_int, int_from_bits
from .errors import ConfigurationError


@dataclass(frozen=True)
class CrcPolynomial:
    degree: int
    coeffs: int  # polynomial without the leading x^degree coefficient
    name: str = ""

    def __post_init__(self):
        if self.degree < 1:
            raise ConfigurationError("CRC degree must be >= 1")
        if self.coeffs >= (1 << self.degree):
            raise ConfigurationError("coefficients exceed the stated degree")

    @property
    def full(self) -> int:
        """Generator including the leading coefficient (degree+1 bits)."""
        return (1 << self.degree) | self.coeffs

    @classmethod
    def from_hex(cls, text: str, degree: int, name: str = "") -> "CrcPolynomial":
        return cls(degree=degree, coeffs=int(text, 16), name=name)


CRC4_ITU = CrcPolynomial(4, 0x3, "CRC-4-ITU")
CRC8 = CrcPolynomial(8, 0x07, "CRC-8")
CRC16_CCITT = CrcPolynomial(16, 0x1021, "CRC-16-CCITT")
CRC24 = CrcPolynomial(24, 0x864CFB, "CRC-24")
CRC32 = CrcPolynomial(32, 0x04C11DB7, "CRC-32")

LEVEL_POLYNOMIALS = {1: CRC4_ITU, 2: CRC8, 3: CRC16_CCITT, 4: CRC24, 5: CRC32}
POLYNOMIALS_BY_DEGREE = {p.degree: p for p in LEVEL_POLYNOMIALS.values()}


def crc_for_level(level: int) -> CrcPolynomial:
    if level not in LEVEL_POLYNOMIALS:
        raise ConfigurationError(f"importance level must be 1..5, got {level}")
    return LEVEL_POLYNOMIALS[level]


# ---------------------------------------------------------------------------
# byte-table remainder core

_TABLES: dict[tuple[int, int], list[int]] = {}


def _table_for(g: CrcPolynomial) -> list[int]:
    key = (g.degree, g.coeffs)
    table = _TABLES.get(key)
    if table is None:
        # table[b] = remainder of b(x) * x^degree, reduced bit-serially
        table = []
        top = 1 << (g.degree + 7)
        for b in range(256):
            v = b << g.degree
            for _ in range(8):
                v = (v << 1) ^ (g.full << 8) if v & top else v << 1
            table.append((v >> 8) & ((1 << g.degree) - 1))
        _TABLES[key] = table
    return table


def crc_compute_int(value: int, nbits: int, g: CrcPolynomial) -> int:
    """Remainder of value(x) * x^degree mod g(x); value holds nbits coefficients."""
    table = _table_for(g)
    k = g.degree
    mask = (1 << k) - 1
    reg = 0
    if k >= 8:
        shift = k - 8
        for byte in value.to_bytes((nbits + 7) // 8, "big"):
            reg = ((reg << 8) ^ table[((reg >> shift) ^ byte) & 0xFF]) & mask
    else:
        shift = 8 - k
        for byte in value.to_bytes((nbits + 7) // 8, "big"):
            reg = table[((reg << shift) ^ byte) & 0xFF]
    return reg


def crc_compute(data: np.ndarray, g: CrcPolynomial) -> np.ndarray:
    """Check bits (length = degree) for a bit-sequence region."""
    data = np.asarray(data, dtype=np.uint8)
    rem = crc_compute_int(int_from_bits(data), data.size, g)
    return bits_from_int(rem, g.degree)


def append_checks(
    s_i: np.ndarray, payload_crc: np.ndarray, indication_crc: np.ndarray
) -> np.ndarray:
    """Packet bits followed by the payload check then the indication check."""
    return np.concatenate([s_i, payload_crc, indication_crc]).astype(np.uint8)


def verify_region(
    region: np.ndarray, received_crc: np.ndarray, g: CrcPolynomial
) -> bool:
    received_crc = np.asarray(received_crc, dtype=np.uint8)
    if received_crc.size != g.degree:
        return False
    return bool(np.array_equal(crc_compute(region, g), received_crc))


# ---------------------------------------------------------------------------
# linear batch form, used by the vectorized receive pipeline

_MATRICES: dict[tuple[int, int, int], np.ndarray] = {}


def crc_remainder_matrix(g: CrcPolynomial, length: int) -> np.ndarray:
    """Rows are the remainders of each unit bit of an input of given length.

    CRC is linear over GF(2), so the check of any region equals the xor of
    the rows selected by its set bits.
    """
    key = (g.degree, g.coeffs, length)
    mat = _MATRICES.get(key)
    if mat is None:
        rows = np.empty((length, g.degree), dtype=np.uint8)
        rem = g.coeffs  # x^degree mod g for the last input position
        rows[length - 1] = bits_from_int(rem, g.degree)
        top = 1 << (g.degree - 1)
        for i in range(length - 2, -1, -1):
            rem = ((rem << 1) ^ g.full) if rem & top else rem << 1
            rows[i] = bits_from_int(rem, g.degree)
        mat = rows
        _MATRICES[key] = mat
    return mat


def crc_compute_batch(regions: np.ndarray, g: CrcPolynomial) -> np.ndarray:
    """Check bits for each row of a (batch, length) bit matrix."""
    regions = np.atleast_2d(np.asarray(regions, dtype=np.uint8))
    mat = crc_remainder_matrix(g, regions.shape[1])
    prod = regions.astype(np.float32) @ mat.astype(np.float32)
    return (prod.astype(np.int64) & 1).astype(np.uint8)
