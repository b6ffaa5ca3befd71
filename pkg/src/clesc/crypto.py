"""Per-group symmetric encryption of codeword bit sequences.

AES-128-CBC and ChaCha20 are supported. CBC decryption propagates a single
ciphertext bit error into a fully garbled block plus one flipped bit in
the next block; that error amplification is exactly what the channel code
below this layer has to contain, and avalanche_fraction measures it.

Framing: the packed payload bytes are zero-padded to the cipher block
boundary (AES only) and a 32-bit big-endian trailer holding the original
bit length is appended, so the exact length survives the round trip.
Corrupted ciphertext decrypts to best-effort plaintext, never an error.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .bits import bits_from_bytes, bytes_from_bits, random_bits, zero_bits
from .errors import ConfigurationError

ALGORITHMS = ("aes-cbc", "chacha20")
AES_BLOCK_BYTES = 16
TRAILER_BYTES = 4


@dataclass(frozen=True)
class CipherConfig:
    algorithm: str = "aes-cbc"
    key: bytes = bytes(range(16))
    session_salt: bytes = b"\x00" * 8

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown cipher algorithm {self.algorithm!r}")
        expected = 16 if self.algorithm == "aes-cbc" else 32
        if len(self.key) != expected:
            raise ConfigurationError(
                f"{self.algorithm} needs a {expected}-byte key, got {len(self.key)}"
            )

    @classmethod
    def from_hex(cls, algorithm: str, key_hex: str, salt_hex: str = "00" * 8):
        return cls(algorithm, bytes.fromhex(key_hex), bytes.fromhex(salt_hex))


def derive_iv(cfg: CipherConfig, t: int, group_id: int) -> bytes:
    """Deterministic 16-byte IV/nonce, unique per (session, t, group)."""
    digest = hashlib.sha256(
        cfg.session_salt
        + int(t).to_bytes(8, "big")
        + int(group_id).to_bytes(8, "big")
    ).digest()
    return digest[:16]


def _cipher(cfg: CipherConfig, iv: bytes) -> Cipher:
    if cfg.algorithm == "aes-cbc":
        return Cipher(algorithms.AES(cfg.key), modes.CBC(iv))
    return Cipher(algorithms.ChaCha20(cfg.key, iv), mode=None)


def _frame_plaintext(bits: np.ndarray, algorithm: str) -> bytes:
    payload = bytes_from_bits(bits)
    trailer = int(bits.size).to_bytes(TRAILER_BYTES, "big")
    if algorithm == "aes-cbc":
        pad = -(len(payload) + TRAILER_BYTES) % AES_BLOCK_BYTES
        return payload + b"\x00" * pad + trailer
    return payload + trailer


def _unframe_plaintext(plain: bytes) -> np.ndarray:
    if len(plain) < TRAILER_BYTES:
        return zero_bits(0)
    nbits = int.from_bytes(plain[-TRAILER_BYTES:], "big")
    capacity = 8 * (len(plain) - TRAILER_BYTES)
    nbits = min(nbits, capacity)  # a garbled trailer must not crash decode
    nbytes = (nbits + 7) // 8
    return bits_from_bytes(plain[:nbytes])[:nbits]


def encrypt_group(
    bits: np.ndarray, cfg: CipherConfig, t: int = 0, group_id: int = 0
) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    enc = _cipher(cfg, derive_iv(cfg, t, group_id)).encryptor()
    ct = enc.update(_frame_plaintext(bits, cfg.algorithm)) + enc.finalize()
    return bits_from_bytes(ct)


def decrypt_group(
    bits: np.ndarray, cfg: CipherConfig, t: int = 0, group_id: int = 0
) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise ConfigurationError("ciphertext length must be a whole number of bytes")
    ct = bytes_from_bits(bits)
    if cfg.algorithm == "aes-cbc" and len(ct) % AES_BLOCK_BYTES:
        raise ConfigurationError("AES-CBC ciphertext must be a multiple of 16 bytes")
    dec = _cipher(cfg, derive_iv(cfg, t, group_id)).decryptor()
    return _unframe_plaintext(dec.update(ct) + dec.finalize())


def ciphertext_bits_for(nbits: int, algorithm: str) -> int:
    """Ciphertext length produced by encrypt_group for an nbits payload."""
    nbytes = (nbits + 7) // 8 + TRAILER_BYTES
    if algorithm == "aes-cbc":
        nbytes += -nbytes % AES_BLOCK_BYTES
    return 8 * nbytes


def avalanche_fraction(
    algorithm: str,
    trials: int = 1000,
    seed: int = 0,
    message_bits: int = 256,
) -> float:
    """Mean fraction of payload bits corrupted by one ciphertext bit flip.

    The flip lands at a uniformly random position of the first
    payload-carrying ciphertext block, fresh key/salt per trial.
    """
    if trials < 100:
        raise ConfigurationError("need at least 100 trials for a stable estimate")
    rng = np.random.default_rng(seed)
    flip_span = min(8 * AES_BLOCK_BYTES, message_bits) if algorithm == "aes-cbc" else message_bits
    total = 0.0
    for trial in range(trials):
        key = rng.bytes(16 if algorithm == "aes-cbc" else 32)
        cfg = CipherConfig(algorithm, key, rng.bytes(8))
        plain = random_bits(rng, message_bits)
        ct = encrypt_group(plain, cfg, t=trial, group_id=0)
        pos = int(rng.integers(flip_span))
        ct[pos] ^= 1
        rec = decrypt_group(ct, cfg, t=trial, group_id=0)
        if rec.size < message_bits:
            rec = np.concatenate([rec, zero_bits(message_bits - rec.size)])
        total += float(np.mean(rec[:message_bits] != plain))
    return total / trials
