import sys
from pathlib import Path

import numpy as np
import pytest

from clesc import crypto
from clesc.bits import bytes_from_bits, random_bits
from clesc.errors import ConfigurationError

sys.path.insert(0, str(Path(__file__).parent / "reference"))
from aes_ref import aes128_cbc_encrypt  # noqa: E402

KEY16 = bytes(range(16))
KEY32 = bytes(range(32))


def _cfg(algorithm):
    return crypto.CipherConfig(algorithm, KEY16 if algorithm == "aes-cbc" else KEY32)


@pytest.mark.parametrize("algorithm", crypto.ALGORITHMS)
def test_round_trip_all_lengths(algorithm):
    cfg = _cfg(algorithm)
    rng = np.random.default_rng(0)
    for n in [1, 2, 7, 8, 9, 100, 127, 128, 129, 1000, 4095, 4096]:
        bits = random_bits(rng, n)
        ct = crypto.encrypt_group(bits, cfg, t=1, group_id=2)
        assert ct.size == crypto.ciphertext_bits_for(n, algorithm)
        assert np.array_equal(crypto.decrypt_group(ct, cfg, t=1, group_id=2), bits)


def test_ciphertext_lengths():
    # CBC pads to the 128-bit block grid; ChaCha20 adds only the trailer
    assert crypto.ciphertext_bits_for(128, "aes-cbc") == 256  # 16B + trailer -> 2 blocks
    assert crypto.ciphertext_bits_for(252, "aes-cbc") == 384
    assert crypto.ciphertext_bits_for(128, "chacha20") == 128 + 32


def test_distinct_ciphertexts_across_groups_and_slots():
    cfg = _cfg("aes-cbc")
    bits = random_bits(np.random.default_rng(1), 256)
    c00 = crypto.encrypt_group(bits, cfg, t=0, group_id=0)
    c01 = crypto.encrypt_group(bits, cfg, t=0, group_id=1)
    c10 = crypto.encrypt_group(bits, cfg, t=1, group_id=0)
    assert not np.array_equal(c00, c01)
    assert not np.array_equal(c00, c10)


def test_iv_uniqueness_collision_scan():
    cfg = _cfg("aes-cbc")
    seen = set()
    for t in range(64):
        for i in range(64):
            seen.add(crypto.derive_iv(cfg, t, i))
    assert len(seen) == 64 * 64


def test_aes_cbc_matches_independent_reference():
    # all-zero 256-bit plaintext, fixed key and (t, group) derived IV
    cfg = _cfg("aes-cbc")
    bits = np.zeros(256, np.uint8)
    ct = crypto.encrypt_group(bits, cfg, t=3, group_id=7)

    iv = crypto.derive_iv(cfg, 3, 7)
    framed = crypto._frame_plaintext(bits, "aes-cbc")
    expected = aes128_cbc_encrypt(cfg.key, iv, framed)
    assert bytes_from_bits(ct) == expected


def test_aes_cbc_nist_sp800_38a_vectors():
    key = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    iv = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    pt = bytes.fromhex(
        "6bc1bee22e409f96e93d7e117393172a"
        "ae2d8a571e03ac9c9eb76fac45af8e51"
        "30c81c46a35ce411e5fbc1191a0a52ef"
        "f69f2445df4f9b17ad2b417be66c3710"
    )
    expected = bytes.fromhex(
        "7649abac8119b246cee98e9b12e9197d"
        "5086cb9b507219ee95db113a917678b2"
        "73bed6b8e3c1743b7116e69e22229516"
        "3ff1caa1681fac09120eca307586e1a7"
    )
    assert aes128_cbc_encrypt(key, iv, pt) == expected  # reference vs NIST
    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

    enc = Cipher(algorithms.AES(key), modes.CBC(iv)).encryptor()
    assert enc.update(pt) + enc.finalize() == expected  # library vs NIST


def test_chacha20_rfc8439_keystream():
    import struct

    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

    key = bytes(range(32))
    nonce = struct.pack("<I", 1) + bytes.fromhex("000000000000004a00000000")
    pt = (
        b"Ladies and Gentlemen of the class of '99: If I could offer you "
        b"only one tip for the future, sunscreen would be it."
    )
    enc = Cipher(algorithms.ChaCha20(key, nonce), mode=None).encryptor()
    ct = enc.update(pt)
    # first ciphertext block per RFC 8439 section 2.4.2
    assert ct[:16].hex() == "6e2e359a2568f98041ba0728dd0d6981"
    assert ct[16:32].hex() == "e97e7aec1d4360c20a27afccfd9fae0b"


def test_cbc_single_flip_block_structure():
    """Flipping one ciphertext bit in block k garbles block k's plaintext
    (about half the bits) and flips exactly one bit in block k+1."""
    rng = np.random.default_rng(5)
    trials = 400
    frac_sum = 0.0
    for trial in range(trials):
        cfg = crypto.CipherConfig("aes-cbc", rng.bytes(16), rng.bytes(8))
        bits = random_bits(rng, 256)  # two payload blocks + trailer block
        ct = crypto.encrypt_group(bits, cfg, t=trial, group_id=0)
        pos = int(rng.integers(0, 128))  # inside ciphertext block 0
        ct2 = ct.copy()
        ct2[pos] ^= 1
        rec = crypto.decrypt_group(ct2, cfg, t=trial, group_id=0)
        assert rec.size == 256  # trailer block untouched
        block0_frac = float(np.mean(rec[:128] != bits[:128]))
        block1_flips = int(np.sum(rec[128:] != bits[128:]))
        assert block1_flips == 1
        frac_sum += block0_frac
    assert 0.45 <= frac_sum / trials <= 0.55


def test_chacha20_single_flip_single_bit():
    cfg = _cfg("chacha20")
    bits = random_bits(np.random.default_rng(6), 512)
    ct = crypto.encrypt_group(bits, cfg)
    ct[100] ^= 1
    rec = crypto.decrypt_group(ct, cfg)
    assert rec.size == bits.size
    assert int(np.sum(rec != bits)) == 1


def test_avalanche_fraction_examples():
    one_block = crypto.avalanche_fraction("aes-cbc", 300, seed=1, message_bits=128)
    assert 0.45 <= one_block <= 0.55
    two_block = crypto.avalanche_fraction("aes-cbc", 300, seed=2, message_bits=256)
    assert 0.20 <= two_block <= 0.30
    chacha = crypto.avalanche_fraction("chacha20", 300, seed=3, message_bits=256)
    assert chacha == pytest.approx(1.0 / 256.0, abs=1e-12)


def test_avalanche_requires_enough_trials():
    with pytest.raises(ConfigurationError):
        crypto.avalanche_fraction("aes-cbc", trials=10)


def test_corrupted_trailer_never_raises():
    cfg = _cfg("aes-cbc")
    bits = random_bits(np.random.default_rng(7), 200)
    ct = crypto.encrypt_group(bits, cfg)
    rng = np.random.default_rng(8)
    for _ in range(50):
        garbled = ct.copy()
        for pos in rng.integers(0, ct.size, size=10):
            garbled[pos] ^= 1
        out = crypto.decrypt_group(garbled, cfg)  # best effort, any length
        assert out.dtype == np.uint8


def test_configuration_errors():
    with pytest.raises(ConfigurationError):
        crypto.CipherConfig("aes-cbc", bytes(8))
    with pytest.raises(ConfigurationError):
        crypto.CipherConfig("chacha20", bytes(16))
    with pytest.raises(ConfigurationError):
        crypto.CipherConfig("des", bytes(16))
    cfg = _cfg("aes-cbc")
    with pytest.raises(ConfigurationError):
        crypto.decrypt_group(np.ones(100, np.uint8), cfg)  # not byte aligned
    with pytest.raises(ConfigurationError):
        crypto.decrypt_group(np.ones(72, np.uint8), cfg)  # not block aligned
