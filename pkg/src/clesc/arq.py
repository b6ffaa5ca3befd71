"""Priority-based transmit and receive pipelines with majority-vote ARQ.

Transmit order per packet: payload CRC, indication CRC, concatenation,
LDPC encoding at the level's rate, modulation, subcarrier mapping.

Receive order per packet: demap, demodulate, BP decode; verify the
indication check with up to T_I retransmissions, re-voting the
accumulated decoded copies before every recheck; once the indication
verifies, read the level and verify the payload check under that level's
retransmission budget the same way. Budget exhaustion is a verdict, not
an error: the final voted bits are passed upward so the semantic decoder
can degrade gracefully.

Voting combines post-decode hard bits. Ties (even copy counts) take the
bit from the most recent copy.

The per-packet path (`receive_packet`) is the readable reference; the
vectorized engine (`receive_packets_batch`) processes whole packet
populations in rounds with identical per-(packet, copy) channel seeding,
so both produce the same verdicts for the same seeds.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

from . import crc as crc_mod
from . import phy
from .bits import int_from_bits, zero_bits
from .errors import ConfigurationError
from .ldpc import CodeSet, LdpcCode, decode_bp
from .stack import HEADER_BITS, LEVEL_BITS

DEFAULT_RETRANS_BY_LEVEL = (2, 3, 4, 6, 10)
DEFAULT_INDICATION_RETRANS = 3


def retrans_for_level(level: int) -> int:
    if not 1 <= level <= 5:
        raise ConfigurationError(f"importance level must be 1..5, got {level}")
    return DEFAULT_RETRANS_BY_LEVEL[level - 1]


@dataclass(frozen=True)
class RetransmissionPolicy:
    payload_limits: tuple[int, ...] = DEFAULT_RETRANS_BY_LEVEL
    indication_limit: int = DEFAULT_INDICATION_RETRANS

    def __post_init__(self):
        if len(self.payload_limits) != 5:
            raise ConfigurationError("need one payload retransmission limit per level")
        if any(v < 0 for v in self.payload_limits):
            raise ConfigurationError("retransmission limits must be >= 0")
        if self.indication_limit < 1:
            raise ConfigurationError("indication retransmission limit must be >= 1")

    def payload_limit(self, level: int) -> int:
        return self.payload_limits[level - 1]


@dataclass
class PacketVerdict:
    accepted: bool
    copies: int
    indication_retx: int
    payload_retx: int
    indication_valid: bool
    payload_valid: bool
    level: int  # verified level, or 0 when the indication never verified

    @property
    def retransmissions(self) -> int:
        return self.indication_retx + self.payload_retx


@dataclass
class TxPacket:
    level: int
    s_i: np.ndarray  # header + payload bits
    s_c: np.ndarray  # s_i plus both CRC fields
    message: np.ndarray  # s_c zero-padded to the code's k
    codeword: np.ndarray
    grid: phy.SymbolGrid
    payload_bits: int


def majority_vote(copies) -> np.ndarray:
    """Per-position majority over equal-length copies, ties to the newest."""
    copies = [np.asarray(c, dtype=np.uint8) for c in copies]
    if not copies:
        raise ConfigurationError("majority vote needs at least one copy")
    length = copies[0].size
    if any(c.size != length for c in copies):
        raise ConfigurationError("majority vote needs equal-length copies")
    ones = np.sum(copies, axis=0, dtype=np.int64)
    u = len(copies)
    out = np.where(2 * ones > u, 1, 0).astype(np.uint8)
    tie = 2 * ones == u
    out[tie] = copies[-1][tie]
    return out


def _vote_from_counts(ones: np.ndarray, count: int, last: np.ndarray) -> np.ndarray:
    out = (2 * ones > count).astype(np.uint8)
    tie = 2 * ones == count
    out[tie] = last[tie]
    return out


# ---------------------------------------------------------------------------
# region layout inside the k-bit decoded message


@dataclass
class _Regions:
    level: int
    payload_len: int
    header: slice
    payload: slice
    payload_crc: slice
    indication_crc: slice


def _crc_for(level: int, crc_map) -> crc_mod.CrcPolynomial:
    return crc_mod.crc_for_level(level) if crc_map is None else crc_map[level]


def _parse_regions(msg: np.ndarray, k: int, crc_map=None) -> _Regions | None:
    """Self-consistent parse of an (unverified) decoded message.

    Returns None when the claimed layout cannot fit, which the caller
    treats exactly like a failed check.
    """
    level = int_from_bits(msg[:LEVEL_BITS])
    if not 1 <= level <= 5:
        return None
    payload_len = int_from_bits(msg[HEADER_BITS - 16 : HEADER_BITS])
    kc = _crc_for(level, crc_map).degree
    end = HEADER_BITS + payload_len + 2 * kc
    if end > k:
        return None
    return _Regions(
        level=level,
        payload_len=payload_len,
        header=slice(0, HEADER_BITS),
        payload=slice(HEADER_BITS, HEADER_BITS + payload_len),
        payload_crc=slice(HEADER_BITS + payload_len, HEADER_BITS + payload_len + kc),
        indication_crc=slice(HEADER_BITS + payload_len + kc, end),
    )


def _indication_ok(msg: np.ndarray, regions: _Regions | None, crc_map=None) -> bool:
    if regions is None:
        return False
    g = _crc_for(regions.level, crc_map)
    return crc_mod.verify_region(msg[regions.header], msg[regions.indication_crc], g)


def _payload_ok(msg: np.ndarray, regions: _Regions, crc_map=None) -> bool:
    g = _crc_for(regions.level, crc_map)
    return crc_mod.verify_region(msg[regions.payload], msg[regions.payload_crc], g)


# ---------------------------------------------------------------------------
# transmit pipeline (Algorithm 1 order)


def transmit_packet(
    s_i: np.ndarray,
    level: int,
    codes: CodeSet,
    cfg: phy.ChannelConfig,
    crc_map=None,
) -> TxPacket:
    s_i = np.asarray(s_i, dtype=np.uint8)
    if not 1 <= level <= 5:
        raise ConfigurationError(f"importance level must be 1..5, got {level}")
    if s_i.size < HEADER_BITS:
        raise ConfigurationError("packet bits shorter than the header")
    g = _crc_for(level, crc_map)
    header = s_i[:HEADER_BITS]
    payload = s_i[HEADER_BITS:]
    s_crc = crc_mod.crc_compute(payload, g)
    l_crc = crc_mod.crc_compute(header, g)
    s_c = crc_mod.append_checks(s_i, s_crc, l_crc)

    code = codes.for_level(level)
    if s_c.size > code.k:
        raise ConfigurationError(
            f"packet of {s_c.size} bits exceeds the code message size {code.k}"
        )
    message = np.concatenate([s_c, zero_bits(code.k - s_c.size)])
    codeword = code.encode(message)
    symbols = phy.modulate(codeword, cfg.modulation)
    grid = phy.map_subcarriers(symbols, cfg.subcarriers)
    return TxPacket(
        level=level,
        s_i=s_i,
        s_c=s_c,
        message=message,
        codeword=codeword,
        grid=grid,
        payload_bits=payload.size,
    )


def _entropy_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(repr(part).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def channel_copy_rng(entropy, packet_uid: int, copy_index: int) -> np.random.Generator:
    """Deterministic per-(packet, copy) stream shared by both receive paths."""
    base = entropy if isinstance(entropy, tuple) else (entropy,)
    words = tuple(_entropy_word(p) for p in base)
    return np.random.default_rng(
        np.random.SeedSequence((*words, int(packet_uid), int(copy_index)))
    )


def transmit_copy(
    tx: TxPacket, cfg: phy.ChannelConfig, rng: np.random.Generator
) -> tuple[np.ndarray, phy.ChannelState]:
    """One on-air transmission: fresh block fading, returns LLRs and state."""
    state = phy.realize_channel(cfg, rng)
    received = phy.apply_channel(tx.grid, state, rng)
    llr = phy.equalize_demod(received, state, cfg.modulation)
    return llr[: tx.codeword.size], state


# ---------------------------------------------------------------------------
# receive pipeline (Algorithm 2 order), per-packet reference


def receive_packet(
    copy_source,
    code: LdpcCode,
    policy: RetransmissionPolicy = RetransmissionPolicy(),
    max_iter: int = 50,
    crc_map=None,
) -> tuple[np.ndarray, PacketVerdict]:
    """Decode copies from copy_source(copy_index) -> LLR vector.

    Returns the delivered s_i bits (header + payload per the final voted
    layout) and the verdict. Exhaustion never raises.
    """
    k = code.k
    copies: list[np.ndarray] = []

    def fetch():
        llr = copy_source(len(copies))
        bits, _conv, _iters = decode_bp(llr, code, max_iter)
        copies.append(bits)

    fetch()
    ind_retx = 0
    regions = None
    indication_valid = False
    while True:
        voted = majority_vote(copies)
        regions = _parse_regions(voted, k, crc_map)
        if _indication_ok(voted, regions, crc_map):
            indication_valid = True
            break
        if ind_retx == policy.indication_limit:
            break
        fetch()
        ind_retx += 1

    if not indication_valid:
        # no trusted level, so no payload budget can be chosen
        verdict = PacketVerdict(
            accepted=False,
            copies=len(copies),
            indication_retx=ind_retx,
            payload_retx=0,
            indication_valid=False,
            payload_valid=False,
            level=0,
        )
        voted = majority_vote(copies)
        return voted[:HEADER_BITS], verdict

    level = regions.level
    frozen = regions
    pay_retx = 0
    payload_valid = False
    while True:
        voted = majority_vote(copies)
        # later votes can shift the header region too, so acceptance
        # requires both checks to pass on the same final voted bits
        if _payload_ok(voted, frozen, crc_map) and _indication_ok(voted, frozen, crc_map):
            payload_valid = True
            break
        if pay_retx == policy.payload_limit(level):
            break
        fetch()
        pay_retx += 1

    voted = majority_vote(copies)
    s_i = voted[: HEADER_BITS + frozen.payload_len]
    verdict = PacketVerdict(
        accepted=indication_valid and payload_valid,
        copies=len(copies),
        indication_retx=ind_retx,
        payload_retx=pay_retx,
        indication_valid=indication_valid,
        payload_valid=payload_valid,
        level=level,
    )
    if verdict.accepted:
        assert _payload_ok(voted, frozen, crc_map) and _indication_ok(voted, frozen, crc_map)
    return s_i, verdict


# ---------------------------------------------------------------------------
# vectorized receive engine


_PHASE_IND = 0
_PHASE_PAY = 1
_PHASE_DONE = 2


@dataclass
class BatchReceiveResult:
    delivered: list[np.ndarray]  # voted k-bit messages, one per packet
    verdicts: list[PacketVerdict]
    pre_fec_errors: int = 0
    pre_fec_bits: int = 0
    post_fec_errors: int = 0
    post_fec_bits: int = 0
    snr_db_sum: float = 0.0
    snr_samples: int = 0

    @property
    def mean_snr_db(self) -> float:
        return self.snr_db_sum / self.snr_samples if self.snr_samples else float("nan")


def receive_packets_batch(
    tx_packets: list[TxPacket],
    codes: CodeSet,
    cfg: phy.ChannelConfig,
    entropy,
    policy: RetransmissionPolicy = RetransmissionPolicy(),
    max_iter: int = 50,
    batch_size: int = 256,
    crc_map=None,
    stall_window: int | None = None,
) -> BatchReceiveResult:
    """Round-based, vectorized equivalent of receive_packet over a population.

    Packet p's copy c uses channel_copy_rng(entropy, p, c), so results are
    bit-identical to driving receive_packet with the same streams.
    """
    n_pkts = len(tx_packets)
    k = codes.k
    result = BatchReceiveResult(delivered=[None] * n_pkts, verdicts=[None] * n_pkts)
    if n_pkts == 0:
        return result

    ones = np.zeros((n_pkts, k), dtype=np.int32)
    last = np.zeros((n_pkts, k), dtype=np.uint8)
    n_copies = np.zeros(n_pkts, dtype=np.int64)
    phase = np.full(n_pkts, _PHASE_IND, dtype=np.int8)
    ind_retx = np.zeros(n_pkts, dtype=np.int64)
    pay_retx = np.zeros(n_pkts, dtype=np.int64)
    ind_valid = np.zeros(n_pkts, dtype=bool)
    pay_valid = np.zeros(n_pkts, dtype=bool)
    frozen_level = np.zeros(n_pkts, dtype=np.int64)
    frozen_plen = np.zeros(n_pkts, dtype=np.int64)

    need_copy = np.ones(n_pkts, dtype=bool)
    while need_copy.any():
        pending = np.flatnonzero(need_copy)
        # decode new copies level by level so each batch shares one code
        for level in range(1, 6):
            idx = pending[[tx_packets[p].level == level for p in pending]]
            if idx.size == 0:
                continue
            code = codes.for_level(level)
            for lo in range(0, idx.size, batch_size):
                chunk = idx[lo : lo + batch_size]
                llrs = np.empty((chunk.size, code.n))
                for row, p in enumerate(chunk):
                    rng = channel_copy_rng(entropy, int(p), int(n_copies[p]))
                    llr, state = transmit_copy(tx_packets[p], cfg, rng)
                    llrs[row] = llr
                    result.snr_db_sum += phy.snr_db(state)
                    result.snr_samples += 1
                    if n_copies[p] == 0:
                        hard = (llr < 0).astype(np.uint8)
                        result.pre_fec_errors += int(
                            (hard != tx_packets[p].codeword).sum()
                        )
                        result.pre_fec_bits += code.n
                bits, _conv, _iters = decode_bp(llrs, code, max_iter, stall_window)
                bits = np.atleast_2d(bits)
                first = n_copies[chunk] == 0
                if first.any():
                    tx_msgs = np.stack([tx_packets[p].message for p in chunk[first]])
                    result.post_fec_errors += int((bits[first] != tx_msgs).sum())
                    result.post_fec_bits += int(first.sum()) * k
                ones[chunk] += bits
                last[chunk] = bits
                n_copies[chunk] += 1
        need_copy[:] = False

        # state machine step on every still-open packet
        for p in np.flatnonzero(phase != _PHASE_DONE):
            voted = _vote_from_counts(ones[p], int(n_copies[p]), last[p])
            if phase[p] == _PHASE_IND:
                regions = _parse_regions(voted, k, crc_map)
                if _indication_ok(voted, regions, crc_map):
                    ind_valid[p] = True
                    frozen_level[p] = regions.level
                    frozen_plen[p] = regions.payload_len
                    phase[p] = _PHASE_PAY
                elif ind_retx[p] == policy.indication_limit:
                    phase[p] = _PHASE_DONE
                else:
                    ind_retx[p] += 1
                    need_copy[p] = True
                    continue
            if phase[p] == _PHASE_PAY:
                level = int(frozen_level[p])
                plen = int(frozen_plen[p])
                kc = _crc_for(level, crc_map).degree
                start = HEADER_BITS + plen
                regions = _Regions(
                    level=level,
                    payload_len=plen,
                    header=slice(0, HEADER_BITS),
                    payload=slice(HEADER_BITS, start),
                    payload_crc=slice(start, start + kc),
                    indication_crc=slice(start + kc, start + 2 * kc),
                )
                if _payload_ok(voted, regions, crc_map) and _indication_ok(
                    voted, regions, crc_map
                ):
                    pay_valid[p] = True
                    phase[p] = _PHASE_DONE
                elif pay_retx[p] == policy.payload_limit(level):
                    phase[p] = _PHASE_DONE
                else:
                    pay_retx[p] += 1
                    need_copy[p] = True

    for p in range(n_pkts):
        voted = _vote_from_counts(ones[p], int(n_copies[p]), last[p])
        result.delivered[p] = voted
        result.verdicts[p] = PacketVerdict(
            accepted=bool(ind_valid[p] and pay_valid[p]),
            copies=int(n_copies[p]),
            indication_retx=int(ind_retx[p]),
            payload_retx=int(pay_retx[p]),
            indication_valid=bool(ind_valid[p]),
            payload_valid=bool(pay_valid[p]),
            level=int(frozen_level[p]),
        )
    return result


def verdicts_to_csv(verdicts, path) -> None:
    """Verdict stream as CSV rows (packet id, level, copies, accepted)."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["packet_id", "level", "copies", "indication_retx", "payload_retx", "accepted"]
        )
        for i, v in enumerate(verdicts):
            writer.writerow(
                [i, v.level, v.copies, v.indication_retx, v.payload_retx, int(v.accepted)]
            )
