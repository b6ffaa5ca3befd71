"""End-to-end experiment driver: config, per-point pipeline, sweeps, CSV.

One sweep point runs the whole chain for every frame of a GoP:

    encode_frame -> encrypt -> packetize/tag -> transmit -> channel ->
    receive (vote + retransmit) -> extract/reassemble -> decrypt ->
    decode_frame -> metrics

Every random draw derives from (seed, point_index, frame, packet, copy),
so a config plus seed fully determines every output byte.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import arq, crypto, metrics, phy, stack
from .codec import (
    CodecConfig,
    CodewordGroup,
    decode_frame,
    encode_frame,
    latitude_weight_map,
)
from .crc import POLYNOMIALS_BY_DEGREE
from .errors import ClescError, ConfigurationError
from .frames import read_ppm, read_raw, synthetic_frame, validate_frame
from .ldpc import CodeSet

SCHEMA_VERSION = 1

DEFAULT_KEY_HEX = "000102030405060708090a0b0c0d0e0f"
DEFAULT_CRC_BITS = (4, 8, 16, 24, 32)
DEFAULT_RATES = ("2/3", "2/3", "1/2", "1/2", "1/3")


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    # frame source
    frame_source: str = "synthetic"  # "synthetic" or a .ppm/.raw path
    frame_height: int = 128
    frame_width: int = 256
    gop_size: int = 1
    # codec
    m_h: int = 4
    m_w: int = 4
    q_set: tuple[int, ...] = CodecConfig().q_set
    quant_step: float = 16.0
    codec_mode: str = "intra"
    latitude_adaptive: bool = True
    # cipher
    cipher_algorithm: str = "aes-cbc"
    key_hex: str = DEFAULT_KEY_HEX
    salt_hex: str = "0000000000000000"
    # stack
    packet_size: int = 1024
    # ldpc
    message_bits: int = 1144
    ldpc_seed: int = 0
    max_bp_iter: int = 50
    # phy
    subcarriers: int = 256
    carrier_ghz: float = 2.6
    bandwidth_hz: float = 200e6
    tx_psd_dbm_hz: float = -53.0
    noise_psd_dbm_hz: float = -143.0
    distance_m: float = 100.0
    modulation: str = "bpsk"
    noiseless: bool = False
    # level tables
    crc_bits_by_level: tuple[int, ...] = DEFAULT_CRC_BITS
    rate_by_level: tuple[str, ...] = DEFAULT_RATES
    retrans_by_level: tuple[int, ...] = arq.DEFAULT_RETRANS_BY_LEVEL
    indication_retrans: int = arq.DEFAULT_INDICATION_RETRANS
    # sweep
    sweep_type: str = "snr_db"  # "snr_db" or "distance_m"
    sweep_values: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.gop_size < 1:
            raise ConfigurationError("GoP size must be >= 1")
        for name in ("crc_bits_by_level", "rate_by_level", "retrans_by_level"):
            if len(getattr(self, name)) != 5:
                raise ConfigurationError(f"{name} must list exactly 5 entries")
        for bits in self.crc_bits_by_level:
            if bits not in POLYNOMIALS_BY_DEGREE:
                raise ConfigurationError(
                    f"no polynomial of degree {bits}; supported: "
                    f"{sorted(POLYNOMIALS_BY_DEGREE)}"
                )
        if not self.sweep_values:
            raise ConfigurationError("sweep list must be nonempty")
        if self.sweep_type not in ("snr_db", "distance_m"):
            raise ConfigurationError(f"unknown sweep type {self.sweep_type!r}")
        if self.seed is None:
            raise ConfigurationError("a seed is mandatory for reproducibility")
        max_s_c = (
            stack.HEADER_BITS + self.packet_size + 2 * max(self.crc_bits_by_level)
        )
        if max_s_c > self.message_bits:
            raise ConfigurationError(
                f"message_bits={self.message_bits} cannot hold a full packet "
                f"({max_s_c} bits with checks)"
            )

    # derived objects -------------------------------------------------

    def codec_config(self) -> CodecConfig:
        return CodecConfig(
            q_set=tuple(self.q_set),
            quant_step=self.quant_step,
            mode=self.codec_mode,
            m_h=self.m_h,
            m_w=self.m_w,
            latitude_adaptive=self.latitude_adaptive,
        )

    def cipher_config(self) -> crypto.CipherConfig:
        return crypto.CipherConfig.from_hex(
            self.cipher_algorithm, self.key_hex, self.salt_hex
        )

    def channel_config(self) -> phy.ChannelConfig:
        return phy.ChannelConfig(
            subcarriers=self.subcarriers,
            carrier_ghz=self.carrier_ghz,
            bandwidth_hz=self.bandwidth_hz,
            tx_psd_dbm_hz=self.tx_psd_dbm_hz,
            noise_psd_dbm_hz=self.noise_psd_dbm_hz,
            distance_m=self.distance_m,
            modulation=self.modulation,
            noiseless=self.noiseless,
        )

    def crc_map(self) -> dict:
        return {
            level: POLYNOMIALS_BY_DEGREE[bits]
            for level, bits in enumerate(self.crc_bits_by_level, start=1)
        }

    def rate_map(self) -> dict:
        return {
            level: Fraction(rate)
            for level, rate in enumerate(self.rate_by_level, start=1)
        }

    def policy(self) -> arq.RetransmissionPolicy:
        return arq.RetransmissionPolicy(
            payload_limits=tuple(self.retrans_by_level),
            indication_limit=self.indication_retrans,
        )

    def build_codes(self) -> CodeSet:
        return CodeSet(self.message_bits, self.ldpc_seed, self.rate_map())

    # json round trip --------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "frame": {
                "source": self.frame_source,
                "height": self.frame_height,
                "width": self.frame_width,
                "gop": self.gop_size,
            },
            "codec": {
                "m_h": self.m_h,
                "m_w": self.m_w,
                "q_set": list(self.q_set),
                "quant_step": self.quant_step,
                "mode": self.codec_mode,
                "latitude_adaptive": self.latitude_adaptive,
            },
            "cipher": {
                "algorithm": self.cipher_algorithm,
                "key_hex": self.key_hex,
                "salt_hex": self.salt_hex,
            },
            "stack": {"packet_size": self.packet_size},
            "ldpc": {
                "message_bits": self.message_bits,
                "construction_seed": self.ldpc_seed,
                "max_bp_iter": self.max_bp_iter,
            },
            "phy": {
                "subcarriers": self.subcarriers,
                "carrier_ghz": self.carrier_ghz,
                "bandwidth_hz": self.bandwidth_hz,
                "tx_psd_dbm_hz": self.tx_psd_dbm_hz,
                "noise_psd_dbm_hz": self.noise_psd_dbm_hz,
                "distance_m": self.distance_m,
                "modulation": self.modulation,
                "noiseless": self.noiseless,
            },
            "arq": {
                "crc_bits_by_level": list(self.crc_bits_by_level),
                "rate_by_level": list(self.rate_by_level),
                "retrans_by_level": list(self.retrans_by_level),
                "indication_retrans": self.indication_retrans,
            },
            "sweep": {"type": self.sweep_type, "values": list(self.sweep_values)},
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        data = json.loads(text)
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigurationError(
                f"config schema_version {version!r} != supported {SCHEMA_VERSION}"
            )
        frame = data.get("frame", {})
        codec = data.get("codec", {})
        cipher = data.get("cipher", {})
        pstack = data.get("stack", {})
        ldpc_cfg = data.get("ldpc", {})
        phy_cfg = data.get("phy", {})
        arq_cfg = data.get("arq", {})
        sweep = data.get("sweep", {})
        base = cls()
        return cls(
            seed=data.get("seed", base.seed),
            frame_source=frame.get("source", base.frame_source),
            frame_height=frame.get("height", base.frame_height),
            frame_width=frame.get("width", base.frame_width),
            gop_size=frame.get("gop", base.gop_size),
            m_h=codec.get("m_h", base.m_h),
            m_w=codec.get("m_w", base.m_w),
            q_set=tuple(codec.get("q_set", base.q_set)),
            quant_step=codec.get("quant_step", base.quant_step),
            codec_mode=codec.get("mode", base.codec_mode),
            latitude_adaptive=codec.get("latitude_adaptive", base.latitude_adaptive),
            cipher_algorithm=cipher.get("algorithm", base.cipher_algorithm),
            key_hex=cipher.get("key_hex", base.key_hex),
            salt_hex=cipher.get("salt_hex", base.salt_hex),
            packet_size=pstack.get("packet_size", base.packet_size),
            message_bits=ldpc_cfg.get("message_bits", base.message_bits),
            ldpc_seed=ldpc_cfg.get("construction_seed", base.ldpc_seed),
            max_bp_iter=ldpc_cfg.get("max_bp_iter", base.max_bp_iter),
            subcarriers=phy_cfg.get("subcarriers", base.subcarriers),
            carrier_ghz=phy_cfg.get("carrier_ghz", base.carrier_ghz),
            bandwidth_hz=phy_cfg.get("bandwidth_hz", base.bandwidth_hz),
            tx_psd_dbm_hz=phy_cfg.get("tx_psd_dbm_hz", base.tx_psd_dbm_hz),
            noise_psd_dbm_hz=phy_cfg.get("noise_psd_dbm_hz", base.noise_psd_dbm_hz),
            distance_m=phy_cfg.get("distance_m", base.distance_m),
            modulation=phy_cfg.get("modulation", base.modulation),
            noiseless=phy_cfg.get("noiseless", base.noiseless),
            crc_bits_by_level=tuple(
                arq_cfg.get("crc_bits_by_level", base.crc_bits_by_level)
            ),
            rate_by_level=tuple(arq_cfg.get("rate_by_level", base.rate_by_level)),
            retrans_by_level=tuple(
                arq_cfg.get("retrans_by_level", base.retrans_by_level)
            ),
            indication_retrans=arq_cfg.get(
                "indication_retrans", base.indication_retrans
            ),
            sweep_type=sweep.get("type", base.sweep_type),
            sweep_values=tuple(sweep.get("values", base.sweep_values)),
        )


# ---------------------------------------------------------------------------
# frame sources


def load_frames(cfg: SimConfig) -> list[np.ndarray]:
    if cfg.frame_source == "synthetic":
        return [
            synthetic_frame(cfg.frame_height, cfg.frame_width, cfg.seed, t)
            for t in range(cfg.gop_size)
        ]
    if cfg.frame_source.endswith(".ppm"):
        frame = read_ppm(cfg.frame_source)
    else:
        frame = read_raw(cfg.frame_source, cfg.frame_height, cfg.frame_width)
    return [validate_frame(frame)] * cfg.gop_size


# ---------------------------------------------------------------------------
# one sweep point


@dataclass
class PointResult:
    report: metrics.QualityReport
    verdicts: list
    packets_exact: bool  # every delivered s_i equals its transmitted s_i
    recon_matches_codec_only: bool
    counters: dict


def _extract_payload(delivered_msg: np.ndarray, payload_bits: int) -> np.ndarray:
    """Payload region at the transmit-side layout, used even when the
    packet never verified so the semantic decoder can degrade gracefully."""
    return delivered_msg[stack.HEADER_BITS : stack.HEADER_BITS + payload_bits]


def run_point(
    cfg: SimConfig,
    sweep_value: float,
    point_index: int = 0,
    codes: CodeSet | None = None,
    collect_verdicts: bool = False,
) -> PointResult:
    codec_cfg = cfg.codec_config()
    cipher = cfg.cipher_config()
    chan = cfg.channel_config().with_sweep_value(cfg.sweep_type, sweep_value)
    policy = cfg.policy()
    crc_map = cfg.crc_map()
    if codes is None:
        codes = cfg.build_codes()

    frames = load_frames(cfg)
    weights = None

    psnrs, ssims, symbol_counts = [], [], []
    pre_err = pre_bits = post_err = post_bits = 0
    snr_sum = 0.0
    snr_n = 0
    pkt_sent = np.zeros(6, dtype=np.int64)
    pkt_bad = np.zeros(6, dtype=np.int64)
    retx_sum = np.zeros(6, dtype=np.int64)
    all_verdicts = []
    packets_exact = True
    recon_matches = True

    tx_ref = None  # encoder-side reference for delta mode
    rx_ref = None
    for t, frame in enumerate(frames):
        enc = encode_frame(frame, tx_ref, codec_cfg)

        tx_packets: list[arq.TxPacket] = []
        plan = []  # (group, ciphertext_bits, payload_sizes)
        for g in enc.groups:
            cipher_bits = crypto.encrypt_group(g.bits, cipher, t, g.index)
            payloads = stack.packetize(cipher_bits, cfg.packet_size)
            sizes = []
            for seq, payload in enumerate(payloads):
                s_i = stack.attach_header(payload, g.level, g.index, seq)
                tx_packets.append(
                    arq.transmit_packet(s_i, g.level, codes, chan, crc_map)
                )
                sizes.append(payload.size)
            if sum(sizes) != cipher_bits.size:
                raise AssertionError("packetization lost payload bits")
            plan.append((g, cipher_bits.size, sizes))

        batch = arq.receive_packets_batch(
            tx_packets,
            codes,
            chan,
            entropy=(cfg.seed, point_index, t),
            policy=policy,
            max_iter=cfg.max_bp_iter,
            crc_map=crc_map,
        )
        pre_err += batch.pre_fec_errors
        pre_bits += batch.pre_fec_bits
        post_err += batch.post_fec_errors
        post_bits += batch.post_fec_bits
        snr_sum += batch.snr_db_sum
        snr_n += batch.snr_samples
        if collect_verdicts:
            all_verdicts.extend(batch.verdicts)

        # first-transmission symbols define the channel bandwidth cost
        symbol_counts.append(sum(tx.grid.n_symbols for tx in tx_packets))

        # per-level accounting, then group reassembly: verified groups go
        # through the real header-strip path, unverified ones fall back to
        # positional payload extraction so decoding can degrade gracefully
        rx_groups: list[CodewordGroup] = []
        pkt_cursor = 0
        for g, cipher_len, sizes in plan:
            pieces = []
            group_packets = []
            group_accepted = True
            for size in sizes:
                tx = tx_packets[pkt_cursor]
                delivered = batch.delivered[pkt_cursor]
                verdict = batch.verdicts[pkt_cursor]
                lvl = tx.level
                pkt_sent[lvl] += 1
                retx_sum[lvl] += verdict.retransmissions
                group_accepted &= verdict.accepted
                s_i_rx = delivered[: tx.s_i.size]
                if not np.array_equal(s_i_rx, tx.s_i):
                    pkt_bad[lvl] += 1
                    packets_exact = False
                group_packets.append(s_i_rx)
                pieces.append(_extract_payload(delivered, size))
                pkt_cursor += 1
            received_cipher = None
            if group_accepted:
                try:
                    received_cipher = stack.reassemble(group_packets, len(sizes))
                except ClescError:
                    received_cipher = None  # undetected corruption slipped the CRC
            if received_cipher is None:
                received_cipher = (
                    np.concatenate(pieces) if pieces else np.zeros(0, np.uint8)
                )
            if received_cipher.size != cipher_len:
                raise AssertionError("reassembled payload bits != packetized bits")
            plain = crypto.decrypt_group(received_cipher, cipher, t, g.index)
            rx_groups.append(
                CodewordGroup(index=g.index, bits=plain, level=g.level, dims=g.dims)
            )

        recon = decode_frame(rx_groups, rx_ref, codec_cfg)
        clean = decode_frame(enc.groups, tx_ref, codec_cfg)
        if not np.array_equal(recon, clean):
            recon_matches = False

        if weights is None:
            weights = latitude_weight_map(frame.shape[0], frame.shape[1])
        psnrs.append(metrics.ws_psnr(frame, recon, weights))
        ssims.append(metrics.ws_ssim(frame, recon, weights))

        tx_ref = clean
        rx_ref = recon

    h, w = frames[0].shape[:2]
    report = metrics.QualityReport(
        sweep_value=float(sweep_value),
        snr_db=snr_sum / snr_n if snr_n else float("nan"),
        cbr=metrics.cbr(symbol_counts, h, w),
        ws_psnr=float(np.mean(psnrs)),
        ws_ssim=float(np.mean(ssims)),
        ber_pre_fec=pre_err / pre_bits if pre_bits else 0.0,
        ber_post_fec=post_err / post_bits if post_bits else 0.0,
        pkt_err_rate_by_level=tuple(
            pkt_bad[l] / pkt_sent[l] if pkt_sent[l] else 0.0 for l in range(1, 6)
        ),
        mean_retx_by_level=tuple(
            retx_sum[l] / pkt_sent[l] if pkt_sent[l] else 0.0 for l in range(1, 6)
        ),
    )
    counters = {
        "packets": int(pkt_sent.sum()),
        "packets_by_level": [int(v) for v in pkt_sent[1:]],
        "retransmissions_by_level": [int(v) for v in retx_sum[1:]],
        "symbols_first_tx": int(np.sum(symbol_counts)),
        "pre_fec_bits": pre_bits,
        "post_fec_bits": post_bits,
    }
    return PointResult(
        report=report,
        verdicts=all_verdicts,
        packets_exact=packets_exact,
        recon_matches_codec_only=recon_matches,
        counters=counters,
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SimReport:
    rows: list[metrics.QualityReport]
    counters: list[dict]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(metrics.QualityReport.CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_row())
        return buf.getvalue()


def run_sweep(cfg: SimConfig, out_path=None) -> SimReport:
    codes = cfg.build_codes()
    rows = []
    counters = []
    for i, value in enumerate(cfg.sweep_values):
        result = run_point(cfg, value, point_index=i, codes=codes)
        rows.append(result.report)
        counters.append(result.counters)
    report = SimReport(rows=rows, counters=counters)
    if out_path is not None:
        with open(out_path, "w", encoding="ascii", newline="") as fh:
            fh.write(report.to_csv())
    return report
