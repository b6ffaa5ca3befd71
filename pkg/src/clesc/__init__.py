"""Link-level simulator for cross-layer encrypted semantic transmission.

Layers, bottom-up: phy (OFDMA Rayleigh channel, BPSK/QPSK), ldpc
(rate-adaptive channel coding), crc + arq (importance-mapped checking,
retransmission and majority voting), stack (packets and priority
headers), crypto (per-group AES-CBC/ChaCha20), codec (surrogate semantic
codec with latitude-adaptive rate selection), metrics (WS-PSNR, WS-SSIM,
CBR) and sim (end-to-end sweeps).
"""

__version__ = "0.1.0"

from .codec import (
    CodecConfig,
    CodewordGroup,
    adaptive_weight_map,
    decode_frame,
    dimension_select,
    encode_frame,
    group,
    importance_levels,
    latitude_weight_map,
    ungroup,
)
from .crypto import CipherConfig, avalanche_fraction, decrypt_group, encrypt_group
from .crc import crc_compute, crc_for_level, verify_region
from .ldpc import CodeSet, build_code, decode_bp, rate_for_level
from .arq import (
    RetransmissionPolicy,
    majority_vote,
    receive_packet,
    retrans_for_level,
    transmit_packet,
)
from .metrics import QualityReport, cbr, wmse, ws_psnr, ws_ssim
from .phy import ChannelConfig, modulate, path_loss_db, realize_channel, snr_db
from .sim import SimConfig, run_point, run_sweep
from .stack import attach_header, packetize, reassemble, strip_header
