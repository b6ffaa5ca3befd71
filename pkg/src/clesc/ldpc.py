"""Rate-adaptive LDPC codes with sum-product belief-propagation decoding.

Construction is column-weight-3, seeded and deterministic: each column
picks the least-loaded check rows that do not repeat an already-used row
pair, which keeps the girth at 6 (no 4-cycles) whenever the row budget
allows. Systematic form comes from GF(2) Gauss-Jordan elimination on
bit-packed rows; message bits occupy the first k codeword positions.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse

from .errors import ConfigurationError

SUPPORTED_RATES = (Fraction(2, 3), Fraction(1, 2), Fraction(1, 3))
LEVEL_RATES = {
    1: Fraction(2, 3),
    2: Fraction(2, 3),
    3: Fraction(1, 2),
    4: Fraction(1, 2),
    5: Fraction(1, 3),
}

COLUMN_WEIGHT = 3
LLR_CLAMP = 30.0
DEFAULT_MAX_ITER = 50


def rate_for_level(level: int) -> Fraction:
    if level not in LEVEL_RATES:
        raise ConfigurationError(f"importance level must be 1..5, got {level}")
    return LEVEL_RATES[level]


# ---------------------------------------------------------------------------
# GF(2) row elimination on uint64-packed rows


_WORD_SHIFTS = np.uint64(63) - np.arange(64, dtype=np.uint64)


def _pack_rows(mat: np.ndarray) -> np.ndarray:
    """Bit c of a row lands in word c // 64 at shift 63 - c % 64."""
    rows, cols = mat.shape
    pad = -cols % 64
    if pad:
        mat = np.concatenate([mat, np.zeros((rows, pad), np.uint8)], axis=1)
    chunks = mat.reshape(rows, -1, 64).astype(np.uint64)
    return np.bitwise_or.reduce(chunks << _WORD_SHIFTS, axis=2)


def _unpack_rows(packed: np.ndarray, cols: int) -> np.ndarray:
    bits = (packed[:, :, None] >> _WORD_SHIFTS) & np.uint64(1)
    return bits.reshape(packed.shape[0], -1)[:, :cols].astype(np.uint8)


def _rref(packed: np.ndarray, cols: int) -> list[int]:
    """In-place reduced row echelon form; returns the pivot column list."""
    rows = packed.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        word, bit = divmod(c, 64)
        colbits = (packed[r:, word] >> np.uint64(63 - bit)) & np.uint64(1)
        hits = np.flatnonzero(colbits)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            packed[[r, p]] = packed[[p, r]]
        col_all = (packed[:, word] >> np.uint64(63 - bit)) & np.uint64(1)
        col_all[r] = 0
        targets = np.flatnonzero(col_all)
        if targets.size:
            packed[targets] ^= packed[r]
        pivots.append(c)
        r += 1
    return pivots


# ---------------------------------------------------------------------------
# code object


@dataclass
class LdpcCode:
    n: int
    k: int
    rate: Fraction
    seed: int
    h: scipy.sparse.csr_matrix  # (n-k) x n over GF(2)
    parity_map: np.ndarray  # (n-k) x k, parity = parity_map @ msg mod 2
    reused_pairs: int  # row pairs reused during construction (4-cycle count bound)

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def generator(self) -> np.ndarray:
        """Systematic generator [I_k | parity_map^T], shape (k, n)."""
        return np.concatenate(
            [np.eye(self.k, dtype=np.uint8), self.parity_map.T], axis=1
        )

    def encode(self, msg: np.ndarray) -> np.ndarray:
        """Systematic codeword(s) for (k,) or (batch, k) message bits."""
        msg = np.asarray(msg, dtype=np.uint8)
        single = msg.ndim == 1
        msg2 = np.atleast_2d(msg)
        if msg2.shape[1] != self.k:
            raise ConfigurationError(
                f"message length {msg2.shape[1]} != k = {self.k}"
            )
        parity = (
            msg2.astype(np.float32) @ self.parity_map.T.astype(np.float32)
        ).astype(np.int64) & 1
        cw = np.concatenate([msg2, parity.astype(np.uint8)], axis=1)
        return cw[0] if single else cw

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        bits2 = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        s = self.h.dot(bits2.T.astype(np.int64)) & 1
        return s.T if np.asarray(bits).ndim > 1 else s.ravel()


def _construct_columns(n: int, m: int, rng: np.random.Generator):
    """Column-weight-3 row assignment avoiding repeated row pairs."""
    loads = np.zeros(m, dtype=np.int64)
    used: set[int] = set()
    columns = []
    reused = 0
    for _ in range(n):
        order = np.argsort(loads + rng.random(m), kind="stable")
        chosen: list[int] = []
        for r in order:
            r = int(r)
            if all(_pair_key(r, c, m) not in used for c in chosen):
                chosen.append(r)
                if len(chosen) == COLUMN_WEIGHT:
                    break
        if len(chosen) < COLUMN_WEIGHT:
            for r in order:
                r = int(r)
                if r not in chosen:
                    chosen.append(r)
                    reused += 1
                    if len(chosen) == COLUMN_WEIGHT:
                        break
        for a in range(COLUMN_WEIGHT):
            for b in range(a + 1, COLUMN_WEIGHT):
                used.add(_pair_key(chosen[a], chosen[b], m))
        loads[chosen] += 1
        columns.append(sorted(chosen))
    return columns, reused


def _pair_key(a: int, b: int, m: int) -> int:
    return min(a, b) * m + max(a, b)


def build_code(k: int, rate, seed: int = 0, max_attempts: int = 10) -> LdpcCode:
    """Deterministic seeded construction in systematic form.

    Retries with derived seeds if elimination finds a rank-deficient
    parity-check matrix, then raises.
    """
    rate = Fraction(rate)
    if rate not in SUPPORTED_RATES:
        raise ConfigurationError(f"unsupported code rate {rate}")
    if k < 8:
        raise ConfigurationError("message size must be at least 8 bits")
    n_frac = Fraction(k) / rate
    if n_frac.denominator != 1:
        raise ConfigurationError(f"k={k} is not divisible for rate {rate}")
    n = int(n_frac)
    m = n - k
    if m < COLUMN_WEIGHT:
        raise ConfigurationError("parity block too small for column weight 3")

    for attempt in range(max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt, n, m)))
        columns, reused = _construct_columns(n, m, rng)
        dense = np.zeros((m, n), dtype=np.uint8)
        for j, rows in enumerate(columns):
            dense[rows, j] = 1

        packed = _pack_rows(dense)
        pivots = _rref(packed, n)
        if len(pivots) < m:
            continue  # singular parity block: reseed and retry
        reduced = _unpack_rows(packed, n)
        pivot_cols = np.array(pivots, dtype=np.int64)
        msg_cols = np.setdiff1d(np.arange(n), pivot_cols)
        perm = np.concatenate([msg_cols, pivot_cols])
        h_perm = dense[:, perm]
        parity_map = reduced[:, msg_cols]  # (H2^-1 H1) from the same elimination

        code = LdpcCode(
            n=n,
            k=k,
            rate=rate,
            seed=seed,
            h=scipy.sparse.csr_matrix(h_perm),
            parity_map=np.ascontiguousarray(parity_map),
            reused_pairs=reused,
        )
        _check_generator(code, h_perm)
        _attach_edges(code)
        return code
    raise ConfigurationError(
        f"could not build a full-rank rate-{rate} code for k={k} "
        f"after {max_attempts} attempts"
    )


def _check_generator(code: LdpcCode, h_dense: np.ndarray) -> None:
    prod = h_dense.astype(np.float32) @ code.generator.T.astype(np.float32)
    if np.any(prod.astype(np.int64) & 1):
        raise ConfigurationError("generator/parity-check orthogonality failed")


def _attach_edges(code: LdpcCode) -> None:
    """Precompute edge arrays for the message-passing schedule."""
    coo = code.h.tocoo()
    order = np.lexsort((coo.col, coo.row))  # canonical: sorted by check node
    code.edge_c = coo.row[order].astype(np.int64)
    code.edge_v = coo.col[order].astype(np.int64)
    code.check_starts = np.flatnonzero(
        np.diff(code.edge_c, prepend=-1)
    ).astype(np.int64)
    seg_sizes = np.diff(np.append(code.check_starts, code.edge_c.size))
    code.edge_seg = np.repeat(
        np.arange(code.check_starts.size, dtype=np.int64), seg_sizes
    )
    code.check_ends = np.append(code.check_starts[1:], code.edge_c.size) - 1
    var_perm = np.argsort(code.edge_v, kind="stable")
    code.var_perm = var_perm
    code.var_starts = np.flatnonzero(
        np.diff(code.edge_v[var_perm], prepend=-1)
    ).astype(np.int64)
    if code.var_starts.size != code.n:
        raise ConfigurationError("every codeword position needs at least one edge")
    counts = np.diff(np.append(code.var_starts, code.edge_v.size))
    if not np.all(counts == COLUMN_WEIGHT):
        raise ConfigurationError("decoder expects a column-regular code")
    # per-check summation as a sparse product: (checks x edges) one-hot
    n_edges = code.edge_c.size
    code.check_sum_matrix = scipy.sparse.csr_matrix(
        (
            np.ones(n_edges, dtype=np.float32),
            (code.edge_seg, np.arange(n_edges)),
        ),
        shape=(code.check_starts.size, n_edges),
    )


# ---------------------------------------------------------------------------
# belief-propagation decoding


def decode_bp(
    llr: np.ndarray,
    code: LdpcCode,
    max_iter: int = DEFAULT_MAX_ITER,
    stall_window: int | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sum-product decoding of channel LLRs (positive means bit 0).

    Accepts a single (n,) vector or a (batch, n) matrix. Returns message
    bits, a converged flag and the iteration count; non-convergence yields
    the best hard decision with converged False, never an error.

    stall_window, if set, abandons a codeword whose unsatisfied-check
    count has not improved for that many iterations; decoding that would
    still converge within max_iter is then occasionally cut short, so it
    is off by default and meant for large Monte-Carlo runs.

    Check messages are evaluated in float32 (inputs capped at +-17 so
    tanh stays strictly inside (-1, 1)); accumulated beliefs stay float64.
    """
    arr = np.asarray(llr, dtype=np.float64)
    single = arr.ndim == 1
    L = np.clip(np.atleast_2d(arr), -LLR_CLAMP, LLR_CLAMP).astype(np.float32)
    batch, n = L.shape
    if n != code.n:
        raise ConfigurationError(f"LLR length {n} != n = {code.n}")

    hard = (L < 0).astype(np.uint8)
    done = ~np.any(code.syndrome(hard), axis=1)
    iterations = np.zeros(batch, dtype=np.int64)
    converged = done.copy()

    mu_vc = L[:, code.edge_v]
    active = np.flatnonzero(~done)
    best_unsat = np.full(batch, np.iinfo(np.int64).max, dtype=np.int64)
    last_gain = np.zeros(batch, dtype=np.int64)
    tanh_cap = np.float32(np.tanh(8.5))  # stays strictly below 1.0 in float32
    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        whole = active.size == batch
        m = mu_vc if whole else mu_vc[active]
        m = np.clip(m, np.float32(-17.0), np.float32(17.0))
        m *= np.float32(0.5)
        t = np.tanh(m, out=m)
        neg = np.signbit(t)
        mag = np.abs(t, out=t)
        np.clip(mag, np.float32(1e-37), tanh_cap, out=mag)
        lt = np.log(mag, out=mag)
        # per-check totals, then remove each edge's own contribution
        sums = (code.check_sum_matrix @ lt.T).T
        parity = (code.check_sum_matrix @ neg.astype(np.float32).T).T
        ext_log = sums[:, code.edge_seg]
        ext_log -= lt
        np.minimum(ext_log, np.float32(0.0), out=ext_log)
        ext = np.exp(ext_log, out=ext_log)
        np.minimum(ext, np.float32(1.0) - np.float32(6e-8), out=ext)
        np.arctanh(ext, out=ext)
        odd = (parity[:, code.edge_seg].astype(np.int32) - neg) & 1
        sign = np.float32(2.0) - np.float32(4.0) * odd
        ext *= sign  # carries both the x2 factor and the extrinsic sign
        mu_cv = np.clip(ext, -LLR_CLAMP, LLR_CLAMP, out=ext)

        # column weight is exactly 3, so per-variable sums reshape cleanly
        belief = mu_cv[:, code.var_perm].reshape(-1, n, COLUMN_WEIGHT).sum(axis=2)
        total = (L if whole else L[active]) + belief
        fresh = total[:, code.edge_v]
        fresh -= mu_cv
        if whole:
            mu_vc = fresh
        else:
            mu_vc[active] = fresh

        hard_a = (total < 0).astype(np.uint8)
        hard[active] = hard_a
        unsat = code.syndrome(hard_a).sum(axis=1)
        ok = unsat == 0
        iterations[active] = it
        keep = ~ok
        if stall_window is not None:
            improved = unsat < best_unsat[active]
            best_unsat[active] = np.minimum(best_unsat[active], unsat)
            last_gain[active[improved]] = it
            keep &= (it - last_gain[active]) < stall_window
        if not keep.all():
            converged[active[ok]] = True
            active = active[keep]

    msg = hard[:, : code.k]
    if single:
        return msg[0], bool(converged[0]), int(iterations[0])
    return msg, converged, iterations


# ---------------------------------------------------------------------------
# code set keyed by importance level


class CodeSet:
    """The rate-distinct codes sharing one message size, keyed by level."""

    def __init__(self, k: int = 1144, seed: int = 0, rate_by_level=None):
        self.k = k
        self.seed = seed
        if rate_by_level is None:
            self.rate_by_level = dict(LEVEL_RATES)
        else:
            self.rate_by_level = {
                level: Fraction(rate) for level, rate in rate_by_level.items()
            }
            if sorted(self.rate_by_level) != list(range(1, 6)):
                raise ConfigurationError("rate table must cover levels 1..5")
        needed = sorted(set(self.rate_by_level.values()), reverse=True)
        self._codes = {rate: build_code(k, rate, seed) for rate in needed}

    def for_rate(self, rate) -> LdpcCode:
        return self._codes[Fraction(rate)]

    def for_level(self, level: int) -> LdpcCode:
        return self._codes[self.rate_by_level[level]]

    def __iter__(self):
        return iter(self._codes.values())


@lru_cache(maxsize=8)
def default_code_set(k: int = 1144, seed: int = 0) -> CodeSet:
    return CodeSet(k, seed)


def export_alist(code: LdpcCode, path) -> None:
    """Write the parity-check matrix in alist text format (1-based indices)."""
    coo = code.h.tocoo()
    col_lists: list[list[int]] = [[] for _ in range(code.n)]
    row_lists: list[list[int]] = [[] for _ in range(code.m)]
    for r, c in zip(coo.row, coo.col):
        col_lists[c].append(int(r) + 1)
        row_lists[r].append(int(c) + 1)
    max_col = max(len(v) for v in col_lists)
    max_row = max(len(v) for v in row_lists)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{code.n} {code.m}\n{max_col} {max_row}\n")
        fh.write(" ".join(str(len(v)) for v in col_lists) + "\n")
        fh.write(" ".join(str(len(v)) for v in row_lists) + "\n")
        for v in col_lists:
            fh.write(" ".join(str(x) for x in v + [0] * (max_col - len(v))) + "\n")
        for v in row_lists:
            fh.write(" ".join(str(x) for x in v + [0] * (max_row - len(v))) + "\n")
