"""Exact and importance samplers for P_M and P_{M,N}.

Randomness is organised in fixed-size streams: sample i belongs to stream
i // STREAM_SIZE and every stream owns a generator derived from
(seed, stream index).  A stream only ever consumes randomness for its own
samples, so batches replay bit-identically however the work is split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact_oracle import Configuration, WeightTable, level_function, log_binom_series
from .multiplicities import MultiplicitySpec
from .special_sums import bose_kernel, level_series

STREAM_SIZE = 4096
_CHUNK_CELLS = 1 << 22


class EfficiencyError(RuntimeError):
    """The importance sampler accepts too rarely to be useful."""


@dataclass
class SampleBatch:
    """Sampled configurations as a dense matrix; column j holds N_j."""

    occupations: np.ndarray
    weights: np.ndarray
    seed: int
    scheme: str  # "exact_sequential", "exact_projected" or "boltzmann_importance"
    proposals: int | None = None

    def __len__(self) -> int:
        return self.occupations.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return self.occupations @ np.arange(self.occupations.shape[1])

    @property
    def particles(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    @property
    def configurations(self) -> list[Configuration]:
        return [Configuration.from_dense(r) for r in self.occupations]


def derive_seed(seed: int, *keys: int) -> int:
    """Counter-style 64-bit seed for (seed, keys...)."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _Streams:
    def __init__(self, seed: int, count: int, salt: int = 0):
        n = max(1, math.ceil(count / STREAM_SIZE))
        self.rngs = [np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1),
                                                                  spawn_key=(salt, i)))
                     for i in range(n)]
        self.stream_of = np.arange(count) // STREAM_SIZE

    def uniforms(self, idx: np.ndarray) -> np.ndarray:
        """One uniform per listed sample (idx sorted), each from its own stream."""
        out = np.empty(len(idx))
        sid = self.stream_of[idx]
        for s in np.unique(sid):
            sel = sid == s
            out[sel] = self.rngs[s].random(int(sel.sum()))
        return out


def _inverse_cdf(logits: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise categorical draw from unnormalized log-probabilities."""
    top = logits.max(axis=1, keepdims=True)
    w = np.exp(logits - top)
    cdf = np.cumsum(w, axis=1)
    pick = (cdf < u[:, None] * cdf[:, -1:]).sum(axis=1)
    return np.minimum(pick, logits.shape[1] - 1)


def _level_draws(j, lc, nxt_lookup, r, u, kmax_fn):
    """Draw N_j for samples with residual state r; nxt_lookup(r, k) gives log G_{j+1}."""
    out = np.zeros(len(u), dtype=np.int64)
    K = int(kmax_fn(r).max()) + 1
    step = max(1, _CHUNK_CELLS // K)
    k = np.arange(K)
    for a in range(0, len(u), step):
        sl = slice(a, a + step)
        kmax = kmax_fn(r[sl])
        ok = k[None, :] <= kmax[:, None]
        logits = np.full(ok.shape, -np.inf)
        logits[ok] = (lc[None, :K] + nxt_lookup(r[sl], k))[ok]
        out[sl] = _inverse_cdf(logits, u[sl])
    return out


def sample_variable(table: WeightTable, seed: int, count: int) -> SampleBatch:
    """Exact draws from P_M, M = table.M_max.

    The total energy m is drawn with probability w(Omega_m^0)/w(Omega_M),
    then N_1, N_2, ... in turn with P(N_j = k) proportional to
    C(k + q_j - 1, k) G_{j+1}[m_left - j k].
    """
    if table.mode != "variable":
        raise ValueError("sample_variable needs a variable-mode table")
    M = table.M_max
    streams = _Streams(seed, count)
    g1 = table.log_row(1)
    all_idx = np.arange(count)
    residual = _inverse_cdf(np.broadcast_to(g1, (count, M + 1)), streams.uniforms(all_idx)) \
        if count else np.zeros(0, dtype=np.int64)
    residual = residual.astype(np.int64)
    cols = [np.zeros(count, dtype=np.int64)]
    j = 1
    while j <= M and residual.any():
        col = np.zeros(count, dtype=np.int64)
        idx = np.nonzero(residual >= j)[0]
        if len(idx):
            nxt = table.log_row(j + 1)
            lc = table.log_coeffs(j)
            r = residual[idx]
            u = streams.uniforms(idx)
            col[idx] = _level_draws(
                j, lc,
                lambda rr, k: nxt[np.maximum(rr[:, None] - j * k[None, :], 0)],
                r, u, lambda rr: rr // j)
            residual[idx] -= j * col[idx]
        cols.append(col)
        j += 1
    if residual.any():
        raise AssertionError("sequential sampler left unassigned energy")
    occ = np.stack(cols, axis=1)
    return SampleBatch(occ, np.ones(count), seed, "exact_sequential")


def sample_fixed(table: WeightTable, seed: int, count: int) -> SampleBatch:
    """Exact draws from P_{M,N} with N = table.N_total.

    (energy, particles on levels >= 1) is drawn jointly with the level-0
    factor C(N_0 + q0 - 1, N_0) folded in, levels j >= 1 follow as in
    :func:`sample_variable`, and N_0 is what is left of N.
    """
    if table.mode != "fixed":
        raise ValueError("sample_fixed needs a fixed-mode table")
    M, N, Nm = table.M_max, table.N_total, table.N_max
    streams = _Streams(seed, count)
    joint = (table.log_row(1) + table.ground_log_weights(N)[None, :]).ravel()
    pick = _inverse_cdf(np.broadcast_to(joint, (count, joint.size)), streams.uniforms(np.arange(count)))
    rm, rn = np.divmod(pick.astype(np.int64), Nm + 1)
    n_levels = rn.copy()
    cols = [np.zeros(count, dtype=np.int64)]
    j = 1
    while j <= M and rm.any():
        col = np.zeros(count, dtype=np.int64)
        idx = np.nonzero((rm >= j) & (rn >= 1))[0]
        if len(idx):
            nxt = table.log_row(j + 1)
            lc = table.log_coeffs(j)
            state = np.stack([rm[idx], rn[idx]], axis=1)
            u = streams.uniforms(idx)

            def lookup(st, k, nxt=nxt, j=j):
                mm = np.maximum(st[:, :1] - j * k[None, :], 0)
                nn = np.maximum(st[:, 1:] - k[None, :], 0)
                return nxt[mm, nn]

            col[idx] = _level_draws(j, lc, lookup, state, u,
                                    lambda st, j=j: np.minimum(st[:, 0] // j, st[:, 1]))
            rm[idx] -= j * col[idx]
            rn[idx] -= col[idx]
        cols.append(col)
        j += 1
    if rm.any() or rn.any():
        raise AssertionError("sequential sampler left unassigned energy or particles")
    occ = np.stack(cols, axis=1)
    occ[:, 0] = N - n_levels
    return SampleBatch(occ, np.ones(count), seed, "exact_sequential")


def sample_fixed_projected(table: WeightTable, N: int, seed: int, count: int,
                           max_rounds: int = 1000) -> SampleBatch:
    """Exact draws from P_{M,N} by rejection from P_M.

    Dropping N_0 maps Omega_{M,N} one-to-one into Omega_M, and the image
    weight is w({N_j}) C(N - n + q0 - 1, N - n) with n = sum_{j>=1} N_j.
    Draws from P_M are accepted with probability proportional to the level-0
    factor, which peaks at n = 0.  Efficient whenever n <= N is typical and q0
    is small (for q0 = 1 the factor is the indicator n <= N).
    """
    if table.mode != "variable":
        raise ValueError("projection sampling needs a variable-mode table")
    q0 = table.spec.q0
    lc0 = log_binom_series(q0, N)
    kept: list[np.ndarray] = []
    have = 0
    for rnd in range(max_rounds):
        if have >= count:
            break
        batch = sample_variable(table, derive_seed(seed, rnd), max(count - have, 64))
        n = batch.particles
        log_acc = np.full(len(n), -np.inf)
        ok = n <= N
        log_acc[ok] = lc0[N - n[ok]] - lc0[N]
        u = np.random.default_rng(derive_seed(seed, rnd, 1)).random(len(n))
        acc = np.log(u) < log_acc
        occ = batch.occupations[acc]
        occ[:, 0] = N - n[acc]
        kept.append(occ)
        have += len(occ)
    else:
        raise EfficiencyError("projection sampler exhausted its rounds")
    width = max(k.shape[1] for k in kept)
    occ = np.vstack([np.pad(k, ((0, 0), (0, width - k.shape[1]))) for k in kept])[:count]
    return SampleBatch(occ, np.ones(count), seed, "exact_projected")


def sample_boltzmann(spec: MultiplicitySpec, b: float, M: int, seed: int, count: int,
                     min_acceptance: float = 1e-4) -> SampleBatch:
    """Self-normalized importance sampler for P_M.

    Each level is drawn independently with P(N_j = k) proportional to
    C(k + q_j - 1, k) e^{-b j k}, i.e. a negative binomial with mean
    q_j / (e^{bj} - 1).  Proposals with energy above M are rejected; the rest
    carry weight e^{b (E - M)} (the e^{bE} importance ratio, rescaled).
    ``count`` is the number of proposals.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    J = min(M, level_series(spec, b, bose_kernel, atol=1e-15).j_cut)
    if J < 1:
        return SampleBatch(np.zeros((count, 1), dtype=np.int64), np.ones(count), seed,
                           "boltzmann_importance", proposals=count)
    j = np.arange(1, J + 1)
    q = spec.values(j)
    p = -np.expm1(-b * j)
    streams = _Streams(seed, count)
    rows, calib_n, calib_acc = [], 0, 0
    step = max(1, _CHUNK_CELLS // J)
    for s, rng in enumerate(streams.rngs):
        n_s = int((streams.stream_of == s).sum())
        for a in range(0, n_s, step):
            m = min(step, n_s - a)
            draws = rng.negative_binomial(q[None, :], p[None, :], size=(m, J))
            e = draws @ j
            keep = e <= M
            if calib_n < 1000:
                take = min(m, 1000 - calib_n)
                calib_n += take
                calib_acc += int(keep[:take].sum())
                if calib_n >= min(1000, count) and calib_acc < min_acceptance * calib_n:
                    raise EfficiencyError(
                        f"acceptance {calib_acc}/{calib_n} below {min_acceptance}; use the exact sampler")
            rows.append(draws[keep])
    kept = np.vstack(rows) if rows else np.zeros((0, J), dtype=np.int64)
    occ = np.hstack([np.zeros((len(kept), 1), dtype=np.int64), kept])
    weights = np.exp(b * (occ @ np.arange(J + 1) - M))
    return SampleBatch(occ, weights, seed, "boltzmann_importance", proposals=count)


def linear_statistic(batch: SampleBatch, f, reference: np.ndarray) -> np.ndarray:
    """Per-sample values of sum_j f_j (N_j - Nbar_j)."""
    fn = level_function(f)
    width = batch.occupations.shape[1]
    levels = np.arange(max(width, len(reference)))
    fv = fn(levels)
    if np.any(np.abs(fv) > 1 + 1e-12):
        raise ValueError("linear statistics need |f_j| <= 1")
    ref = np.zeros(len(levels))
    ref[: len(reference)] = reference
    center = float(np.dot(fv, ref))
    return batch.occupations @ fv[:width] - center


def weighted_frequency(event: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Self-normalized frequency of a boolean event and its standard error."""
    if len(event) == 0:
        return 0.0, 0.0
    w = np.asarray(weights, dtype=float)
    e = np.asarray(event, dtype=float)
    total = w.sum()
    p = float(np.dot(w, e) / total)
    if np.all(w == w[0]):
        se = math.sqrt(p * (1 - p) / len(e))
    else:
        se = float(math.sqrt(np.sum(w**2 * (e - p) ** 2)) / total)
    return p, se


def empirical_tail(batch: SampleBatch, f, reference: np.ndarray, delta: float) -> tuple[float, float]:
    """Weighted frequency of |sum_j f_j (N_j - Nbar_j)| > delta, with its standard error."""
    stat = linear_statistic(batch, f, reference)
    return weighted_frequency(np.abs(stat) > delta, batch.weights)


def weighted_mean(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Self-normalized mean and standard error."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    total = w.sum()
    mu = float(np.dot(w, v) / total)
    se = float(math.sqrt(np.sum(w**2 * (v - mu) ** 2)) / total)
    return mu, se
