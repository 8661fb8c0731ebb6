"""Exact weights, enumeration and dynamic-programming tables for P_M and P_{M,N}.

A configuration {N_j} carries the weight prod_j C(N_j + q_j - 1, N_j).  The
suffix table G_j[m] (and G_j[m, n] with particle counts) is the total weight
of configurations supported on levels >= j with energy exactly m (and n
particles on those levels).  It obeys

    G_j[m] = sum_k C(k + q_j - 1, k) G_{j+1}[m - j k],   G_{M+1} = delta_0,

and backs both exact counting and exact sequential sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Mapping

import numpy as np

from .equilibrium import reference_profile
from .multiplicities import MultiplicitySpec

ENUMERATION_CAP = 25
EXACT_INT_MAX_M = 500
DEFAULT_MEMORY_BUDGET = 2 * 2**30


class CapacityError(MemoryError):
    """A table or enumeration would exceed its configured budget."""


# ---------------------------------------------------------------------------
# configurations and generalized binomials


@dataclass(frozen=True)
class Configuration:
    """Finitely supported occupation sequence, stored as sorted (level, count) pairs."""

    occupations: tuple[tuple[int, int], ...]
    energy: int = field(init=False)
    particles: int = field(init=False)

    def __post_init__(self):
        occ = tuple(sorted((int(j), int(n)) for j, n in self.occupations if n))
        if any(j < 0 or n < 0 for j, n in occ):
            raise ValueError("levels and counts must be nonnegative")
        if len({j for j, _ in occ}) != len(occ):
            raise ValueError("duplicate level")
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "energy", sum(j * n for j, n in occ))
        object.__setattr__(self, "particles", sum(n for _, n in occ))

    @classmethod
    def from_counts(cls, counts: Mapping[int, int] | None = None) -> "Configuration":
        return cls(tuple((counts or {}).items()))

    @classmethod
    def from_dense(cls, row) -> "Configuration":
        """Build from a dense vector whose index is the level."""
        return cls(tuple((j, int(n)) for j, n in enumerate(row) if n))

    def __getitem__(self, j: int) -> int:
        return dict(self.occupations).get(j, 0)

    def as_dict(self) -> dict[int, int]:
        return dict(self.occupations)

    def __repr__(self) -> str:
        return f"Configuration({self.as_dict()})"


def log_binom_series(q: float, kmax: int) -> np.ndarray:
    """log C(k + q - 1, k) for k = 0..kmax, as a running product of (q+i)/(i+1)."""
    i = np.arange(kmax, dtype=float)
    out = np.zeros(kmax + 1)
    np.cumsum(np.log((q + i) / (i + 1.0)), out=out[1:])
    return out


def binom_series_int(q: int, kmax: int) -> list[int]:
    """C(k + q - 1, k) for k = 0..kmax, exactly."""
    out = [1]
    for k in range(kmax):
        out.append(out[-1] * (q + k) // (k + 1))
    return out


def gen_binom(q: float, n: int):
    """C(n + q - 1, n): an int for integer q, else a float product."""
    if float(q).is_integer():
        return math.comb(n + int(q) - 1, n)
    out = 1.0
    for i in range(n):
        out *= (q + i) / (i + 1)
    return out


def config_weight(spec: MultiplicitySpec, config: Configuration):
    """prod_j C(N_j + q_j - 1, N_j); level 0 uses q0 and only appears in fixed-N configurations."""
    integral = spec.is_integral(max((j for j, _ in config.occupations), default=0))
    w = 1 if integral else 1.0
    for j, n in config.occupations:
        if j == 0:
            q = spec.q0
        else:
            q = spec.int_value(j) if integral else float(spec.values([j])[0])
        w *= gen_binom(q, n)
    return w


def _log_int(x: int) -> float:
    if x <= 0:
        return -math.inf
    n = x.bit_length()
    if n < 1000:
        return math.log(x)
    s = n - 900
    return math.log(x >> s) + s * math.log(2.0)


_log_ints = np.frompyfunc(_log_int, 1, 1)


# ---------------------------------------------------------------------------
# the suffix weight table


def table_memory(M_max: int, N_max: int | None = None, stride: int | None = None,
                 exact: bool = False) -> int:
    """Bytes held by a checkpointed table (N_max None for the energy-only table)."""
    stride = stride or max(1, math.ceil(math.sqrt(max(M_max, 1))))
    cells = (M_max + 1) * (1 if N_max is None else min(N_max, M_max) + 1)
    rows = math.ceil(M_max / stride) + 2 + stride
    return rows * cells * (64 if exact else 8)


class WeightTable:
    """Checkpointed suffix table G_j for levels j = 1..M_max (+ the base row).

    Rows are exact Python integers (object arrays) when ``exact`` is set,
    otherwise natural logarithms with -inf for empty entries.  Only every
    ``stride``-th row is stored; the rest are recomputed one block at a time
    on demand from the checkpoint above.
    """

    def __init__(self, spec: MultiplicitySpec, M_max: int, mode: str = "variable",
                 N_max: int | None = None, stride: int | None = None,
                 exact: bool | None = None, memory_budget: int = DEFAULT_MEMORY_BUDGET):
        if M_max < 0:
            raise ValueError("M_max must be >= 0")
        if mode not in ("variable", "fixed"):
            raise ValueError("mode must be 'variable' or 'fixed'")
        if mode == "fixed" and (N_max is None or N_max < 0):
            raise ValueError("fixed mode needs N_max >= 0")
        self.spec = spec
        self.M_max = M_max
        self.mode = mode
        # particles on levels >= 1 never exceed the energy
        self.N_max = min(N_max, M_max) if mode == "fixed" else None
        self.N_total = N_max if mode == "fixed" else None
        self.stride = stride or max(1, math.ceil(math.sqrt(max(M_max, 1))))
        if exact is None:
            exact = M_max <= EXACT_INT_MAX_M and spec.is_integral(M_max)
        elif exact and not spec.is_integral(M_max):
            raise ValueError("exact arithmetic needs integer multiplicities")
        self.exact = exact
        need = self.memory_estimate()
        if need > memory_budget:
            suggestion = max(self.stride, math.ceil(math.sqrt(max(M_max, 1))))
            raise CapacityError(
                f"table needs ~{need / 2**20:.0f} MiB > budget {memory_budget / 2**20:.0f} MiB; "
                f"try stride={suggestion} or a smaller M_max")
        self._cps: dict[int, np.ndarray] = {}
        self._block: dict[int, np.ndarray] = {}
        self._build()

    # -- sizing ---------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        if self.mode == "variable":
            return (self.M_max + 1,)
        return (self.M_max + 1, self.N_max + 1)

    def memory_estimate(self) -> int:
        return table_memory(self.M_max, self.N_max, self.stride, self.exact)

    # -- recurrence -----------------------------------------------------
    def _coeffs(self, j: int):
        kmax = self.M_max // j if self.mode == "variable" else min(self.M_max // j, self.N_max)
        if self.exact:
            return binom_series_int(self.spec.int_value(j), kmax)
        return log_binom_series(float(self.spec.values([j])[0]), kmax)

    def _base(self) -> np.ndarray:
        if self.exact:
            row = np.zeros(self.shape, dtype=object)
            row[...] = 0
            row[(0,) * row.ndim] = 1
        else:
            row = np.full(self.shape, -np.inf)
            row[(0,) * row.ndim] = 0.0
        return row

    def _step(self, prev: np.ndarray, j: int) -> np.ndarray:
        M = self.M_max
        c = self._coeffs(j)
        out = prev.copy()
        for k in range(1, len(c)):
            s = j * k
            if self.mode == "variable":
                dst, src = out[s:], prev[: M + 1 - s]
            else:
                dst, src = out[s:, k:], prev[: M + 1 - s, : self.N_max + 1 - k]
            if self.exact:
                dst += c[k] * src
            else:
                np.logaddexp(dst, c[k] + src, out=dst)
        return out

    def _is_checkpoint(self, j: int) -> bool:
        return j == 1 or j == self.M_max + 1 or (j - 1) % self.stride == 0

    def _build(self):
        row = self._base()
        self._cps[self.M_max + 1] = row
        for j in range(self.M_max, 0, -1):
            row = self._step(row, j)
            if self._is_checkpoint(j):
                self._cps[j] = row

    # -- access ---------------------------------------------------------
    def row(self, j: int) -> np.ndarray:
        """G_j as stored (object ints or logs); j in 1..M_max+1, larger j give the base row."""
        if j < 1:
            raise ValueError("levels start at 1")
        if j > self.M_max:
            return self._cps[self.M_max + 1] if j == self.M_max + 1 else self._base()
        if j in self._cps:
            return self._cps[j]
        if j not in self._block:
            top = min(1 + self.stride * ((j - 1) // self.stride + 1), self.M_max + 1)
            block, row = {}, self._cps[top]
            for i in range(top - 1, j - (j - 1) % self.stride, -1):
                if i <= 0 or i in self._cps:
                    break
                row = self._step(row, i)
                block[i] = row
            self._block = block
        return self._block[j]

    def log_row(self, j: int) -> np.ndarray:
        r = self.row(j)
        if self.exact:
            return _log_ints(r).astype(float)
        return r

    def log_coeffs(self, j: int) -> np.ndarray:
        """log C(k + q_j - 1, k) over the k range used at level j."""
        kmax = self.M_max // j if self.mode == "variable" else min(self.M_max // j, self.N_max)
        return log_binom_series(float(self.spec.values([j])[0]), kmax)

    def ground_log_weights(self, N: int) -> np.ndarray:
        """log C(N - n + q0 - 1, N - n) for n = 0..N_max (-inf where n > N)."""
        n = np.arange(self.N_max + 1)
        lw = log_binom_series(self.spec.q0, N)
        out = np.full(n.shape, -np.inf)
        ok = n <= N
        out[ok] = lw[N - n[ok]]
        return out

    # -- queries --------------------------------------------------------
    def weight_exact_energy(self, m: int):
        """w(Omega_m^0) from the variable-mode table."""
        self._need("variable")
        r = self.row(1)[m]
        return int(r) if self.exact else math.exp(r)

    def log_weight_exact_energy(self, m: int) -> float:
        self._need("variable")
        return float(self.log_row(1)[m])

    def weight_cumulative(self, M: int | None = None):
        self._need("variable")
        M = self.M_max if M is None else M
        r = self.row(1)[: M + 1]
        return int(sum(r)) if self.exact else float(np.exp(r).sum())

    def log_weight_cumulative(self, M: int | None = None) -> float:
        self._need("variable")
        M = self.M_max if M is None else M
        return float(np.logaddexp.reduce(self.log_row(1)[: M + 1]))

    def weight_fixed(self, M: int | None = None, N: int | None = None):
        """W(Omega_{M,N}) including the level-0 weight."""
        self._need("fixed")
        M = self.M_max if M is None else M
        N = self.N_total if N is None else N
        if N > self.N_total:
            raise ValueError("N exceeds the table's particle range")
        G = self.row(1)[: M + 1]
        nn = min(N, self.N_max)
        if self.exact:
            c0 = binom_series_int(int(self.spec.q0), N)
            return int(sum(c0[N - n] * G[m, n] for m in range(M + 1) for n in range(nn + 1)))
        lw = self.ground_log_weights(N)
        return float(np.exp(np.logaddexp.reduce((G + lw[None, :]).ravel())))

    def _need(self, mode):
        if self.mode != mode:
            raise ValueError(f"operation needs a {mode}-mode table")


def build_table(spec: MultiplicitySpec, M_max: int, mode: str = "variable",
                N_max: int | None = None, stride: int | None = None,
                exact: bool | None = None,
                memory_budget: int = DEFAULT_MEMORY_BUDGET) -> WeightTable:
    """Construct a :class:`WeightTable` (see its docstring for the arguments)."""
    return WeightTable(spec, M_max, mode, N_max, stride, exact, memory_budget)


@lru_cache(maxsize=64)
def _energy_table(spec: MultiplicitySpec, M: int, exact: bool | None) -> WeightTable:
    return WeightTable(spec, M, stride=max(M, 1), exact=exact)


def weight_exact_energy(spec: MultiplicitySpec, M: int, exact: bool | None = None):
    """w(Omega_M^0): total weight of configurations with energy exactly M."""
    return _energy_table(spec, M, exact).weight_exact_energy(M)


def log_weight_exact_energy(spec: MultiplicitySpec, M: int) -> float:
    return _energy_table(spec, M, None).log_weight_exact_energy(M)


def weight_cumulative(spec: MultiplicitySpec, M: int, exact: bool | None = None):
    """w(Omega_M) = sum_{m <= M} w(Omega_m^0)."""
    return _energy_table(spec, M, exact).weight_cumulative(M)


def log_weight_cumulative(spec: MultiplicitySpec, M: int) -> float:
    return _energy_table(spec, M, None).log_weight_cumulative(M)


def weight_fixed(spec: MultiplicitySpec, M: int, N: int, exact: bool | None = None):
    """W(Omega_{M,N}): N particles, energy <= M, level 0 weighted by q0."""
    if M < 0 or N < 0:
        raise ValueError("M and N must be nonnegative")
    return WeightTable(spec, M, "fixed", N_max=N, stride=max(M, 1), exact=exact).weight_fixed(M, N)


def gen_function_coeffs(spec: MultiplicitySpec, M_max: int, exact: bool | None = None) -> list:
    """Coefficients of prod_{j<=M_max} (1 - z^j)^{-q_j} up to z^M_max.

    Truncated power-series products taken in increasing j (the table above
    runs in decreasing j).  Exact integers for integral q_j, else floats.
    """
    if exact is None:
        exact = spec.is_integral(M_max)
    if exact:
        a = [1] + [0] * M_max
        for j in range(1, M_max + 1):
            c = binom_series_int(spec.int_value(j), M_max // j)
            new = a[:]
            for k in range(1, len(c)):
                s = j * k
                for m in range(s, M_max + 1):
                    new[m] += c[k] * a[m - s]
            a = new
        return a
    a = np.zeros(M_max + 1)
    a[0] = 1.0
    for j in range(1, M_max + 1):
        c = np.exp(log_binom_series(float(spec.values([j])[0]), M_max // j))
        new = a.copy()
        for k in range(1, len(c)):
            new[j * k:] += c[k] * a[: M_max + 1 - j * k]
        a = new
    if not np.all(np.isfinite(a)):
        raise OverflowError("coefficients overflow double precision; use the log-space table")
    return a.tolist()


# ---------------------------------------------------------------------------
# enumeration


def enumerate_configs(spec: MultiplicitySpec, M: int, N: int | None = None,
                      cap: int = ENUMERATION_CAP) -> Iterator[tuple[Configuration, object]]:
    """Yield every element of Omega_M (or Omega_{M,N} when N is given) with its weight."""
    if M > cap:
        raise CapacityError(f"enumeration cap {cap} exceeded by M={M}")
    if M < 0:
        raise ValueError("M must be >= 0")
    integral = spec.is_integral(M)
    qs = {j: (spec.int_value(j) if integral else float(spec.values([j])[0])) for j in range(1, M + 1)}

    def rec(j, rem, parts, acc):
        if j == 0:
            yield acc, parts
            return
        for k in range(rem // j + 1):
            if N is not None and parts + k > N:
                break
            yield from rec(j - 1, rem - j * k, parts + k, acc + ((j, k),) if k else acc)

    for occ, parts in rec(M, M, 0, ()):
        if N is not None:
            occ = occ + ((0, N - parts),) if N - parts else occ
        cfg = Configuration(occ)
        w = 1 if integral else 1.0
        for j, k in cfg.occupations:
            w *= gen_binom(spec.q0 if j == 0 else qs[j], k)
        yield cfg, w


def level_function(f) -> Callable[[np.ndarray], np.ndarray]:
    """Normalize f (scalar, sequence indexed by level, or callable) to a vectorized map."""
    if callable(f):
        return lambda j: np.asarray(f(np.asarray(j)), dtype=float) * np.ones(np.shape(j))
    if np.isscalar(f):
        return lambda j: np.full(np.shape(j), float(f))
    arr = np.asarray(f, dtype=float)
    return lambda j: np.where(np.asarray(j) < len(arr), arr[np.minimum(j, len(arr) - 1)], 0.0)


@dataclass(frozen=True)
class ExactStatistic:
    """Exact law of sum_j f_j (N_j - Nbar_j) under P_M or P_{M,N}."""

    values: np.ndarray
    probs: np.ndarray
    center: float

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def tail(self, delta: float) -> float:
        """P(statistic > delta)."""
        return float(self.probs[self.values > delta].sum())

    def abs_tail(self, delta: float) -> float:
        """P(|statistic| > delta)."""
        return float(self.probs[np.abs(self.values) > delta].sum())


def exact_linear_statistic(spec: MultiplicitySpec, M: int, f, N: int | None = None,
                           reference: np.ndarray | None = None,
                           cap: int = ENUMERATION_CAP) -> ExactStatistic:
    """Exact distribution of sum_j f_j (N_j - Nbar_j) by enumeration.

    ``reference`` is the profile Nbar_j indexed from level 0; by default the
    variable-N profile at b(M) (or the fixed-N limit profile when N is given).
    """
    fn = level_function(f)
    if reference is None:
        reference = reference_profile(spec, M, N)
    levels = np.arange(len(reference))
    fr = fn(levels)
    if N is None:
        fr[0] = 0.0
    center = float(np.dot(fr, reference))
    vals, ws = [], []
    for cfg, w in enumerate_configs(spec, M, N, cap):
        js = np.array([j for j, _ in cfg.occupations], dtype=np.int64)
        ns = np.array([n for _, n in cfg.occupations], dtype=float)
        vals.append(float(np.dot(fn(js), ns)) - center if len(js) else -center)
        ws.append(w)
    total = sum(ws)
    if isinstance(total, int):
        from fractions import Fraction
        probs = np.array([float(Fraction(w, total)) for w in ws])
    else:
        probs = np.array(ws, dtype=float) / total
    return ExactStatistic(np.array(vals), probs, center)
