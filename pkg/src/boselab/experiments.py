"""End-to-end empirical runs: deviation, condensation, coloring and profile.

Every run returns an :class:`ExperimentReport` that records all the inputs
needed to replay it bit for bit (spec string, sizes, seed, chi, backend).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .equilibrium import (
    DEFAULT_TOL,
    RegimeError,
    coloring_threshold,
    deviation_radius,
    occupation_profile,
    solve_b,
)
from .exact_oracle import DEFAULT_MEMORY_BUDGET, CapacityError, WeightTable, table_memory
from .multiplicities import MultiplicitySpec, format_spec
from .sampler import (
    SampleBatch,
    empirical_tail,
    sample_boltzmann,
    sample_fixed,
    sample_fixed_projected,
    sample_variable,
    weighted_frequency,
    weighted_mean,
)
from .special_sums import bose_integral

DEFAULT_BAR = 0.05
# above this many cell updates the (energy, particles) table is not worth building
FIXED_TABLE_WORK = 5e7


@dataclass
class ExperimentReport:
    kind: str
    spec: str
    M: int
    N: int | None
    count: int
    seed: int
    chi: str | None
    delta: float | None
    statistic: str
    empirical_tail: float | None
    stderr: float | None
    theory: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    table: list[dict] = field(default_factory=list)
    backend: str | None = None
    bar: float | None = None
    passed: bool = True
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_jsonable, **kw)

    def to_csv(self) -> str:
        """The per-row table (or a single summary row when there is none)."""
        rows = self.table or [{k: v for k, v in self.to_dict().items()
                               if not isinstance(v, (dict, list))}]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


# ---------------------------------------------------------------------------
# statistic choices


def resolve_f(f_choice, l: int | None = None):
    """Return (label, f) for a named or custom level function.

    Names: ``all_ones``; ``tail_from_l`` (with ``l``, or written
    ``tail_from_l:<l>``), i.e. the indicator of j >= l; ``alternating``,
    f_j = (-1)^j.  Anything else (scalar, sequence, callable) is custom.
    """
    if isinstance(f_choice, str):
        name, _, arg = f_choice.partition(":")
        if name == "all_ones":
            return "all_ones", 1.0
        if name == "tail_from_l":
            ll = int(arg) if arg else l
            if ll is None or ll < 1:
                raise ValueError("tail_from_l needs l >= 1")
            return f"tail_from_l:{ll}", lambda j, ll=ll: (np.asarray(j) >= ll).astype(float)
        if name == "alternating":
            return "alternating", lambda j: np.where(np.asarray(j) % 2 == 0, 1.0, -1.0)
        raise ValueError(f"unknown f choice {f_choice!r}")
    return "custom", f_choice


# ---------------------------------------------------------------------------
# backends


def fixed_table_work(M: int, N: int) -> float:
    """Rough cell-update count for the (energy, particles) table."""
    Nm = min(N, M)
    return float(sum(min(M // j, Nm) for j in range(1, M + 1))) * (M + 1) * (Nm + 1)


def choose_backend(spec: MultiplicitySpec, M: int, N: int | None = None,
                   memory_budget: int = DEFAULT_MEMORY_BUDGET) -> str:
    """Pick the cheapest exact sampler that fits, else importance sampling."""
    fits = table_memory(M) <= memory_budget
    if N is None:
        return "exact_sequential" if fits else "boltzmann_importance"
    if fixed_table_work(M, N) <= FIXED_TABLE_WORK:
        return "exact_fixed_table"
    if fits:
        return "exact_projected"
    raise CapacityError("no exact fixed-N backend fits; reduce M or raise the memory budget")


def draw(spec: MultiplicitySpec, M: int, count: int, seed: int, N: int | None = None,
         backend: str | None = None, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> tuple[SampleBatch, str]:
    """Sample P_M (N None) or P_{M,N} with the requested or auto-selected backend."""
    backend = backend or choose_backend(spec, M, N, memory_budget)
    if backend == "exact_sequential":
        return sample_variable(WeightTable(spec, M, memory_budget=memory_budget), seed, count), backend
    if backend == "boltzmann_importance":
        return sample_boltzmann(spec, solve_b(spec, M).b, M, seed, count), backend
    if backend == "exact_fixed_table":
        table = WeightTable(spec, M, mode="fixed", N_max=N, memory_budget=memory_budget)
        return sample_fixed(table, seed, count), backend
    if backend == "exact_projected":
        table = WeightTable(spec, M, memory_budget=memory_budget)
        return sample_fixed_projected(table, N, seed, count), backend
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# experiments


def run_deviation(spec: MultiplicitySpec, M: int, f_choice="all_ones", count: int = 1000,
                  seed: int = 0, chi="loglog", l: int | None = None, delta: float | None = None,
                  bar: float = DEFAULT_BAR, backend: str | None = None) -> ExperimentReport:
    """Frequency of |sum_j f_j (N_j - Nbar_j)| > Delta under P_M."""
    t0 = time.perf_counter()
    label, f = resolve_f(f_choice, l)
    sol = solve_b(spec, M)
    chi_name = chi if isinstance(chi, str) else getattr(chi, "__name__", "custom")
    if delta is None:
        delta = deviation_radius(sol.Nbar, spec.d, chi).delta
    ref = occupation_profile(spec, sol.b, max(M, sol.j_cut))
    batch, backend = draw(spec, M, count, seed, backend=backend)
    freq, se = empirical_tail(batch, f, ref, delta)
    return ExperimentReport(
        kind="deviation", spec=format_spec(spec), M=M, N=None, count=count, seed=seed,
        chi=chi_name, delta=delta, statistic=label, empirical_tail=freq, stderr=se,
        theory=dict(b=sol.b, Nbar=sol.Nbar, threshold=sol.Nbar, regime="variable"),
        details=dict(accepted=len(batch), proposals=batch.proposals),
        backend=backend, bar=bar, passed=freq <= bar, wall_time=time.perf_counter() - t0)


def run_condensation(spec: MultiplicitySpec, M: int, N: int, count: int = 500, seed: int = 0,
                     chi="loglog", bar: float = DEFAULT_BAR,
                     backend: str | None = None) -> ExperimentReport:
    """Concentration of N_0 around N - Nbar(M) under P_{M,N} above threshold."""
    t0 = time.perf_counter()
    N = int(N)
    sol = solve_b(spec, M)
    if not N > sol.Nbar:
        raise RegimeError(f"N={N} is not above the threshold {sol.Nbar:.6g}; use run_deviation")
    chi_name = chi if isinstance(chi, str) else getattr(chi, "__name__", "custom")
    delta = deviation_radius(sol.Nbar, spec.d, chi).delta
    batch, backend = draw(spec, M, count, seed, N=N, backend=backend)
    n0 = batch.occupations[:, 0]
    target = N - sol.Nbar
    freq, se = weighted_frequency(np.abs(n0 - target) > delta, batch.weights)
    mean, mean_se = weighted_mean(n0, batch.weights)
    qs = np.quantile(n0, [0.05, 0.25, 0.5, 0.75, 0.95])
    ok = freq <= bar and abs(mean - target) <= delta
    return ExperimentReport(
        kind="condense", spec=format_spec(spec), M=M, N=N, count=count, seed=seed,
        chi=chi_name, delta=delta, statistic="N_0 - (N - Nbar)", empirical_tail=freq, stderr=se,
        theory=dict(b=sol.b, Nbar=sol.Nbar, threshold=sol.Nbar, regime="condensed",
                    condensate=target),
        details=dict(mean_N0=mean, mean_N0_stderr=mean_se,
                     mean_excited=float(N - mean),
                     quantiles_N0=dict(zip(["q05", "q25", "q50", "q75", "q95"], map(float, qs)))),
        backend=backend, bar=bar, passed=bool(ok), wall_time=time.perf_counter() - t0)


def run_coloring(spec: MultiplicitySpec, M: float, K_list=(1, 2, 4, 16), tol: float = DEFAULT_TOL,
                 rel_tol: float = 0.02) -> ExperimentReport:
    """Threshold ratios after K-coloring against the power K^{1/(d+1)}."""
    t0 = time.perf_counter()
    sol = solve_b(spec, M, tol)
    rows = []
    for K in K_list:
        ratio = coloring_threshold(spec, M, K, tol) / sol.Nbar
        pred = K ** (1.0 / (spec.d + 1))
        rows.append(dict(K=K, ratio=ratio, predicted=pred, rel_dev=ratio / pred - 1.0))
    ok = all(abs(r["rel_dev"]) <= rel_tol for r in rows)
    return ExperimentReport(
        kind="coloring", spec=format_spec(spec), M=int(M), N=None, count=0, seed=0, chi=None,
        delta=None, statistic="threshold ratio", empirical_tail=None, stderr=None,
        theory=dict(b=sol.b, Nbar=sol.Nbar, threshold=sol.Nbar, regime="variable"),
        table=rows, bar=rel_tol, passed=ok, wall_time=time.perf_counter() - t0)


def run_profile(spec: MultiplicitySpec, M: int, x1: float = 0.5, x2: float = 3.0,
                grid_points: int = 11, count: int = 200, seed: int = 0,
                eps: float = 0.5, backend: str | None = None) -> ExperimentReport:
    """Sup-distance of the rescaled cumulative occupations to the Bose integral.

    For each sample and grid point x the quantity Q^{-1} b^d sum_{j > x/b} N_j
    is compared with int_x^inf y^{d-1}/(e^y - 1) dy; the report carries the
    distribution of the sup over the grid, and the tail is P(sup > eps).
    """
    if not 0 < x1 < x2:
        raise ValueError("need 0 < x1 < x2")
    if grid_points < 1:
        raise ValueError("empty grid")
    t0 = time.perf_counter()
    sol = solve_b(spec, M)
    b, Q = sol.b, spec.leading
    xs = np.linspace(x1, x2, grid_points)
    limit = np.array([bose_integral(spec.d, x) for x in xs])
    batch, backend = draw(spec, M, count, seed, backend=backend)
    occ = batch.occupations
    # suffix[:, i] = sum_{j >= i} N_j
    suffix = np.cumsum(occ[:, ::-1], axis=1)[:, ::-1]
    suffix = np.hstack([suffix, np.zeros((len(occ), 1), dtype=suffix.dtype)])
    first = np.minimum(np.floor(xs / b).astype(int) + 1, suffix.shape[1] - 1)
    scaled = b**spec.d / Q * suffix[:, first]
    sups = np.abs(scaled - limit[None, :]).max(axis=1)
    freq, se = weighted_frequency(sups > eps, batch.weights)
    med = float(np.median(sups))
    rows = [dict(x=float(x), limit=float(v), mean_scaled=float(m))
            for x, v, m in zip(xs, limit, np.average(scaled, axis=0, weights=batch.weights))]
    return ExperimentReport(
        kind="profile", spec=format_spec(spec), M=M, N=None, count=count, seed=seed, chi=None,
        delta=eps, statistic=f"sup over [{x1}, {x2}] ({grid_points} points)",
        empirical_tail=freq, stderr=se,
        theory=dict(b=b, Nbar=sol.Nbar, threshold=sol.Nbar, regime="variable"),
        details=dict(median_sup=med, quantiles_sup=[float(v) for v in np.quantile(sups, [0.1, 0.5, 0.9])]),
        table=rows, backend=backend, bar=eps, passed=med <= eps,
        wall_time=time.perf_counter() - t0)
