"""Equilibrium parameters of the Bose gas on integer levels.

Solves sum_j j q_j / (e^{bj} - 1) = M for b, evaluates the Bose-Einstein
profile q_j / (e^{bj} - 1), the condensation threshold, the grand-canonical
pair (beta, mu) below threshold, and the deviation radius Delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .multiplicities import MultiplicitySpec
from .special_sums import bose_kernel, gamma_zeta, level_series

DEFAULT_TOL = 1e-10


class ConvergenceError(ArithmeticError):
    """A monotone root search failed to meet its residual tolerance."""


class RegimeError(ValueError):
    """Operation requested in the wrong (normal vs condensed) regime."""


@dataclass(frozen=True)
class EquilibriumSolution:
    M: float
    b: float
    Nbar: float
    residual: float
    j_cut: int


@dataclass(frozen=True)
class GrandCanonicalSolution:
    beta: float
    mu: float
    residual_N: float
    residual_M: float


@dataclass(frozen=True)
class Regime:
    kind: str  # "normal" or "condensed"
    threshold: float
    N: float


@dataclass(frozen=True)
class DeltaSpec:
    chi: str
    delta: float
    Nbar: float
    d: float
    within_hypothesis: bool


def energy_sum(spec: MultiplicitySpec, b: float, atol: float | None = None):
    """sum_j j q_j / (e^{bj} - 1) as a SeriesValue."""
    return level_series(spec, b, bose_kernel, power=1, atol=atol)


def _bisect_decreasing(fn: Callable[[float], float], target: float, lo: float, hi: float,
                       max_iter: int = 400) -> tuple[float, float]:
    """Geometric bisection for fn(x) = target, fn decreasing, fn(lo) >= target >= fn(hi).

    Runs until the bracket collapses to adjacent floats; returns the
    endpoint with the smaller residual and that residual.
    """
    f_lo, f_hi = fn(lo) - target, fn(hi) - target
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        f_mid = fn(mid) - target
        if f_mid == 0:
            return mid, 0.0
        if f_mid > 0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    else:
        raise ConvergenceError("bisection hit the iteration cap")
    return (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)


def _bracket_decreasing(fn, target, guess, lo_factor=1 / 8, hi_factor=8.0):
    lo, hi = guess * lo_factor, guess * hi_factor
    for _ in range(200):
        if fn(lo) >= target:
            break
        lo /= 8
    else:
        raise ConvergenceError("could not bracket from below")
    for _ in range(200):
        if fn(hi) <= target:
            break
        hi *= 8
    else:
        raise ConvergenceError("could not bracket from above")
    return lo, hi


def asymptotic_b(spec: MultiplicitySpec, M: float) -> float:
    """Leading-order root b* = (Q Gamma(d+1) zeta(d+1) / M)^{1/(d+1)}."""
    d = spec.d
    return (spec.leading * gamma_zeta(d + 1) / M) ** (1.0 / (d + 1))


def solve_b(spec: MultiplicitySpec, M: float, tol: float = DEFAULT_TOL) -> EquilibriumSolution:
    """Unique b > 0 with sum_j j q_j/(e^{bj}-1) = M, plus Nbar at that b."""
    if not M > 0:
        raise ValueError("M must be positive")
    atol = tol * max(1.0, M) / 10

    def lhs(b):
        return energy_sum(spec, b, atol).value

    lo, hi = _bracket_decreasing(lhs, M, asymptotic_b(spec, M))
    b, res = _bisect_decreasing(lhs, M, lo, hi)
    if abs(res) > tol * max(1.0, M):
        raise ConvergenceError(f"residual {res:.3g} exceeds tolerance at M={M}")
    nb = level_series(spec, b, bose_kernel, atol=tol)
    j_cut = energy_sum(spec, b, atol).j_cut
    return EquilibriumSolution(M=float(M), b=b, Nbar=nb.value, residual=res, j_cut=j_cut)


def occupation(spec: MultiplicitySpec, b: float, j: int) -> float:
    """Bose-Einstein occupation q_j / (e^{bj} - 1)."""
    if not b > 0 or j < 1:
        raise ValueError("need b > 0 and j >= 1")
    return float(spec.values([j])[0] / math.expm1(b * j))


def occupation_profile(spec: MultiplicitySpec, b: float, J: int) -> np.ndarray:
    """Array of occupations indexed by level 0..J (entry 0 is left at 0)."""
    out = np.zeros(J + 1)
    j = np.arange(1, J + 1)
    with np.errstate(over="ignore"):  # far levels overflow to inf and correctly give 0
        out[1:] = spec.values(j) / np.expm1(b * j)
    return out


def total_occupation(spec: MultiplicitySpec, b: float, tol: float = DEFAULT_TOL) -> float:
    """sum_j q_j / (e^{bj} - 1), with the truncation tail below ``tol``."""
    return level_series(spec, b, bose_kernel, atol=tol).value


def cumulative_tail(spec: MultiplicitySpec, b: float, l: int, tol: float = DEFAULT_TOL) -> float:
    """sum_{j>=l} q_j / (e^{bj} - 1)."""
    if l < 1:
        raise ValueError("l must be >= 1")
    return level_series(spec, b, bose_kernel, start=l, atol=tol).value


def resolve_chi(chi: str | Callable[[float], float] = "loglog") -> tuple[str, Callable[[float], float]]:
    """Map a chi identifier to (name, function).

    ``"loglog"`` is 1 + ln(1 + ln(1 + x)); ``"const:<v>"`` is the constant v,
    which does not grow with x, so tail frequencies need not vanish as M grows.
    """
    if callable(chi):
        return getattr(chi, "__name__", "custom"), chi
    if chi == "loglog":
        return chi, lambda x: 1.0 + math.log1p(math.log1p(x))
    if chi.startswith("const:"):
        v = float(chi.split(":", 1)[1])
        if not v > 0:
            raise ValueError("chi constant must be positive")
        return chi, lambda x: v
    raise ValueError(f"unknown chi {chi!r}")


def deviation_radius(Nbar: float, d: float, chi="loglog") -> DeltaSpec:
    """Delta = (Nbar ln Nbar)^{1/2} chi(Nbar) for d > 2, Nbar^{1/d} ln(Nbar) chi(Nbar) for 1 < d <= 2."""
    if not Nbar > math.e:
        raise ValueError(f"deviation radius needs Nbar > e, got {Nbar}")
    if not d > 1:
        raise ValueError("d must exceed 1")
    name, fn = resolve_chi(chi)
    L = math.log(Nbar)
    if d > 2:
        delta = math.sqrt(Nbar * L) * fn(Nbar)
    else:
        delta = Nbar ** (1.0 / d) * L * fn(Nbar)
    return DeltaSpec(chi=name, delta=delta, Nbar=Nbar, d=d,
                     within_hypothesis=not name.startswith("const:"))


def threshold(spec: MultiplicitySpec, M: float, tol: float = DEFAULT_TOL) -> float:
    """Condensation threshold Nbar(M): total occupation at the root b(M)."""
    return solve_b(spec, M, tol).Nbar


def classify(spec: MultiplicitySpec, M: float, N: float, tol: float = DEFAULT_TOL) -> Regime:
    """Normal for N <= Nbar(M) (boundary included), condensed above."""
    t = threshold(spec, M, tol)
    return Regime("condensed" if N > t else "normal", t, N)


def _n_sum(spec, beta, mu, atol):
    kern = lambda x: 1.0 / np.expm1(x + mu)  # noqa: E731
    return spec.q0 / math.expm1(mu) + level_series(spec, beta, kern, atol=atol).value


def _m_sum(spec, beta, mu, atol):
    kern = lambda x: 1.0 / np.expm1(x + mu)  # noqa: E731
    return level_series(spec, beta, kern, power=1, atol=atol).value


def solve_beta_mu(spec: MultiplicitySpec, M: float, N: float,
                  tol: float = DEFAULT_TOL) -> GrandCanonicalSolution:
    """Solve the two-equation grand-canonical system for (beta, mu), mu > 0.

    Nested bisection: for each beta the particle equation fixes mu(beta)
    (decreasing in mu); the energy equation is then decreasing in beta.
    """
    if not (M > 0 and N > 0):
        raise ValueError("need M > 0 and N > 0")
    sol = solve_b(spec, M, tol)
    if N > sol.Nbar:
        raise RegimeError(f"N={N} exceeds the threshold {sol.Nbar:.6g}: condensed regime")
    atol_n = tol * max(1.0, N) / 10
    atol_m = tol * max(1.0, M) / 10

    def mu_of(beta):
        f = lambda mu: _n_sum(spec, beta, mu, atol_n)  # noqa: E731
        lo = 0.5 * math.log1p(spec.q0 / N)
        hi = max(1.0, 2 * lo)
        while f(hi) > N:
            hi *= 2
        mu, _ = _bisect_decreasing(f, N, lo, hi)
        return mu

    g = lambda beta: _m_sum(spec, beta, mu_of(beta), atol_m)  # noqa: E731
    hi = sol.b
    lo = sol.b / 2
    while g(lo) < M:
        lo /= 2
    beta, _ = _bisect_decreasing(g, M, lo, hi)
    mu = mu_of(beta)
    rN = _n_sum(spec, beta, mu, atol_n) - N
    rM = _m_sum(spec, beta, mu, atol_m) - M
    if abs(rN) > tol * max(1.0, N) or abs(rM) > tol * max(1.0, M):
        raise ConvergenceError(f"grand-canonical residuals ({rN:.3g}, {rM:.3g}) above tolerance")
    return GrandCanonicalSolution(beta=beta, mu=mu, residual_N=rN, residual_M=rM)


def condensed_profile(spec: MultiplicitySpec, M: float, N: float,
                      tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(N0bar, b) above threshold: the excess N - Nbar sits on level 0."""
    sol = solve_b(spec, M, tol)
    if not N > sol.Nbar:
        raise RegimeError(f"N={N} is at or below the threshold {sol.Nbar:.6g}: normal regime")
    return N - sol.Nbar, sol.b


def coloring_threshold(spec: MultiplicitySpec, M: float, K: int, tol: float = DEFAULT_TOL) -> float:
    """Threshold after painting balls in K colors, i.e. with q_j -> K q_j."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return threshold(spec.scaled(K), M, tol)


def reference_profile(spec: MultiplicitySpec, M: float, N: float | None = None,
                      tol: float = DEFAULT_TOL) -> np.ndarray:
    """Limit occupations Nbar_j on levels 0..J, J the series cutoff at b(M).

    Without N this is the variable-N profile (entry 0 is 0).  With N it is
    the fixed-N limit: the condensed profile above threshold, or the
    grand-canonical (beta, mu) profile at or below it.
    """
    sol = solve_b(spec, M, tol)
    if N is None:
        return occupation_profile(spec, sol.b, sol.j_cut)
    if N > sol.Nbar:
        prof = occupation_profile(spec, sol.b, sol.j_cut)
        prof[0] = N - sol.Nbar
        return prof
    gc = solve_beta_mu(spec, M, N, tol)
    J = level_series(spec, gc.beta, bose_kernel, power=1, atol=tol).j_cut
    prof = np.zeros(J + 1)
    j = np.arange(1, J + 1)
    with np.errstate(over="ignore"):
        prof[1:] = spec.values(j) / np.expm1(gc.beta * j + gc.mu)
    prof[0] = spec.q0 / math.expm1(gc.mu)
    return prof
