"""Gamma/zeta, Bose-type lattice sums, Bose integrals and Euler-Maclaurin bounds.

Every infinite lattice sum in the package goes through :func:`level_series`,
which truncates at a level ``J`` with ``rate * b * J >= 50`` and returns a
rigorous bound on the discarded tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .multiplicities import MultiplicitySpec


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to converge."""


# ---------------------------------------------------------------------------
# Gamma and zeta

_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0 (Lanczos, g=7, n=9)."""
    if not x > 0:
        raise ValueError("log_gamma needs x > 0")
    if x < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    x -= 1.0
    acc = _LANCZOS[0]
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (x + 0.5) * math.log(t) - t + math.log(acc)


def gamma(x: float) -> float:
    """Gamma(x) for x > 0."""
    if x == int(x) and 0 < x <= 171:
        return float(math.factorial(int(x) - 1))
    return math.exp(log_gamma(x))


@lru_cache(maxsize=None)
def _borwein_coeffs(n: int) -> tuple[float, ...]:
    # d_k = n * sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!), exact then rounded
    terms = [Fraction(math.factorial(n + i - 1) * 4**i, math.factorial(n - i) * math.factorial(2 * i))
             for i in range(n + 1)]
    d, acc = [], Fraction(0)
    for t in terms:
        acc += t
        d.append(n * acc)
    dn = d[-1]
    return tuple(float((dk - dn) / dn) for dk in d)


def zeta(s: float, n: int = 48) -> float:
    """Riemann zeta for real s > 1 via Borwein's accelerated alternating series."""
    if not s > 1:
        raise ValueError("zeta needs s > 1")
    c = _borwein_coeffs(n)
    eta = -math.fsum((-1) ** k * c[k] / (k + 1) ** s for k in range(n))
    return eta / -math.expm1((1.0 - s) * math.log(2.0))


def gamma_zeta(s: float) -> float:
    """Gamma(s) * zeta(s), i.e. the Bose integral from 0 for dimension s > 1."""
    if not s > 1:
        raise ValueError("gamma_zeta needs s > 1")
    return gamma(s) * zeta(s)


# ---------------------------------------------------------------------------
# Lattice sums over energy levels

# Kernels k(x), x = b*j.  Each satisfies k(x) <= 2 e^{-rate x} / (1 - e^{-rate x})^3,
# which is what the tail bound in level_series assumes.

def bose_kernel(x):
    return 1.0 / np.expm1(x)


def log_kernel(x):
    return -np.log1p(-np.exp(-x))


def curvature_kernel(x):
    # e^x / (e^x - 1)^2
    e = np.exp(-x)
    return e / (-np.expm1(-x)) ** 2


def third_kernel(x):
    # (e^{2x} + e^x) / (e^x - 1)^3
    e = np.exp(-x)
    return e * (1.0 + e) / (-np.expm1(-x)) ** 3


def half_kernel(x):
    # e^{x/2} / (e^{x/2} - 1)^2, decays at rate 1/2
    e = np.exp(-0.5 * x)
    return e / (-np.expm1(-0.5 * x)) ** 2


_CUTOFF = 50.0


class SeriesValue(NamedTuple):
    value: float
    tail_bound: float
    j_cut: int


def _tail_bound(A: float, p: float, a: float, J: int) -> float:
    # sum_{j>J} 2A j^p e^{-a j}/(1-e^{-aJ})^3 <= 2A/(1-e^{-aJ})^3 * J^p e^{-aJ}/(a - p/J)
    if a - p / J <= 0:
        return math.inf
    log_t = math.log(2 * A) + p * math.log(J) - a * J - math.log(a - p / J)
    return math.exp(log_t) / (-math.expm1(-a * J)) ** 3


def level_series(
    spec: MultiplicitySpec,
    b: float,
    kernel: Callable,
    power: float = 0.0,
    rate: float = 1.0,
    start: int = 1,
    atol: float | None = None,
) -> SeriesValue:
    """sum_{j>=start} q_j j^power kernel(b j), truncated with a tail bound.

    Truncation happens at the first J with ``rate*b*J >= 50`` (and past any
    tabled prefix); J is doubled until the tail bound is at most ``atol``.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    A, J0 = spec.envelope()
    p = spec.d - 1.0 + power
    a = rate * b
    J = max(start, J0 + 1, math.ceil(_CUTOFF / a), math.ceil(2 * p / a) + 1)
    tail = _tail_bound(A, p, a, J)
    while atol is not None and tail > atol:
        J *= 2
        tail = _tail_bound(A, p, a, J)
    if J < start:
        return SeriesValue(0.0, tail, J)
    j = np.arange(start, J + 1)
    terms = spec.values(j) * j.astype(float) ** power * kernel(b * j)
    return SeriesValue(float(math.fsum(terms)), tail, J)


# ---------------------------------------------------------------------------
# Sums, integrals and Euler-Maclaurin


@dataclass(frozen=True)
class SumResult:
    value: float
    remainder_bound: float
    method: str  # "direct", "euler_maclaurin_eu1" or "euler_maclaurin_eu2"


def _quad(f, lo, hi, points=(), epsabs=1e-12, epsrel=1e-12):
    edges = [lo] + sorted(p for p in points if lo < p < hi) + [hi]
    total = 0.0
    for a, c in zip(edges[:-1], edges[1:]):
        with np.errstate(all="ignore"):
            res = integrate.quad(f, a, c, epsabs=epsabs, epsrel=epsrel, limit=400, full_output=1)
        val, err = res[0], res[1]
        if not math.isfinite(val) or (len(res) > 3 and err > 1e-6 * max(1.0, abs(val))):
            raise QuadratureError(f"quadrature on [{a}, {c}] did not converge (err={err:.3g})")
        total += val
    return total


def euler_maclaurin(
    f: Callable[[float], float],
    deriv: Callable[[float], float],
    mode: str = "from_one",
    points: tuple[float, ...] = (),
) -> SumResult:
    """Approximate sum_{j>=1} f(j) by an integral, with the remainder bound.

    ``from_one`` integrates over [1, inf) and bounds the remainder by the
    integral of |f'| over the same range; ``from_zero`` uses [0, inf).
    ``points`` are optional break points that help the quadrature when f
    lives on a long scale.
    """
    if mode not in ("from_one", "from_zero"):
        raise ValueError("mode must be 'from_one' or 'from_zero'")
    lo = 1.0 if mode == "from_one" else 0.0
    value = _quad(f, lo, math.inf, points)
    bound = _quad(lambda x: abs(deriv(x)), lo, math.inf, points)
    if mode == "from_zero":
        # |f'| must be integrable at 0: check the first-decade contribution converges
        near = [_quad(lambda x: abs(deriv(x)), 10.0**-k, 1.0) for k in (8, 16)]
        if abs(near[1] - near[0]) > 1e-6 * max(1.0, abs(near[0])):
            raise QuadratureError("f' is not absolutely integrable at 0")
    method = "euler_maclaurin_eu1" if mode == "from_one" else "euler_maclaurin_eu2"
    return SumResult(value, bound, method)


def _power_spec(s: float) -> MultiplicitySpec:
    return MultiplicitySpec("power_law", d=s + 1.0, Q=1.0)


def bose_sum(s: float, b: float, l: int = 1, atol: float = 0.0) -> SumResult:
    """sum_{j>=l} j^s / (e^{bj} - 1) by direct summation with a tail bound."""
    if not s > 0:
        raise ValueError("bose_sum needs s > 0")
    if l < 1:
        raise ValueError("l must be >= 1")
    val, tail, _ = level_series(_power_spec(s), b, bose_kernel, start=l, atol=atol or None)
    return SumResult(val, tail, "direct")


def bose_sum_em(s: float, b: float, l: int = 1, mode: str | None = None) -> SumResult:
    """Euler-Maclaurin estimate of the same sum as :func:`bose_sum`.

    The sum from l is written as sum_{i>=1} g(i) with g(x) = f(x + l - 1).
    By default ``from_zero`` is used when g' is integrable at 0 (s > 1 or
    l > 1), else ``from_one``.
    """
    if not s > 0:
        raise ValueError("bose_sum_em needs s > 0")
    shift = l - 1.0

    def g(x):
        y = x + shift
        return y**s / math.expm1(b * y) if y > 0 else (0.0 if s > 1 else (1.0 / b if s == 1 else math.inf))

    def dg(x):
        y = x + shift
        if y <= 0:
            return 0.0
        em = math.expm1(b * y)
        return s * y ** (s - 1) / em - b * y**s * (em + 1.0) / em**2

    if mode is None:
        mode = "from_zero" if (s > 1 or l > 1) else "from_one"
    pts = tuple(v / b for v in (1.0, 10.0, 60.0))
    return euler_maclaurin(g, dg, mode, points=pts)


def bose_integral(d: float, x: float = 0.0) -> float:
    """int_x^inf y^(d-1) / (e^y - 1) dy for d > 1, x >= 0."""
    if not d > 1:
        raise ValueError("bose_integral needs d > 1")
    if x < 0:
        raise ValueError("x must be nonnegative")

    def phi(y):
        return y ** (d - 1.0) / math.expm1(y) if y > 0 else 0.0

    if x >= _CUTOFF:
        return _quad(phi, x, math.inf)
    head = _quad(phi, x, _CUTOFF, points=(1.0, 10.0))
    return head + _quad(phi, _CUTOFF, math.inf)


class CurvatureSums(NamedTuple):
    s2: float
    s3: float
    kdiag: float


def curvature_sums(spec: MultiplicitySpec, b: float) -> CurvatureSums:
    """The three positive series that control the saddle-point curvature.

    s2 = sum q_j j^2 e^{bj}/(e^{bj}-1)^2 (equals -S''(0)),
    s3 = sum q_j j^3 (e^{2bj}+e^{bj})/(e^{bj}-1)^3 (bounds sup|S'''|),
    kdiag = sum q_j e^{bj/2}/(e^{bj/2}-1)^2.
    """
    s2 = level_series(spec, b, curvature_kernel, power=2).value
    s3 = level_series(spec, b, third_kernel, power=3).value
    kd = level_series(spec, b, half_kernel, rate=0.5).value
    return CurvatureSums(s2, s3, kd)
