"""Contour-integral evaluation of w(Omega_M^0) and the bounds around it.

With z = e^{-b - i phi} on the circle |z| = e^{-b}, b = b(M), the Cauchy
formula for the z^M coefficient of prod_j (1 - z^j)^{-q_j} becomes

    w(Omega_M^0) = e^{S_M} / (2 pi) * int_{-pi}^{pi} e^{S(phi)} d phi,

with the entropy S_M = b M + sum_j q_j ln 1/(1 - e^{-bj}) and the phase
S(phi) = i M phi + sum_j q_j ln[(1 - e^{-bj}) / (1 - e^{-bj - i j phi})].
Everything large is kept in log form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .equilibrium import DEFAULT_TOL, deviation_radius, occupation_profile, solve_b
from .exact_oracle import (
    ENUMERATION_CAP,
    WeightTable,
    enumerate_configs,
    level_function,
    log_weight_cumulative,
)
from .multiplicities import MultiplicitySpec
from .special_sums import QuadratureError, bose_kernel, curvature_sums, level_series, log_kernel

# Zone constants: D1 = |phi| < ZONE_INNER * b^{1+d/3}, D2 up to ZONE_OUTER * b, D3 the rest.
ZONE_INNER = 1.0
ZONE_OUTER = 1.0


@dataclass(frozen=True)
class ActionProfile:
    M: float
    b: float
    S_M: float
    S2: float
    S3_bound: float
    K: float


def entropy(spec: MultiplicitySpec, b: float, M: float) -> float:
    """b M + sum_j q_j ln 1/(1 - e^{-bj})."""
    return b * M + level_series(spec, b, log_kernel, atol=1e-14).value


def action(spec: MultiplicitySpec, M: float, tol: float = DEFAULT_TOL) -> ActionProfile:
    """Entropy, curvature S''(0), the third-derivative bound and the tail constant K at b(M)."""
    sol = solve_b(spec, M, tol)
    b = sol.b
    cs = curvature_sums(spec, b)
    return ActionProfile(M=float(M), b=b, S_M=entropy(spec, b, M), S2=-cs.s2,
                         S3_bound=cs.s3, K=0.5 * math.exp(b) * cs.kdiag)


def _phase_terms(q: np.ndarray, j: np.ndarray, b: float, phi: np.ndarray, M: float) -> np.ndarray:
    """S(phi) for an array of phi, summing over the given levels.

    Re and Im are formed from 4 a sin^2(theta/2) so that nothing cancels
    near phi = 0 (a = e^{-bj}, theta = j phi).
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    a = np.exp(-b * j)[None, :]
    theta = phi[:, None] * j[None, :]
    s2 = np.sin(0.5 * theta) ** 2
    one_minus_a = -np.expm1(-b * j)[None, :]
    re = -0.5 * np.log1p(4 * a * s2 / one_minus_a**2) @ q
    im = M * phi - np.arctan2(a * np.sin(theta), one_minus_a + 2 * a * s2) @ q
    return re + 1j * im


def _levels(spec: MultiplicitySpec, b: float, J: int | None = None):
    if J is None:
        J = level_series(spec, b, log_kernel, atol=1e-15).j_cut
    j = np.arange(1, J + 1)
    return j.astype(float), spec.values(j)


def phase(spec: MultiplicitySpec, b: float, phi, M: float | None = None):
    """S(phi) on the circle Re xi = b.

    ``M`` defaults to the energy matched by b, so that S'(0) = 0.  Scalar in,
    complex out; arrays are evaluated elementwise.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if M is None:
        M = level_series(spec, b, bose_kernel, power=1, atol=1e-14).value
    j, q = _levels(spec, b)
    out = _phase_terms(q, j, b, phi, M)
    return complex(out[0]) if np.ndim(phi) == 0 else out


def zone_edges(b: float, d: float) -> tuple[float, float]:
    """Boundaries |phi| of D1/D2 and D2/D3, clamped to [0, pi] and ordered."""
    z1 = min(ZONE_INNER * b ** (1 + d / 3), math.pi)
    z2 = min(max(ZONE_OUTER * b, z1), math.pi)
    return z1, z2


@dataclass(frozen=True)
class ContourResult:
    log_weight: float
    zones: tuple[float, float, float]  # contributions of D1, D2, D3 to the normalized integral
    imag_residual: float
    b: float
    S_trunc: float


def contour_log_weight(spec: MultiplicitySpec, M: int, tol: float = 1e-8) -> ContourResult:
    """ln w(Omega_M^0) from the contour integral, zone by zone.

    Levels beyond max(M, series cutoff) are dropped from both the entropy and
    the phase; the z^M coefficient does not see them, so the identity stays
    exact.  ``tol`` is the target relative accuracy.
    """
    if M < 1 or M != int(M):
        raise ValueError("M must be a positive integer")
    b = solve_b(spec, M).b
    J = max(int(M), level_series(spec, b, log_kernel, atol=1e-15).j_cut)
    j, q = _levels(spec, b, J)
    S_trunc = b * M + float(math.fsum(q * log_kernel(b * j)))
    s2 = curvature_sums(spec, b).s2
    scale = 1.0 / math.sqrt(2 * math.pi * s2)
    epsabs = 1e-2 * tol * scale

    def re_part(x):
        return float(np.real(np.exp(_phase_terms(q, j, b, x, M))[0]))

    def im_part(x):
        return float(np.imag(np.exp(_phase_terms(q, j, b, x, M))[0]))

    z1, z2 = zone_edges(b, spec.d)

    def piece(fn, lo, hi):
        if hi <= lo:
            return 0.0
        n = max(1, math.ceil(M * (hi - lo) / (40 * math.pi)))
        edges = np.linspace(lo, hi, n + 1)
        total = 0.0
        for a, c in zip(edges[:-1], edges[1:]):
            val, err, *_ = integrate.quad(fn, a, c, epsabs=epsabs / n, epsrel=1e-3 * tol,
                                         limit=1000, full_output=1)
            if not math.isfinite(val) or err > 10 * epsabs / n + 1e-3 * tol * abs(val):
                raise QuadratureError(f"contour quadrature on [{a:.3g}, {c:.3g}] did not converge")
            total += val
        return total

    # the integrand is conjugate-symmetric: (1/2pi) int_{-pi}^{pi} = (1/pi) int_0^pi Re
    zones = tuple(piece(re_part, lo, hi) / math.pi for lo, hi in ((0, z1), (z1, z2), (z2, math.pi)))
    total = math.fsum(zones)
    if not total > 0:
        raise QuadratureError("contour integral is not positive")
    imag = (piece(im_part, 0, math.pi) + piece(lambda x: im_part(-x), 0, math.pi)) / (2 * math.pi)
    return ContourResult(log_weight=S_trunc + math.log(total), zones=zones,
                         imag_residual=abs(imag) / total, b=b, S_trunc=S_trunc)


def contour_weight(spec: MultiplicitySpec, M: int, tol: float = 1e-8) -> float:
    """w(Omega_M^0) from the contour integral (overflows to an error past float range)."""
    lw = contour_log_weight(spec, M, tol).log_weight
    if lw > 709:
        raise OverflowError("weight exceeds float range; use contour_log_weight")
    return math.exp(lw)


def verify_f21(spec: MultiplicitySpec, xi_re: float, xi_im: float) -> tuple[float, float, bool]:
    """Check that moving off the real axis lowers Re Phi by at least the cosine series.

    lhs = Re Phi(Re xi) - Re Phi(xi) = sum_j q_j ln |1 - e^{-j xi}| / (1 - e^{-j Re xi}),
    rhs = (1/5) sum_j q_j e^{-j Re xi} (1 - cos(j Im xi)).
    """
    if not xi_re > 0:
        raise ValueError("xi_re must be positive")
    j, q = _levels(spec, xi_re)
    a = np.exp(-xi_re * j)
    s2 = np.sin(0.5 * xi_im * j) ** 2
    lhs = float(math.fsum(0.5 * q * np.log1p(4 * a * s2 / np.expm1(-xi_re * j) ** 2)))
    rhs = float(math.fsum(0.4 * q * a * s2))
    return lhs, rhs, lhs >= rhs - 1e-12


def _logsumexp(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0 or not np.isfinite(x).any():
        return -math.inf
    return float(np.logaddexp.reduce(x))


def log_tail_weight(spec: MultiplicitySpec, M: int, f, delta: float,
                    reference: np.ndarray, cap: int = ENUMERATION_CAP) -> float:
    """ln w(Omega_M(Delta)): weight of sum_j f_j (N_j - Nbar_j) > Delta over Omega_M.

    Constant f uses the (energy, particle) table; other f fall back to
    enumeration under ``cap``.
    """
    ref = np.asarray(reference, dtype=float)
    fn = level_function(f)
    fv = fn(np.arange(max(M + 1, len(ref))))
    fv[0] = 0.0
    if np.allclose(fv[1:], fv[1]):
        c = float(fv[1])
        center = c * float(ref[1:].sum())
        G = WeightTable(spec, M, mode="fixed", N_max=M).log_row(1)
        n = np.arange(G.shape[1])
        mask = c * n - center > delta
        return _logsumexp(G[:, mask])
    refp = np.zeros(len(fv))
    refp[: len(ref)] = ref
    center = float(np.dot(fv, refp))
    logs = []
    for cfg, w in enumerate_configs(spec, M, cap=cap):
        s = sum(fv[jj] * k for jj, k in cfg.occupations) - center
        if s > delta:
            logs.append(math.log(w))
    return _logsumexp(np.array(logs))


@dataclass
class BoundsReport:
    rows: list[dict] = field(default_factory=list)
    p2_checks: list[dict] = field(default_factory=list)
    r1_ratio: float = math.nan
    r1_ok: bool = False
    p2_ok: bool = False

    @property
    def ok(self) -> bool:
        return self.r1_ok and self.p2_ok

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ok"] = self.ok
        return out


def check_bounds(spec: MultiplicitySpec, M_grid, tol: float = 1e-12, f=1.0,
                 deltas=None, chi="loglog", cap: int = ENUMERATION_CAP) -> BoundsReport:
    """Grid check of the lower bound on w(Omega_M) and the exponential tail bound.

    r1(M) = w(Omega_M) e^{-S_M} b^{-d/2-1} must stay within a factor 100 over
    the grid.  The tail bound w(Omega_M(Delta)) <= exp(S_M - c Delta + c^2 K)
    is checked for c in {0, b/4, b/2} and every Delta in ``deltas`` (by
    default 0 and, when Nbar > e, the deviation radius).
    """
    rep = BoundsReport()
    logs_r1 = []
    for M in M_grid:
        M = int(M)
        prof = action(spec, M)
        sol = solve_b(spec, M)
        lw = log_weight_cumulative(spec, M)
        log_r1 = lw - prof.S_M - (spec.d / 2 + 1) * math.log(prof.b)
        logs_r1.append(log_r1)
        rep.rows.append(dict(M=M, b=prof.b, S_M=prof.S_M, log_weight=lw, r1=math.exp(log_r1),
                             S2=prof.S2, K=prof.K, Nbar=sol.Nbar))
        dl = list(deltas) if deltas is not None else [0.0]
        if deltas is None and sol.Nbar > math.e:
            dl.append(deviation_radius(sol.Nbar, spec.d, chi).delta)
        ref = occupation_profile(spec, prof.b, max(M, sol.j_cut))
        for delta in dl:
            lt = log_tail_weight(spec, M, f, delta, ref, cap)
            for c in (0.0, prof.b / 4, prof.b / 2):
                bound = prof.S_M - c * delta + c * c * prof.K
                rep.p2_checks.append(dict(M=M, delta=delta, c=c, log_tail_weight=lt,
                                          log_bound=bound, ok=bool(lt <= bound + tol)))
    r1 = np.exp(np.array(logs_r1))
    rep.r1_ratio = float(r1.max() / r1.min())
    rep.r1_ok = bool(r1.min() > 0 and rep.r1_ratio < 100)
    rep.p2_ok = all(c["ok"] for c in rep.p2_checks)
    return rep
