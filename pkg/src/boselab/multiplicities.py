"""Level multiplicities q_j and their power-law envelope."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np

KINDS = ("power_law", "oscillator", "tabled_with_power_tail")


@dataclass(frozen=True)
class MultiplicitySpec:
    """Rule producing the multiplicities q_j, j >= 1, plus the ground value q0.

    ``scale`` multiplies every q_j with j >= 1; it is how K-coloring is
    expressed for rules (like the oscillator) whose leading coefficient is
    implied rather than free.
    """

    kind: str
    d: float
    Q: float = 1.0
    q0: float = 1.0
    table: tuple[float, ...] = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown multiplicity kind {self.kind!r}")
        if not self.d > 1:
            raise ValueError(f"dimension must satisfy d > 1, got {self.d}")
        if self.kind == "oscillator" and (self.d != int(self.d) or self.d < 2):
            raise ValueError("oscillator multiplicities need an integer d >= 2")
        if self.kind == "tabled_with_power_tail" and not self.table:
            raise ValueError("tabled spec needs a non-empty table")
        if self.kind != "oscillator" and not self.Q > 0:
            raise ValueError("Q must be positive")
        if any(not t > 0 for t in self.table):
            raise ValueError("tabled multiplicities must be positive")
        if not self.q0 >= 1:
            raise ValueError("q0 must be >= 1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "table", tuple(float(t) for t in self.table))

    @property
    def leading(self) -> float:
        """Effective leading coefficient of the asymptotics q_j ~ Q j^(d-1)."""
        if self.kind == "oscillator":
            return self.scale / math.gamma(self.d)
        return self.scale * self.Q

    def values(self, j) -> np.ndarray:
        """Vectorized q_j for an integer array of levels (all >= 1)."""
        j = np.asarray(j, dtype=np.int64)
        if np.any(j < 1):
            raise ValueError("levels must be >= 1")
        jf = j.astype(float)
        if self.kind == "oscillator":
            q = np.ones_like(jf)
            for i in range(1, int(self.d)):
                q *= (jf + i) / i
        else:
            q = self.Q * jf ** (self.d - 1.0)
            if self.table:
                J = len(self.table)
                head = j <= J
                q = np.where(head, np.asarray(self.table)[np.minimum(j, J) - 1], q)
        return self.scale * q

    def envelope(self) -> tuple[float, int]:
        """(A, J0) with q_j <= A * j^(d-1) for every j > J0."""
        if self.kind == "oscillator":
            # (j+1)...(j+d-1)/(d-1)! <= (d j)^(d-1)/(d-1)! for j >= 1
            k = int(self.d) - 1
            return self.scale * float(self.d) ** k / math.factorial(k), 0
        return self.scale * self.Q, len(self.table)

    def is_integral(self, j_max: int) -> bool:
        """True when q_1..q_{j_max} and q0 are all integers."""
        if float(self.q0) != int(self.q0):
            return False
        if j_max < 1:
            return True
        q = self.values(np.arange(1, j_max + 1))
        return bool(np.all(q == np.round(q)) and q.max() < 2**53)

    def int_value(self, j: int) -> int:
        """Exact integer q_j; only valid when the multiplicities are integral up to j."""
        if self.kind == "oscillator" and self.scale == int(self.scale):
            return int(self.scale) * math.comb(j + int(self.d) - 1, j)
        return int(round(float(self.values([j])[0])))

    def scaled(self, K: float) -> "MultiplicitySpec":
        """Copy with every q_j (j >= 1) multiplied by K; q0 is untouched."""
        return replace(self, scale=self.scale * K)

    def __str__(self) -> str:
        return format_spec(self)


def multiplicity(spec: MultiplicitySpec, j: int) -> float:
    """Return q_j for a single level j >= 1."""
    if j < 1:
        raise ValueError("level must be >= 1")
    if spec.kind == "oscillator":
        return spec.scale * float(math.comb(j + int(spec.d) - 1, j))
    return float(spec.values([j])[0])


def verify_envelope(spec: MultiplicitySpec, B1: float, B2: float, j_max: int) -> bool:
    """Check B1 j^(d-1) <= q_j <= B2 j^(d-1) on 1 <= j <= j_max."""
    if B1 > B2:
        raise ValueError("need B1 <= B2")
    j = np.arange(1, j_max + 1)
    q = spec.values(j)
    p = j.astype(float) ** (spec.d - 1.0)
    # relative slack of a few ulps so that exact equality survives rounding
    eps = 8 * np.finfo(float).eps
    return bool(np.all(q >= B1 * p * (1 - eps)) and np.all(q <= B2 * p * (1 + eps)))


_KV = re.compile(r"^\s*(\w+)\s*=\s*([-+0-9.eE]+)\s*$")


def _kv(text: str) -> dict[str, float]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        m = _KV.match(part)
        if not m:
            raise ValueError(f"bad key=value item {part!r}")
        out[m.group(1)] = float(m.group(2))
    return out


def parse_spec(text: str) -> MultiplicitySpec:
    """Parse the textual spec syntax.

    Examples: ``power:d=3,Q=1,q0=1``, ``osc:d=3,q0=1``,
    ``table:[1.5,2,3];power:d=2,Q=1``.  An optional ``scale=K`` key is
    accepted by every rule.
    """
    text = text.strip()
    table: tuple[float, ...] = ()
    if text.startswith("table:"):
        head, sep, rest = text.partition(";")
        if not sep:
            raise ValueError("table spec needs a ';power:...' tail rule")
        body = head[len("table:"):].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError("table must be written as [v1,v2,...]")
        table = tuple(float(v) for v in body[1:-1].split(",") if v.strip())
        text = rest.strip()
    rule, _, params = text.partition(":")
    kv = _kv(params)
    allowed = {"d", "Q", "q0", "scale"}
    if set(kv) - allowed:
        raise ValueError(f"unknown keys {sorted(set(kv) - allowed)}")
    if "d" not in kv:
        raise ValueError("spec needs d=")
    common = dict(d=kv["d"], q0=kv.get("q0", 1.0), scale=kv.get("scale", 1.0))
    if rule == "power":
        kind = "tabled_with_power_tail" if table else "power_law"
        return MultiplicitySpec(kind, Q=kv.get("Q", 1.0), table=table, **common)
    if rule == "osc":
        if table or "Q" in kv:
            raise ValueError("oscillator takes neither a table nor Q")
        return MultiplicitySpec("oscillator", **common)
    raise ValueError(f"unknown rule {rule!r}")


def _num(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def format_spec(spec: MultiplicitySpec) -> str:
    """Inverse of :func:`parse_spec`."""
    extra = f",q0={_num(spec.q0)}"
    if spec.scale != 1.0:
        extra += f",scale={_num(spec.scale)}"
    if spec.kind == "oscillator":
        return f"osc:d={_num(spec.d)}{extra}"
    body = f"power:d={_num(spec.d)},Q={_num(spec.Q)}{extra}"
    if spec.table:
        return "table:[" + ",".join(_num(t) for t in spec.table) + "];" + body
    return body
