import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boselab.multiplicities import (
    MultiplicitySpec,
    format_spec,
    multiplicity,
    parse_spec,
    verify_envelope,
)


def test_power_law_values():
    assert multiplicity(MultiplicitySpec("power_law", d=2, Q=1), 5) == 5
    assert multiplicity(MultiplicitySpec("power_law", d=3, Q=2), 10) == 200


def test_oscillator_values():
    spec = MultiplicitySpec("oscillator", d=3)
    assert multiplicity(spec, 2) == 6
    assert [multiplicity(spec, j) for j in range(1, 5)] == [3, 6, 10, 15]
    assert spec.leading == pytest.approx(0.5)


def test_oscillator_asymptotics():
    for d in (2, 3, 4):
        spec = MultiplicitySpec("oscillator", d=d)
        j = 10**4
        assert multiplicity(spec, j) * math.gamma(d) / j ** (d - 1) == pytest.approx(1, rel=0.01)


def test_table_prefix_then_tail():
    spec = parse_spec("table:[1.5,2,3];power:d=2,Q=1")
    assert spec.kind == "tabled_with_power_tail"
    np.testing.assert_array_equal(spec.values([1, 2, 3, 4, 7]), [1.5, 2, 3, 4, 7])


@pytest.mark.parametrize("kwargs", [
    dict(kind="power_law", d=1.0),
    dict(kind="power_law", d=0.5),
    dict(kind="oscillator", d=2.5),
    dict(kind="power_law", d=2, Q=0),
    dict(kind="power_law", d=2, q0=0.5),
    dict(kind="tabled_with_power_tail", d=2, table=(1.0, -1.0)),
    dict(kind="tabled_with_power_tail", d=2),
    dict(kind="bogus", d=2),
])
def test_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        MultiplicitySpec(**kwargs)


def test_envelope_examples():
    assert verify_envelope(MultiplicitySpec("power_law", d=2, Q=1), 1, 1, 100)
    assert verify_envelope(MultiplicitySpec("oscillator", d=2), 1, 2, 100)
    assert not verify_envelope(MultiplicitySpec("power_law", d=3, Q=1), 2, 3, 10)
    with pytest.raises(ValueError):
        verify_envelope(MultiplicitySpec("power_law", d=2), 2, 1, 10)


@pytest.mark.parametrize("spec", ["power:d=3,Q=1", "osc:d=3", "osc:d=5", "table:[4,0.5];power:d=2.5,Q=1.5"])
def test_envelope_bound_holds(spec):
    s = parse_spec(spec)
    A, J0 = s.envelope()
    j = np.arange(J0 + 1, 5000)
    assert np.all(s.values(j) <= A * j ** (s.d - 1) * (1 + 1e-12))


@pytest.mark.parametrize("kind,d", [("power_law", 2), ("power_law", 3.5), ("oscillator", 3)])
def test_positive_and_nondecreasing(kind, d):
    q = MultiplicitySpec(kind, d=d).values(np.arange(1, 2000))
    assert np.all(q > 0) and np.all(np.diff(q) >= 0)


@pytest.mark.parametrize("text", [
    "power:d=3,Q=1,q0=1", "osc:d=3,q0=1", "table:[1.5,2,3];power:d=2,Q=1", "power:d=2.5,Q=0.75,q0=2,scale=4",
])
def test_parse_format_roundtrip(text):
    spec = parse_spec(text)
    assert parse_spec(format_spec(spec)) == spec


@pytest.mark.parametrize("bad", ["power:Q=1", "osc:d=3,Q=2", "table:1,2;power:d=2", "table:[1]", "wave:d=2", "power:d=2,x=1"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_spec(bad)


def test_integrality_and_scaling():
    assert MultiplicitySpec("power_law", d=2).is_integral(50)
    assert not MultiplicitySpec("power_law", d=2, Q=1.5).is_integral(50)
    assert not MultiplicitySpec("power_law", d=2.5).is_integral(50)
    spec = MultiplicitySpec("oscillator", d=3).scaled(4)
    assert spec.int_value(3) == 40 and spec.q0 == 1
    assert spec.leading == pytest.approx(2.0)


@given(st.floats(1.01, 6), st.floats(0.1, 10), st.integers(1, 10**6))
def test_power_law_formula(d, Q, j):
    spec = MultiplicitySpec("power_law", d=d, Q=Q)
    assert multiplicity(spec, j) == pytest.approx(Q * j ** (d - 1), rel=1e-12)
