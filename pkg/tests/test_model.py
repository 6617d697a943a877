import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlcanard.model import (NumericalError, Params, PlanarConfig, ReturnParams, ValidationError,
                             build_global_return, build_minimal_3d, build_planar, eval_pwl,
                             f_delta, f_four_zone, f_quasi, f_tilde)


def test_default_delta_scales_with_sqrt_eps():
    assert Params(1, -1, 0.2, 0.01).delta == pytest.approx(math.pi * 0.1, abs=1e-15)
    assert Params(1, -1, 0.2, 0.01, delta=0.5).delta == 0.5


@pytest.mark.parametrize("bad", [dict(eps=0.0), dict(eps=-1.0), dict(eps=math.nan),
                                 dict(delta=-0.1), dict(p1=math.inf)])
def test_params_rejects_invalid(bad):
    kw = dict(p1=1.0, p2=-1.0, p3=0.2, eps=0.01)
    kw.update(bad)
    with pytest.raises(ValidationError):
        Params(**kw)


def test_errors_are_distinct_types():
    assert issubclass(ValidationError, ValueError)
    assert issubclass(NumericalError, RuntimeError)


def test_f_delta_values():
    c = f_delta(0.3)
    assert eval_pwl(c, 0.0) == 0.0
    assert eval_pwl(c, 0.3) == 0.0
    assert eval_pwl(c, 1.3) == pytest.approx(1.0)
    assert eval_pwl(c, -1.3) == pytest.approx(1.0)


def test_f_tilde_fold():
    c = f_tilde(0.3, 1.0)
    assert eval_pwl(c, 1.0) == pytest.approx(0.7)
    assert eval_pwl(c, 2.0) == pytest.approx(-0.3)
    with pytest.raises(ValidationError):
        f_tilde(0.3, 0.2)


def test_four_zone_and_quasi_continuous():
    for c in (f_four_zone(0.1, -1.0, 0.3), f_quasi(0.885)):
        for b in c.breakpoints:
            left = eval_pwl(c, b - 1e-12)
            right = eval_pwl(c, b + 1e-12)
            assert abs(left - right) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(1e-4, 0.2))
def test_minimal_field_continuous_across_planes(p1, p2, p3, eps):
    spec = build_minimal_3d(Params(p1, p2, p3, eps))
    d = spec.zones[1].lo
    for plane in (d, -d):
        for y, z in ((0.3, -0.2), (-1.0, 2.0)):
            a = spec.zones[0 if plane < 0 else 1].field([plane, y, z])
            b = spec.zones[1 if plane < 0 else 2].field([plane, y, z])
            assert np.allclose(a, b, atol=1e-14)


def test_global_return_has_four_zones():
    spec = build_global_return(Params(1, -1, 0.2, 0.01), ReturnParams(alpha2=-1.0, x0=1.0))
    assert len(spec.zones) == 4
    assert [z.role for z in spec.zones] == ["attracting", "central", "repelling", "return"]
    with pytest.raises(ValidationError):
        build_global_return(Params(1, -1, 0.2, 0.01), ReturnParams(x0=0.1))


def test_planar_builders():
    s2 = build_planar(PlanarConfig())
    s3 = build_planar(PlanarConfig(kind="arima", eps=0.1), drift=-0.001)
    assert s2.dim == 2 and s3.dim == 3
    with pytest.raises(ValidationError):
        build_planar(PlanarConfig(kind="nope"))


def test_zone_lookup():
    spec = build_minimal_3d(Params(1, -1, 0.2, 0.01))
    d = spec.zones[1].hi
    assert spec.zone_at([0.0, 0.0, 0.0]).index == 1
    assert spec.zone_at([-2 * d, 0.0, 0.0]).index == 0
    assert spec.zone_at([2 * d, 0.0, 0.0]).index == 2
