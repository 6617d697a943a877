import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlcanard.model import Params, ValidationError
from pwlcanard.singular import (in_funnel, invariant_half_lines, reduced_field, reduced_flow,
                                singular_canard_directions, singular_portrait,
                                smooth_reduced_flow, tangency_classification)

coef = st.floats(-2, 2).filter(lambda v: abs(v) > 0.05)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 2), coef, coef, st.floats(-3, 3), st.floats(0, 5))
def test_half_lines_invariant(p1, p2, p3, z, t):
    P = Params(p1, p2, p3, 0.01)
    hl = invariant_half_lines(P)
    for zone, side in (("right", 1), ("left", -1)):
        c = hl[zone]
        x = (c - p2 * z) / p1
        if x * side <= 0:
            continue
        x1, z1 = reduced_flow(P, zone, (x, z), t)
        scale = max(1.0, abs(p1 * x1), abs(p2 * z1))
        assert abs(p1 * x1 + p2 * z1 - c) <= 1e-12 * scale


def test_central_constraint_enforced(node):
    with pytest.raises(ValidationError):
        reduced_flow(node, "central", (0.3, 0.0), 1.0)


def test_reduced_flow_group(node):
    a = reduced_flow(node, "left", reduced_flow(node, "left", (-0.3, 0.2), 0.4), 0.6)
    b = reduced_flow(node, "left", (-0.3, 0.2), 1.0)
    assert np.allclose(a, b, atol=1e-14)


def test_smooth_reduced_flow_finite(node):
    out = smooth_reduced_flow(node, (-0.3, 0.1), 0.5)
    assert np.all(np.isfinite(out))


def test_directions_and_tangency(node):
    d = singular_canard_directions(node)
    assert d.weak is not None and d.strong is not None
    assert tangency_classification(node) == "invisible-invisible"
    assert tangency_classification(Params(1, 1, 0.1, 0.01)) == "visible-visible"


def test_portraits_connectivity():
    fn = singular_portrait(Params(1, -1, 0.1, 0.01))
    assert fn.strong_connected and not fn.weak_connected
    fs = singular_portrait(Params(1, 1, 0.1, 0.01))
    assert fs.weak_connected and not fs.strong_connected
    fsn2 = singular_portrait(Params(1, -1, 0.0, 0.01))
    assert fsn2.equilibria is not None and len(fsn2.equilibria) > 0
    assert fn.grid.shape[1] == 5
    assert fn.grid_csv().startswith("zone,z,x,zdot,xdot\n")


def test_field_sign_pattern(node):
    xd, zd = reduced_field(node, np.array([-0.5, 0.5]), np.array([0.0, 0.0]))
    assert np.all(np.isfinite(xd)) and np.all(np.isfinite(zd))


def test_funnel_membership(node):
    assert isinstance(in_funnel(node, -0.5, -0.05, 0.1), bool)
