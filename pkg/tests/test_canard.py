import math

import numpy as np
import pytest

from oracles import symmetric_canards, tangent_equation_scan
from pwlcanard.canard import (admissible_window, canard_coordinates_leading, maximal_canards,
                              maximal_canards_report, num_den, q_rational, root_scaffold,
                              selected_canard, selected_delta, validate_entry, weak_canard_gap)
from pwlcanard.geometry import reflect, slow_manifolds
from pwlcanard.hybrid import integrate
from pwlcanard.model import Params, ValidationError, build_minimal_3d


@pytest.mark.parametrize("p", [(1, -1, 0.22, 1e-3), (1, -1, 0.2, 1e-2), (1, -1, 0.1, 1e-2),
                               (1, 1, 0.1, 1e-2), (1.5, -0.5, 0.3, 4e-3)])
def test_solver_matches_symmetric_oracle(p):
    P = Params(*p)
    sols = maximal_canards(P)
    ref = sorted(symmetric_canards(*p), reverse=True)
    assert len(sols) == len(ref)
    for s, (z, turns) in zip(sorted(sols, key=lambda c: -c.entry[2]), ref):
        assert s.entry[2] == pytest.approx(z, abs=1e-10)
        assert s.k == turns


def test_tangent_scan_count_matches(node):
    P = Params(1, -1, 0.22, 1e-3)
    assert len(tangent_equation_scan(1, -1, 0.22, 1e-3)) == len(maximal_canards(P))


def test_solutions_validated(node):
    for s in maximal_canards(node):
        assert s.valid
        assert s.residual <= 1e-12
        assert s.exit_error <= 1e-8
        assert s.max_abs_x <= node.delta * (1 + 1e-9)
        assert s.flight_time == pytest.approx(-2 * s.entry[2] / (node.eps * node.p3), rel=1e-9)


def test_entry_on_attracting_trace(node):
    sm = slow_manifolds(node)
    for s in maximal_canards(node):
        assert s.entry[0] == -node.delta
        assert s.entry[1] == pytest.approx(float(sm.y_on_A(s.entry[2])), abs=1e-15)


def test_leading_order_close_for_small_eps():
    P = Params(1, -1, 0.2, 1e-4)
    for s in maximal_canards(P)[:3]:
        y, z = canard_coordinates_leading(P, s.k)
        assert abs(s.entry[2] - z) < 0.05 * abs(z)


def test_no_canards_without_rotation():
    for p2 in (1.0, -1.0):
        assert maximal_canards(Params(-1, p2, 0.1, 1e-2)) == []


def test_negative_p3_mirrors():
    sols = maximal_canards(Params(1, 1, -0.1, 1e-2))
    assert len(sols) >= 1
    assert all(s.valid for s in sols)


def test_fsn_rejected():
    with pytest.raises(ValidationError):
        maximal_canards(Params(1, 0, 0.1, 1e-2))


def test_scaffold_and_q(node):
    sc = root_scaffold(node)
    assert sc.spacing == pytest.approx(0.2 * 0.1 / 1 * math.pi / 2)
    num, den = num_den(node, -0.05)
    assert np.isfinite(num) and np.isfinite(den)
    for pole in sc.poles:
        with pytest.raises(ValidationError):
            q_rational(node, pole)


def test_window_ordering(node):
    lo, hi = admissible_window(node)
    assert lo < hi <= 0


def test_validate_entry_reports_reflection(node):
    s = maximal_canards(node)[0]
    v = validate_entry(node, s.entry)
    assert np.linalg.norm(v["exit"] - reflect(s.entry)) < 1e-10
    assert v["winding"] == 0


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_selected_canard_matches_integration(k):
    P = Params(1, -1, 0.22, 1e-3)
    sc = selected_canard(P, k)
    assert sc.delta_k == pytest.approx(selected_delta(P, k))
    spec = build_minimal_3d(sc.params)
    tr = integrate(spec, sc.entry, sc.flight_time, output_step=sc.flight_time / 2000)
    ref = sc(tr.samples[:, 0])
    assert np.max(np.abs(tr.samples[:, 1:4] - ref)) <= 1e-8
    # stays central until the exit at the flight time
    for seg in tr.segments:
        assert seg.zone == 1 or seg.t1 - seg.t0 <= 1e-8


def test_selected_canard_range():
    with pytest.raises(ValidationError):
        selected_canard(Params(1, -1, 0.2, 1e-2), 6)
    with pytest.raises(ValidationError):
        selected_canard(Params(1, 1, 0.2, 1e-2), 0)


def test_weak_gap_scales_linearly():
    r = [weak_canard_gap(Params(1, -1, 0.2, e)) / e for e in (1e-2, 1e-3, 1e-4)]
    assert max(r) / min(r) < 1.1


def test_report_flags_rejections(node):
    rep = maximal_canards_report(node)
    assert rep.window[0] < rep.window[1]
    assert all(not r.valid for r in rep.rejected)
