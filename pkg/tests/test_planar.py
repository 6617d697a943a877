import math

import numpy as np
import pytest

from pwlcanard.model import PlanarConfig, ValidationError, build_planar, eval_pwl
from pwlcanard.planar import (explosion_scan, find_cycle, oscillations, outer_branch_separation,
                              relaxation_amplitude, return_map, transient_mmo)

ARIMA = PlanarConfig(kind="arima", eps=0.1)
QUASI = PlanarConfig(kind="quasi-canard", eps=0.2, k=0.885)


def test_branch_separation_defaults():
    assert outer_branch_separation(PlanarConfig(kind="quasi-canard", k=0.5)) == pytest.approx(3.0)
    assert outer_branch_separation(ARIMA) == pytest.approx(2.0)


def test_relaxation_amplitude_positive():
    assert relaxation_amplitude(ARIMA) > 1.0
    assert relaxation_amplitude(QUASI) > 1.0


def test_arima_central_cycle_family():
    # with a flat centre the inner closed orbits are a continuum; the outermost one
    # just touches the switching line, so its amplitude is 2 (delta - a)
    for a in (0.02, 0.05):
        res = find_cycle(ARIMA, a)
        assert res.cycle is not None
        assert res.cycle.amplitude == pytest.approx(2 * (ARIMA.delta - a), rel=1e-5)


def test_cycle_closes():
    res = find_cycle(QUASI, 0.9)
    c = res.cycle
    assert c is not None
    ev, _ = return_map(build_planar(QUASI.__class__(**{**QUASI.__dict__, "a": 0.9})), 0.9, c.y_section)
    assert abs(ev.state[1] - c.y_section) <= 1e-8


def test_no_cycle_past_explosion():
    assert find_cycle(QUASI, 1.05).cycle is None


def test_scan_csv_and_jump():
    sc = explosion_scan(QUASI, (0.9, 1.1), 5, refine=False)
    text = sc.to_csv()
    assert text.splitlines()[0] == "a,amplitude,period"
    assert len(text.splitlines()) == 6
    assert sc.interval is not None and sc.interval[0] < 1.0 <= sc.interval[1]
    with pytest.raises(ValidationError):
        explosion_scan(QUASI, (0.0, 1.0), 1)


def test_oscillation_labels_synthetic():
    t = np.linspace(0, 40 * math.pi, 8001)
    amp = np.where(t < 20 * math.pi, 0.1, 2.0)
    x = amp * np.sin(t)
    samples = np.column_stack([t, x, np.zeros_like(t), np.zeros_like(t)])
    labels = [o.label for o in oscillations(samples, 1.0)]
    assert labels[:8] == ["SAO"] * 8
    assert labels[-3:] == ["LAO"] * 3


def test_transient_needs_drift():
    with pytest.raises(ValidationError):
        transient_mmo(build_planar(ARIMA), [0.0, 0.0], 10.0)


def test_quasi_transient_pattern():
    cfg = PlanarConfig(kind="quasi-canard", eps=0.1, k=0.5, a=1.05)
    spec = build_planar(cfg, drift=-0.001)
    tm = transient_mmo(spec, [1.05, float(eval_pwl(spec.curve, 1.05)), 1.05], 3000)
    assert tm.pattern().startswith("sss")
    assert "L" in tm.pattern()


def test_arima_flat_centre_keeps_sao_amplitude_and_slope_grows_it():
    # flat centre: linear rotation, amplitude is an adiabatic invariant;
    # a small positive central slope makes the centre a weakly repelling focus
    def saos(beta):
        cfg = PlanarConfig(kind="arima", eps=0.1, a=0.3, beta=beta)
        spec = build_planar(cfg, drift=-0.001)
        tm = transient_mmo(spec, [0.3, float(eval_pwl(spec.curve, 0.3)), 0.3], 8000)
        i = tm.pattern().find("L")
        return np.array([o.amplitude for o in tm.oscillations[:i]])

    flat = saos(0.0)
    assert np.ptp(flat) <= 1e-12
    sloped = saos(0.02)
    assert len(sloped) > 3 and np.all(np.diff(sloped) > 0)
