"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line (shown in the terminal summary and
printed immediately) with the measured quantity next to its pinned tolerance.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import symmetric_canards, tangent_equation_scan
from pwlcanard.canard import (canard_coordinates_leading, maximal_canards, selected_canard,
                              weak_canard_gap)
from pwlcanard.geometry import classify, max_winding, reflect, winding_from_flight
from pwlcanard.hybrid import integrate, winding_number
from pwlcanard.model import Params, PlanarConfig, build_global_return, build_minimal_3d, build_planar, eval_pwl
from pwlcanard.mmo import (CONSTANT_SAO_ENTRY, CONSTANT_SAO_RETURN, DEMO_PARAMS, DEMO_RETURN,
                           FOLDED_SADDLE_PARAMS, FOLDED_SADDLE_START, central_spectrum,
                           find_periodic_mmo, sao_amplitudes, signature)
from pwlcanard.planar import explosion_scan, transient_mmo
from pwlcanard.singular import invariant_half_lines, reduced_flow, singular_portrait
from pwlcanard.zoneflow import affine_flow, first_integral_H, flows_for

NODE_PARAMS = Params(1.0, -1.0, 0.2, 0.01)


def record(n, title, ok, detail):
    line = f"AC {n}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_ac01_classification():
    cases = {(1, 1, 0.1): "FoldedSaddle", (1, -1, 0.1): "FoldedNode", (1, -2, 1): "FoldedFocus",
             (1, 0, 0.1): "FSN-I", (1, -1, 0): "FSN-II", (-1, 1, 0.1): "NonRotating+Saddle-sign"}
    got = {p: classify(*p).label for p in cases}
    bad = {p: g for p, g in got.items() if g != cases[p]}
    record(1, "classification of six parameter sets", not bad, f"mismatches={bad}")


def test_ac02_winding_bound():
    mu = max_winding(1, -1, 0.2)
    flights = [winding_from_flight(Params(1, -1, 0.2, e)) for e in (1e-2, 1e-3, 1e-4, 1e-5)]
    spread = max(flights) - min(flights)
    ok = abs(mu - 5) <= 1e-12 and spread <= 1e-12 and abs(flights[0] - mu) <= 1e-12
    record(2, "mu(1,-1,0.2)=5 and eps-independent", ok, f"|mu-5|={abs(mu-5):.1e}, spread={spread:.1e} (tol 1e-12)")


def test_ac03_canard_count_folded_node():
    p = (1.0, -1.0, 0.22, 1e-3)
    P = Params(*p)
    sols = maximal_canards(P)
    ks = [s.k for s in sols]
    oracle = sorted(symmetric_canards(*p), key=lambda r: -r[0])
    scan = tangent_equation_scan(*p)
    zs = sorted((s.entry[2] for s in sols), reverse=True)
    agree = len(oracle) == len(sols) and all(abs(a - b[0]) <= 1e-10 for a, b in zip(zs, oracle))
    checks = all(s.exit_error <= 1e-8 and s.resident and s.winding == s.k and s.residual <= 1e-12
                 for s in sols)
    ok = ks == [0, 1, 2, 3, 4] and agree and len(scan) == len(sols) and checks
    record(3, "exactly 5 validated canards k=0..4 at (1,-1,0.22,1e-3)", ok,
           f"mu={max_winding(1, -1, 0.22):.4f}, solver k={ks}, symmetric oracle n={len(oracle)}, "
           f"tangent scan n={len(scan)}, oracle agreement={agree}, per-canard checks={checks}")


def test_ac04_counts_saddle_and_nonrotating():
    n_saddle = len(maximal_canards(Params(1, 1, 0.1, 1e-2)))
    n_nr = [len(maximal_canards(Params(-1, s, 0.1, 1e-2))) for s in (1, -1)]
    ok = n_saddle == 1 and n_nr == [0, 0]
    record(4, "one canard for the folded saddle, none without rotation", ok,
           f"saddle={n_saddle}, p1<0={n_nr}")


def test_ac05_asymptotics():
    eps_list = (1e-2, 1e-3, 1e-4)
    ratios = {}
    for k in (0, 1, 2):
        r = []
        for e in eps_list:
            P = NODE_PARAMS.with_eps(e)
            s = [c for c in maximal_canards(P) if c.k == k][0]
            _, zk = canard_coordinates_leading(P, k)
            r.append(abs(s.entry[2] - zk) / e)
        ratios[k] = r
    spread = {k: max(r) / min(r) for k, r in ratios.items()}
    ok = all(v <= 3 for v in spread.values())
    record(5, "|z_k - leading| / eps within a factor 3 across eps", ok,
           "max/min per k: " + ", ".join(f"k={k}: {v:.1f}" for k, v in spread.items()))


def test_ac06_explicit_canards():
    errs = []
    for k in range(4):
        sc = selected_canard(NODE_PARAMS, k)
        assert sc.flight_time == pytest.approx((2 * k + 1) * math.pi / math.sqrt(NODE_PARAMS.eps * NODE_PARAMS.p1))
        tr = integrate(build_minimal_3d(sc.params), sc.entry, sc.flight_time,
                       output_step=sc.flight_time / 4000)
        errs.append(float(np.max(np.abs(tr.samples[:, 1:4] - sc(tr.samples[:, 0])))))
    record(6, "closed-form canards match integration, k=0..3", max(errs) <= 1e-8,
           f"sup errors={['%.1e' % e for e in errs]} (tol 1e-8)")


def test_ac07_conservation_symmetry_semigroup():
    rng = np.random.default_rng(7)
    zf = flows_for(build_minimal_3d(NODE_PARAMS))[1]
    h_err = r_err = g_err = 0.0
    for s in maxiter_states(rng, 200):
        t1, t2 = rng.uniform(0, 200, 2)
        h0 = first_integral_H(NODE_PARAMS, s)
        h_err = max(h_err, abs(first_integral_H(NODE_PARAMS, affine_flow(zf, s, t1)) - h0) / h0)
        a = reflect(affine_flow(zf, s, t1))
        b = affine_flow(zf, reflect(s), -t1)
        r_err = max(r_err, float(np.max(np.abs(a - b))))
        c = affine_flow(zf, affine_flow(zf, s, t1), t2)
        d = affine_flow(zf, s, t1 + t2)
        g_err = max(g_err, float(np.max(np.abs(c - d))))
    ok = h_err <= 1e-12 and r_err <= 1e-12 and g_err <= 1e-12
    record(7, "H drift, R-equivariance, semigroup", ok,
           f"H rel={h_err:.1e}, R={r_err:.1e}, semigroup={g_err:.1e} (tol 1e-12)")


def maxiter_states(rng, n):
    d = NODE_PARAMS.delta
    for _ in range(n):
        yield np.array([rng.uniform(-d, d), rng.uniform(-0.05, 0.05), rng.uniform(-0.3, 0.3)])


def test_ac08_weak_canard_gap():
    r = [weak_canard_gap(NODE_PARAMS.with_eps(e)) / e for e in (1e-2, 1e-3, 1e-4)]
    spread = max(r) / min(r) - 1
    record(8, "weak-canard gap is O(eps)", spread <= 0.10,
           f"gap/eps={['%.5f' % v for v in r]}, variation={spread:.3%} (tol 10%)")


def test_ac09_folded_saddle_saos():
    P = FOLDED_SADDLE_PARAMS
    tr = integrate(build_minimal_3d(P), FOLDED_SADDLE_START, 1e4, sections=[(-P.delta, -1)],
                   stop_after=1)
    inside = all(seg.zone == 1 for seg in tr.segments)
    w = winding_number(tr, P).turns
    record(9, "folded saddle start winds >= 2 times before exit", inside and w >= 2,
           f"start={FOLDED_SADDLE_START}, winding={w}, central until exit={inside}")


def test_ac10_singular_portraits():
    worst = 0.0
    for p in ((1, -1, 0.1), (1, 1, 0.1), (2, -0.5, 0.7)):
        P = Params(*p, 0.01)
        hl = invariant_half_lines(P)
        for zone, side in (("right", 1), ("left", -1)):
            c = hl[zone]
            for z in np.linspace(-2, 2, 9):
                x = (c - P.p2 * z) / P.p1
                if x * side <= 0:
                    continue
                for t in (0.5, 1.0, 2.0):
                    x1, z1 = reduced_flow(P, zone, (x, z), t)
                    scale = max(1.0, abs(P.p1 * x1), abs(P.p2 * z1))
                    worst = max(worst, abs(P.p1 * x1 + P.p2 * z1 - c) / scale)
    fn = singular_portrait(Params(1, -1, 0.1, 0.01))
    fs = singular_portrait(Params(1, 1, 0.1, 0.01))
    f2 = singular_portrait(Params(1, -1, 0.0, 0.01))
    ok = (worst <= 1e-12 and fn.strong_connected and not fn.weak_connected
          and fs.weak_connected and not fs.strong_connected
          and f2.equilibria is not None and len(f2.equilibria) > 0)
    record(10, "half-lines invariant; node/saddle connectivity; FSN-II equilibria", ok,
           f"half-line err={worst:.1e}, node strong/weak={fn.strong_connected}/{fn.weak_connected}, "
           f"saddle strong/weak={fs.strong_connected}/{fs.weak_connected}, "
           f"FSN-II equilibria={0 if f2.equilibria is None else len(f2.equilibria)}")


def test_ac11_planar_explosion():
    ar = explosion_scan(PlanarConfig(kind="arima", eps=0.1), (-0.05, 0.05), 6, resolution=1e-8)
    qs = explosion_scan(PlanarConfig(kind="quasi-canard", eps=0.2), (0.8, 1.1), 6, resolution=1e-8)
    big = qs.amplitude.max()
    explosive = qs.width is not None and qs.width < 1e-6 and big > 0.5 * qs.relaxation
    no_head = float(np.nanmax(qs.repelling_track)) < 0.5
    ok = ar.width is not None and ar.width < 1e-6 and explosive and no_head
    record(11, "arima transition width < 1e-6; quasi explosive without canard-with-head", ok,
           f"arima width={ar.width:.1e}, quasi width={qs.width:.1e}, quasi max amp={big:.2f}, "
           f"max repelling track={np.nanmax(qs.repelling_track):.2f}")


def test_ac12_transient_mmo():
    qc = PlanarConfig(kind="quasi-canard", eps=0.1, k=0.5, a=1.05)
    qspec = build_planar(qc, drift=-0.001)
    q = transient_mmo(qspec, [1.05, float(eval_pwl(qspec.curve, 1.05)), 1.05], 3000)
    pat = q.pattern()
    n_sao = len(pat) - len(pat.lstrip("s"))
    quasi_ok = n_sao >= 3 and pat[n_sao:n_sao + 1] == "L"
    ac = PlanarConfig(kind="arima", eps=0.1, a=0.3)
    aspec = build_planar(ac, drift=-0.001)
    a = transient_mmo(aspec, [0.3, float(eval_pwl(aspec.curve, 0.3)), 0.3], 8000)
    apat = a.pattern()
    i = apat.find("L")
    amps = np.array([o.amplitude for o in a.oscillations[:max(i, 0)]])
    growing = i > 1 and bool(np.all(np.diff(amps) > 0))
    ok = quasi_ok and growing
    record(12, "quasi: >=3 SAOs then LAO; arima+drift: SAOs grow before first LAO", ok,
           f"quasi pattern={pat[:12]}..., arima SAOs={i}, amplitude first/last="
           f"{amps[0]:.6g}/{amps[-1]:.6g}, min step={np.diff(amps).min():.1e}")


def test_ac13_mmo_with_return():
    t0 = time.time()
    spec = build_global_return(DEMO_PARAMS, DEMO_RETURN)
    po = find_periodic_mmo(spec)
    L, s = po.signature.pairs[0] if len(po.signature.pairs) == 1 else (None, None)
    sp = central_spectrum(DEMO_PARAMS, CONSTANT_SAO_RETURN)
    lit = build_global_return(DEMO_PARAMS, CONSTANT_SAO_RETURN)
    tr = integrate(lit, CONSTANT_SAO_ENTRY, 2000, sections=[(1.0, 1)], stop_after=1)
    amps = sao_amplitudes(lit, tr)
    spread = float(np.ptp(amps) / amps.mean()) if len(amps) else math.inf
    demo_amps = sao_amplitudes(spec, po.orbit)
    demo_spread = float(np.ptp(demo_amps) / demo_amps.mean())
    elapsed = time.time() - t0
    ok = (po.residual <= 1e-8 and L == 1 and s >= 2 and sp.max_abs_real <= 1e-12
          and spread <= 1e-6 and len(amps) >= 2 and elapsed <= 60)
    record(13, "periodic MMO 1^s (s>=2); constant-amplitude SAOs", ok,
           f"residual={po.residual:.1e}, signature={po.signature}, |Re|max={sp.max_abs_real:.1e}, "
           f"SAO spread={spread:.1e} over {len(amps)} (demo orbit {demo_spread:.1e}), {elapsed:.1f}s")


def test_ac14_cli_determinism(tmp_path):
    cfgs = {
        "canards": {"p1": 1, "p2": -1, "p3": 0.2, "eps": 0.01},
        "simulate": {"horizon": 300, "z": -0.12},
        "mmo": {},
        "sweep": {"values": "0.01,0.002"},
    }
    same = {}
    for cmd, cfg in cfgs.items():
        path = tmp_path / f"{cmd}.json"
        path.write_text(json.dumps({"command": cmd, **cfg}))
        outs = []
        for i in range(2):
            csv = tmp_path / f"{cmd}{i}.csv"
            argv = [sys.executable, "-m", "pwlcanard", cmd, "--config", str(path)]
            if cmd in ("simulate", "mmo"):
                argv += ["--csv", str(csv)]
            p = subprocess.run(argv, capture_output=True)
            outs.append((p.returncode, p.stdout, csv.read_bytes() if csv.exists() else b""))
        same[cmd] = outs[0] == outs[1] and outs[0][0] == 0
    record(14, "repeated CLI runs are byte-identical", all(same.values()), f"{same}")
