"""Coarse search over return couplings (alpha2, zeta) for a stable periodic 1^s orbit.

This is how the shipped demo parameters were chosen: alpha1 = alpha3 = 0,
folded-node local part, fold of the return at x0 = 1.
"""
import itertools

from _common import out_dir, write_csv

from pwlcanard import Params, ReturnParams, build_global_return, integrate
from pwlcanard.mmo import DEMO_SEED, signature

out = out_dir(__doc__)
P = Params(1.0, -1.0, 0.2, 0.01)
rows = []
for a2, zeta in itertools.product((-0.6, -0.8, -1.0, -1.2), (-0.1, -0.05, 0.0, 0.05, 0.1)):
    spec = build_global_return(P, ReturnParams(alpha2=a2, zeta=zeta, x0=1.0))
    tr = integrate(spec, DEMO_SEED, 60000, sections=[(-P.delta, 1)], dense=False)
    ev = tr.events
    if tr.reason != "horizon" or len(ev) < 6:
        print(f"alpha2={a2} zeta={zeta}: escaped")
        continue
    zs = [e.state[2] for e in ev[-6:]]
    period1 = max(zs) - min(zs) < 1e-6
    one = integrate(spec, ev[-2].state, ev[-1].t - ev[-2].t, dense=False)
    sig = signature(one, spec, cyclic=True)
    rows.append((a2, zeta, int(period1), zs[-1], sig.pairs[0][0], sig.pairs[0][1]))
    print(f"alpha2={a2} zeta={zeta}: period-1={period1} entry z={zs[-1]:.4f} last loop {sig}")
write_csv(out / "mmo_demo_search.csv", ["alpha2", "zeta", "period_one", "entry_z", "L", "s"], rows)
