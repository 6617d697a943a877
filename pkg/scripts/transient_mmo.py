"""Transient MMOs of the planar systems under a slow drift of a."""
import numpy as np
from _common import out_dir

from pwlcanard import PlanarConfig, build_planar, eval_pwl, transient_mmo

out = out_dir(__doc__)
runs = {"quasi": (PlanarConfig(kind="quasi-canard", eps=0.1, k=0.5, a=1.05), 3000.0),
        "arima": (PlanarConfig(kind="arima", eps=0.1, a=0.3), 8000.0)}
for name, (cfg, horizon) in runs.items():
    spec = build_planar(cfg, drift=-0.001)
    tm = transient_mmo(spec, [cfg.a, float(eval_pwl(spec.curve, cfg.a)), cfg.a], horizon)
    tm.trajectory.to_csv(out / f"transient_{name}.csv")
    pat = tm.pattern()
    i = pat.find("L")
    amps = np.array([o.amplitude for o in tm.oscillations[:i]])
    print(f"{name}: {i} SAOs before the first LAO; amplitudes {amps[:3].round(4)} ... "
          f"{amps[-3:].round(4)}; pattern {pat[:20]}...")
