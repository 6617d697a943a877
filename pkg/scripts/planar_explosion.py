"""Cycle amplitude against the parameter a for the two planar systems."""
from _common import out_dir

from pwlcanard import PlanarConfig, explosion_scan

out = out_dir(__doc__)
for cfg, rng in ((PlanarConfig(kind="arima", eps=0.1), (-0.05, 0.05)),
                 (PlanarConfig(kind="quasi-canard", eps=0.2), (0.8, 1.1))):
    coarse = explosion_scan(cfg, rng, 41, refine=False)
    (out / f"explosion_{cfg.kind}.csv").write_text(coarse.to_csv())
    fine = explosion_scan(cfg, rng, 6, resolution=1e-10)
    print(f"{cfg.kind}: transition interval {fine.interval}, width {fine.width:.2e}, "
          f"relaxation amplitude {fine.relaxation:.3f}")
