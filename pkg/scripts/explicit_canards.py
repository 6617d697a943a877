"""Closed-form canards for the tuned half-widths delta_k, k = 0..3, against exact integration."""
import numpy as np
from _common import out_dir, write_csv

from pwlcanard import Params, build_minimal_3d, integrate, selected_canard

out = out_dir(__doc__)
P = Params(1.0, -1.0, 0.2, 0.01)
for k in range(4):
    sc = selected_canard(P, k)
    tr = integrate(build_minimal_3d(sc.params), sc.entry, sc.flight_time,
                   output_step=sc.flight_time / 2000)
    ref = sc(tr.samples[:, 0])
    err = np.max(np.abs(tr.samples[:, 1:4] - ref))
    write_csv(out / f"explicit_canard_k{k}.csv", ["t", "x", "y", "z", "x_ref", "y_ref", "z_ref"],
              np.column_stack([tr.samples[:, :4], ref]))
    print(f"k={k} delta_k={sc.delta_k:.6f} flight={sc.flight_time:.4f} sup error={err:.2e}")
