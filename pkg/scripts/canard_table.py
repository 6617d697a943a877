"""Maximal canards of the folded node for several eps, next to the leading-order entry heights."""
from _common import out_dir, write_csv

from pwlcanard import Params, maximal_canards
from pwlcanard.canard import canard_coordinates_leading
from pwlcanard.geometry import max_winding

out = out_dir(__doc__)
rows = []
for p3 in (0.2, 0.22):
    for eps in (1e-2, 1e-3, 1e-4):
        P = Params(1.0, -1.0, p3, eps)
        for s in maximal_canards(P):
            _, zl = canard_coordinates_leading(P, s.k)
            rows.append((p3, eps, s.k, s.entry[2], zl, (s.entry[2] - zl) / eps, s.flight_time,
                         s.exit_error))
        print(f"p3={p3} eps={eps:g} mu={max_winding(1, -1, p3):.4f} canards={len(maximal_canards(P))}")
write_csv(out / "canard_table.csv",
          ["p3", "eps", "k", "z", "z_leading", "scaled_error", "flight_time", "exit_error"], rows)
print(f"wrote {out / 'canard_table.csv'}")
