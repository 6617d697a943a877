"""Periodic MMO of the system with a global return (shipped demo parameters)."""
import json

from _common import out_dir

from pwlcanard import build_global_return, central_spectrum, find_periodic_mmo
from pwlcanard.mmo import DEMO_PARAMS, DEMO_RETURN, sao_amplitudes

out = out_dir(__doc__)
spec = build_global_return(DEMO_PARAMS, DEMO_RETURN)
po = find_periodic_mmo(spec)
po.orbit.to_csv(out / "periodic_mmo.csv")
summary = po.to_json()
summary["sao_amplitudes"] = sao_amplitudes(spec, po.orbit).tolist()
summary["central_eigenvalues"] = [[z.real, z.imag] for z in
                                  central_spectrum(DEMO_PARAMS, DEMO_RETURN).eigenvalues]
(out / "periodic_mmo.json").write_text(json.dumps(summary, indent=1))
print(f"signature {po.signature}, period {po.period:.4f}, residual {po.residual:.1e}, "
      f"multipliers {po.multipliers.round(6)}")
