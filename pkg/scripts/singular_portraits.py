"""Opened singular portraits (reduced flow on the critical manifold) for each folded type."""
import json

from _common import out_dir

from pwlcanard import Params, singular_portrait

out = out_dir(__doc__)
for name, p in {"node": (1, -1, 0.1), "saddle": (1, 1, 0.1), "fsn1": (1, 0, 0.1),
                "fsn2": (1, -1, 0.0)}.items():
    sp = singular_portrait(Params(*p, 0.01))
    (out / f"singular_{name}.json").write_text(json.dumps(sp.to_json(), indent=1))
    (out / f"singular_{name}_grid.csv").write_text(sp.grid_csv())
    print(f"{name}: tangency={sp.tangency} weak connected={sp.weak_connected} "
          f"strong connected={sp.strong_connected}")
