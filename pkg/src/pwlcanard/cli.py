"""Command-line interface.

Every subcommand reads an optional JSON ``--config`` holding one scenario
object whose keys are the long flag names (dashes or underscores); flags given
on the command line override it. JSON goes to stdout (or ``--out``), CSV
tables to ``--csv``. Exit codes: 0 success, 2 invalid input, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import (NumericalError, Params, PlanarConfig, ReturnParams, ValidationError,
                    build_global_return, build_minimal_3d, build_planar, eval_pwl)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

# Built-in defaults; a config file and then flags override these.
DEFAULTS = {
    "p1": 1.0, "p2": -1.0, "p3": 0.2, "eps": 0.01, "delta": None,
    "alpha1": 0.0, "alpha2": 0.0, "alpha3": 0.0, "kappa": 0.0, "zeta": 0.0, "xi": 0.0,
    "x0": 1.0, "system": "minimal", "x": None, "y": None, "z": None,
    "horizon": 100.0, "output_step": None, "k": 0, "n_samples": 513,
    "window": None, "grid": 21, "delta_tilde": None, "closed": False,
    "kind": "quasi-canard", "a": None, "k_slope": None, "beta": 0.0, "half_width": 0.1,
    "fold": -1.0, "a_min": None, "a_max": None, "n": 11, "resolution": 1e-10,
    "no_refine": False, "drift": -0.001, "theta": None, "burn_in": 40, "tol": 1e-8,
    "seed": None, "param": "eps", "values": None, "out": None, "csv": None,
}

_PARAM_KEYS = ("p1", "p2", "p3", "eps", "delta")
_PLANAR_COMMANDS = ("planar-cycle", "planar-scan", "transient-mmo")
_RETURN_KEYS = ("alpha1", "alpha2", "alpha3", "kappa", "zeta", "xi", "x0")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage text and exit code 2 on unknown flags
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_params(p, return_too=False):
    g = p.add_argument_group("system coefficients")
    for key in _PARAM_KEYS:
        g.add_argument(f"--{key}", type=float)
    if return_too:
        r = p.add_argument_group("global return")
        for key in _RETURN_KEYS:
            r.add_argument(f"--{key.replace('_', '-')}", type=float)


def _add_planar(p):
    g = p.add_argument_group("planar system")
    g.add_argument("--kind", choices=["quasi-canard", "arima"])
    g.add_argument("--eps", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--k-slope", type=float, help="outer slope of the quasi-canard curve")
    g.add_argument("--beta", type=float)
    g.add_argument("--half-width", type=float, help="central half-width of the arima curve")
    g.add_argument("--fold", type=float, help="outer breakpoint of the arima curve")


def _add_io(p, csv=True):
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--out", help="write the JSON summary here instead of stdout")
    if csv:
        p.add_argument("--csv", help="write the CSV table here")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pwlcanard", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="folded-singularity class and winding bound")
    _add_params(p)
    _add_io(p, csv=False)

    p = sub.add_parser("simulate", help="integrate the minimal or return system")
    _add_params(p, return_too=True)
    p.add_argument("--system", choices=["minimal", "return"])
    for c in ("x", "y", "z"):
        p.add_argument(f"--{c}", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--output-step", type=float)
    _add_io(p)

    p = sub.add_parser("canards", help="maximal canards of the minimal system")
    _add_params(p)
    _add_io(p, csv=False)

    p = sub.add_parser("selected", help="closed-form canard for the tuned half-width")
    _add_params(p)
    p.add_argument("--k", type=int)
    p.add_argument("--n-samples", type=int)
    _add_io(p)

    p = sub.add_parser("singular", help="singular phase portrait")
    _add_params(p)
    p.add_argument("--window", type=str, help="zmin,zmax,xmin,xmax")
    p.add_argument("--grid", type=int)
    p.add_argument("--delta-tilde", type=float)
    p.add_argument("--closed", action="store_true", default=None,
                   help="collapse the central zone (no opened portrait)")
    _add_io(p)

    p = sub.add_parser("planar-cycle", help="attracting cycle of a planar system")
    _add_planar(p)
    _add_io(p)

    p = sub.add_parser("planar-scan", help="cycle amplitude over a parameter range")
    _add_planar(p)
    p.add_argument("--a-min", type=float)
    p.add_argument("--a-max", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--resolution", type=float)
    p.add_argument("--no-refine", action="store_true", default=None)
    _add_io(p)

    p = sub.add_parser("transient-mmo", help="planar system with slowly drifting parameter")
    _add_planar(p)
    p.add_argument("--drift", type=float)
    for c in ("x", "y"):
        p.add_argument(f"--{c}", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--output-step", type=float)
    _add_io(p)

    p = sub.add_parser("mmo", help="periodic MMO of the system with global return")
    _add_params(p, return_too=True)
    p.add_argument("--seed", type=str, help="x,y,z start of the burn-in")
    p.add_argument("--burn-in", type=int)
    p.add_argument("--tol", type=float)
    _add_io(p)

    p = sub.add_parser("sweep", help="canard entries over a list of parameter values")
    _add_params(p)
    p.add_argument("--param", choices=["eps", "p1", "p2", "p3"])
    p.add_argument("--values", type=str, help="comma-separated values")
    _add_io(p)
    return ap


def _resolve(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from None
        if not isinstance(raw, dict):
            raise ValidationError("config must hold one JSON object")
        cfg = {k.replace("-", "_"): v for k, v in raw.items()}
        cmd = cfg.pop("command", None)
        if cmd is not None and cmd != args.command:
            raise ValidationError(f"config is for {cmd!r}, not {args.command!r}")
    opts = dict(DEFAULTS)
    if args.command in ("mmo",):
        from .mmo import DEMO_PARAMS, DEMO_RETURN
        opts.update({k: getattr(DEMO_PARAMS, k) for k in ("p1", "p2", "p3", "eps")})
        opts.update({k: getattr(DEMO_RETURN, k) for k in _RETURN_KEYS})
    if args.command in _PLANAR_COMMANDS:
        opts["eps"] = None  # the planar configuration carries its own default
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    opts.update(cfg)
    for key, val in vars(args).items():
        if key in DEFAULTS and val is not None:
            opts[key] = val
    return opts


def _params(o) -> Params:
    return Params(float(o["p1"]), float(o["p2"]), float(o["p3"]), float(o["eps"]),
                  None if o["delta"] is None else float(o["delta"]))


def _return(o) -> ReturnParams:
    return ReturnParams(*(float(o[k]) for k in _RETURN_KEYS))


def _planar(o) -> PlanarConfig:
    base = PlanarConfig(kind=o["kind"])
    eps = base.eps if o["eps"] is None else o["eps"]
    return PlanarConfig(kind=o["kind"], eps=float(eps),
                        a=float(base.a if o["a"] is None else o["a"]),
                        k=float(base.k if o["k_slope"] is None else o["k_slope"]),
                        beta=float(o["beta"]), delta=float(o["half_width"]), x0=float(o["fold"]))


def _floats(text, n=None, name="value"):
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"{name} must be comma-separated numbers") from None
    if n is not None and len(vals) != n:
        raise ValidationError(f"{name} needs {n} numbers")
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{name} must be finite")
    return vals


def _clean(obj):
    """Replace non-finite floats by ``None`` so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit_json(obj, o, stdout):
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    if o["out"]:
        with open(o["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _emit_csv(text, o, stdout, primary=False):
    """CSV goes to ``--csv``; commands whose main product is a table print it otherwise."""
    if o["csv"]:
        with open(o["csv"], "w", newline="") as fh:
            fh.write(text)
    elif primary:
        stdout.write(text)


def _table(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(str(v) if isinstance(v, (int, np.integer)) and not isinstance(v, bool)
                              else format(float(v), ".17g") for v in r))
    return "\n".join(lines) + "\n"


def threads() -> int:
    raw = os.environ.get("PWL_CANARD_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


# --- subcommands -----------------------------------------------------------

def cmd_classify(o, out):
    from .geometry import classify
    c = classify(float(o["p1"]), float(o["p2"]), float(o["p3"]))
    res = c.to_json()
    res["class"] = c.label
    _emit_json(res, o, out)


def cmd_simulate(o, out):
    from .hybrid import integrate
    P = _params(o)
    spec = build_global_return(P, _return(o)) if o["system"] == "return" else build_minimal_3d(P)
    x = -P.delta if o["x"] is None else float(o["x"])
    y = float(eval_pwl(spec.curve, x)) if o["y"] is None else float(o["y"])
    z = -0.1 if o["z"] is None else float(o["z"])
    tr = integrate(spec, [x, y, z], float(o["horizon"]),
                   output_step=None if o["output_step"] is None else float(o["output_step"]))
    text = tr.to_csv()
    _emit_csv(text, o, out, primary=not o["out"])
    if o["out"]:
        _emit_json({"reason": tr.reason, "t_end": tr.t_end, "end_state": tr.end_state.tolist(),
                    "segments": len(tr.segments)}, o, out)


def cmd_canards(o, out):
    from .canard import maximal_canards_report
    rep = maximal_canards_report(_params(o))
    _emit_json([s.to_json() for s in rep.solutions], o, out)


def cmd_selected(o, out):
    from .canard import selected_canard
    sc = selected_canard(_params(o), int(o["k"]))
    n = max(2, int(o["n_samples"]))
    t = np.linspace(0.0, sc.flight_time, n)
    pts = sc(t)
    _emit_csv(_table(["t", "x", "y", "z"], np.column_stack([t, pts])), o, out)
    _emit_json({"k": sc.k, "delta_k": sc.delta_k, "entry": sc.entry.tolist(),
                "flight_time": sc.flight_time}, o, out)


def cmd_singular(o, out):
    from .singular import singular_portrait
    P = _params(o)
    kw = {"opened": not o["closed"], "n": int(o["grid"])}
    if o["window"] is not None:
        kw["window"] = tuple(_floats(o["window"], 4, "window"))
    if o["delta_tilde"] is not None:
        kw["delta_t"] = float(o["delta_tilde"])
    sp = singular_portrait(P, **kw)
    _emit_csv(sp.grid_csv(), o, out)
    _emit_json(sp.to_json(), o, out)


def cmd_planar_cycle(o, out):
    from .planar import find_cycle
    cfg = _planar(o)
    res = find_cycle(cfg)
    if res.cycle is None:
        raise NumericalError(f"no attracting cycle at a={cfg.a}: {res.diagnostic}")
    _emit_csv(res.cycle.orbit.to_csv(), o, out)
    _emit_json(res.cycle.to_json(), o, out)


def cmd_planar_scan(o, out):
    from .planar import explosion_scan
    cfg = _planar(o)
    lo = cfg.a - 0.05 if o["a_min"] is None else float(o["a_min"])
    hi = cfg.a + 0.05 if o["a_max"] is None else float(o["a_max"])
    sc = explosion_scan(cfg, (lo, hi), int(o["n"]), refine=not o["no_refine"],
                        resolution=float(o["resolution"]))
    _emit_csv(sc.to_csv(), o, out, primary=not o["out"])
    if o["out"]:
        _emit_json({"interval": sc.interval, "width": sc.width, "relaxation": sc.relaxation,
                    "notes": sc.notes}, o, out)


def cmd_transient_mmo(o, out):
    from .planar import transient_mmo
    cfg = _planar(o)
    spec = build_planar(cfg, drift=float(o["drift"]))
    x = cfg.a if o["x"] is None else float(o["x"])
    y = float(eval_pwl(spec.curve, x)) if o["y"] is None else float(o["y"])
    tm = transient_mmo(spec, [x, y, cfg.a], float(o["horizon"]),
                       theta=None if o["theta"] is None else float(o["theta"]),
                       output_step=None if o["output_step"] is None else float(o["output_step"]))
    _emit_csv(tm.trajectory.to_csv(), o, out)
    _emit_json({"pattern": tm.pattern(), "theta": tm.theta,
                "oscillations": [{"t0": s.t0, "t1": s.t1, "x_min": s.x_min, "x_max": s.x_max,
                                  "label": s.label} for s in tm.oscillations]}, o, out)


def cmd_mmo(o, out):
    from .mmo import DEMO_SEED, find_periodic_mmo, sao_amplitudes
    spec = build_global_return(_params(o), _return(o))
    seed = DEMO_SEED if o["seed"] is None else _floats(o["seed"], 3, "seed")
    po = find_periodic_mmo(spec, seed, tol=float(o["tol"]), burn_in=int(o["burn_in"]))
    _emit_csv(po.orbit.to_csv(), o, out)
    res = po.to_json()
    res["sao_amplitudes"] = sao_amplitudes(spec, po.orbit).tolist()
    _emit_json(res, o, out)


def _sweep_one(P):
    from .canard import maximal_canards_report
    return maximal_canards_report(P).solutions


def cmd_sweep(o, out):
    if o["values"] is None:
        raise ValidationError("sweep needs --values")
    vals = _floats(o["values"], name="values")
    base = _params(o)
    key = o["param"]
    plist = []
    for v in vals:
        kw = {k: getattr(base, k) for k in ("p1", "p2", "p3", "eps")}
        kw[key] = v
        plist.append(Params(**kw, delta=None if o["delta"] is None else float(o["delta"])))
    with ThreadPoolExecutor(max_workers=min(threads(), len(plist) or 1)) as ex:
        results = list(ex.map(_sweep_one, plist))  # map keeps index order
    rows = [(v, s.k, s.entry[0], s.entry[1], s.entry[2], s.flight_time)
            for v, sols in zip(vals, results) for s in sols]
    _emit_csv(_table([key, "k", "x", "y", "z", "flight_time"], rows), o, out,
              primary=not o["out"])
    if o["out"]:
        _emit_json({"param": key, "values": vals, "counts": [len(r) for r in results]}, o, out)


COMMANDS = {
    "classify": cmd_classify, "simulate": cmd_simulate, "canards": cmd_canards,
    "selected": cmd_selected, "singular": cmd_singular, "planar-cycle": cmd_planar_cycle,
    "planar-scan": cmd_planar_scan, "transient-mmo": cmd_transient_mmo, "mmo": cmd_mmo,
    "sweep": cmd_sweep,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _resolve(args)
        COMMANDS[args.command](opts, stdout)
    except ValidationError as exc:
        stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except NumericalError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (TypeError, ValueError) as exc:
        stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run())
