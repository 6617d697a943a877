"""Planar canard explosions and their slowly drifted 3D transients.

Planar systems are ``x' = y - f(x)``, ``y' = eps (a - x)`` in fast time.
Cycles are located as fixed points of the return map to the section
``x = a`` (the y-nullcline), crossed with ``x`` increasing; points on the
section are labelled by their ``y`` value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .hybrid import Trajectory, integrate
from .model import PlanarConfig, SystemSpec, ValidationError, build_planar

RETURN_TOL = 1e-10
MAX_ITER = 200


def _config(spec_or_cfg) -> PlanarConfig:
    if isinstance(spec_or_cfg, PlanarConfig):
        return spec_or_cfg
    if isinstance(spec_or_cfg, SystemSpec) and "planar" in spec_or_cfg.meta:
        return spec_or_cfg.meta["planar"]
    raise ValidationError("expected a planar SystemSpec or PlanarConfig")


def relaxation_amplitude(cfg: PlanarConfig) -> float:
    """x-width of the singular relaxation loop between the two outer attracting branches."""
    curve = cfg.curve()
    bps = curve.breakpoints
    # folds are the breakpoints where the slope changes sign
    folds = [b for b, s0, s1 in zip(bps, curve.slopes, curve.slopes[1:]) if s0 * s1 <= 0]
    if cfg.kind == "arima":
        folds = [bps[0], 0.0]
    lo_fold, hi_fold = min(folds), max(folds)
    y_hi, y_lo = float(curve(lo_fold)), float(curve(hi_fold))
    if y_lo > y_hi:
        y_lo, y_hi = y_hi, y_lo
    # landing abscissae on the outer branches at the fold heights
    left = _solve_on(curve, 0, max(y_lo, min(y_hi, float(curve(hi_fold)))))
    right = _solve_on(curve, len(curve.slopes) - 1, max(y_lo, min(y_hi, float(curve(lo_fold)))))
    return float(max(right, hi_fold, lo_fold) - min(left, lo_fold, hi_fold))


def _solve_on(curve, seg: int, y: float) -> float:
    m, b = curve.slopes[seg], curve.intercepts[seg]
    return (y - b) / m


def outer_branch_separation(cfg: PlanarConfig) -> float:
    """Horizontal distance between the first and last branches of ``f`` at mid fold height."""
    curve = cfg.curve()
    ym = float(np.mean(curve(np.asarray(curve.breakpoints))))
    return float(_solve_on(curve, len(curve.slopes) - 1, ym) - _solve_on(curve, 0, ym))


@dataclass
class Cycle:
    a: float
    y_section: float
    amplitude: float
    period: float
    displacement: float
    orbit: Trajectory
    x_range: tuple[float, float]
    repelling_track: float

    def to_json(self) -> dict:
        return {"a": self.a, "y_section": self.y_section, "amplitude": self.amplitude,
                "period": self.period, "displacement": self.displacement,
                "x_min": self.x_range[0], "x_max": self.x_range[1],
                "repelling_track": self.repelling_track}


@dataclass
class CycleSearch:
    """Result of :func:`find_cycle`: ``cycle`` is ``None`` when no cycle was found."""

    cycle: Cycle | None
    diagnostic: str
    iterations: int


def return_map(spec: SystemSpec, a: float, y: float, horizon: float | None = None):
    """Next upward crossing of ``x = a`` starting from ``(a, y)``; ``None`` if none occurs."""
    H = horizon if horizon is not None else 200.0 / spec.eps
    traj = integrate(spec, np.array([a, y]), H, sections=[(a, 1)], stop_after=1, dense=False)
    if traj.reason != "event":
        return None, traj
    return traj.events[0], traj


def _track_repelling(cfg: PlanarConfig, samples: np.ndarray) -> float:
    """Longest x-extent, relative to the repelling branch, along which the orbit stays near it."""
    curve = cfg.curve()
    bps = curve.breakpoints
    if cfg.kind == "arima":
        lo, hi = bps[0], bps[1]
    else:
        lo, hi = bps[0], bps[-1]
    span = hi - lo
    eta = 0.05 * span
    x, y = samples[:, 1], samples[:, 2]
    near = (x > lo) & (x < hi) & (np.abs(y - curve(x)) < eta)
    best = 0.0
    i = 0
    n = len(x)
    while i < n:
        if near[i]:
            j = i
            while j + 1 < n and near[j + 1]:
                j += 1
            best = max(best, float(np.ptp(x[i:j + 1])))
            i = j + 1
        else:
            i += 1
    return best / span


def find_cycle(spec_or_cfg, a: float | None = None, *, n_bracket: int = 20,
               tol: float = RETURN_TOL, y_range: tuple[float, float] | None = None) -> CycleSearch:
    """Outermost attracting cycle of the planar system at parameter ``a``.

    The return displacement ``d(y) = P(y) - y`` is sampled on a geometric grid
    of heights above the equilibrium (up to twice the relaxation amplitude);
    the outermost change from ``d >= 0`` below to ``d < 0`` above brackets the
    cycle, which is then refined by Brent's method.
    """
    cfg = _config(spec_or_cfg)
    if a is not None:
        cfg = replace(cfg, a=float(a))
    spec = build_planar(cfg)
    a = cfg.a
    if any(abs(a - b) < 1e-14 for b in cfg.curve().breakpoints):
        return CycleSearch(None, "section coincides with a switching line", 0)
    f_a = float(cfg.curve()(a))
    scale = relaxation_amplitude(cfg)
    lo, hi = y_range if y_range is not None else (1e-4 * scale, 2.0 * scale)
    ys = f_a + np.geomspace(lo, hi, n_bracket)
    calls = 0

    def disp(yy):
        nonlocal calls
        calls += 1
        ev, _ = return_map(spec, a, yy)
        if ev is None:
            return math.nan
        return float(ev.state[1]) - yy

    ds = np.array([disp(v) for v in ys])
    if np.isnan(ds[-1]) or ds[-1] >= 0:
        return CycleSearch(None, "no contraction at the outer edge of the search range", calls)
    inner = None
    for i in range(len(ys) - 2, -1, -1):
        if math.isnan(ds[i]):
            continue
        if ds[i] >= -tol:
            inner = i
            break
    if inner is None:
        return CycleSearch(None, "orbit contracts to the equilibrium", calls)
    y0, y1 = ys[inner], ys[inner + 1]
    j = inner + 1
    while math.isnan(ds[j]):
        j += 1
    y1 = ys[j]
    if ds[inner] > tol:
        try:
            y = brentq(disp, y0, y1, xtol=1e-15, rtol=8.9e-16, maxiter=MAX_ITER)
        except (RuntimeError, ValueError) as exc:
            return CycleSearch(None, f"root refinement failed: {exc}", calls)
    else:
        # neutral band below (a continuum of closed orbits): find its outer edge
        for _ in range(MAX_ITER):
            if y1 - y0 <= 1e-15 * max(1.0, abs(y1)):
                break
            ym = 0.5 * (y0 + y1)
            dm = disp(ym)
            if not math.isnan(dm) and dm >= -tol:
                y0 = ym
            else:
                y1 = ym
        y = y0
    ev, _ = return_map(spec, a, y)
    if ev is None:
        return CycleSearch(None, "no return from the refined point", calls)
    period = ev.t
    orbit = integrate(spec, np.array([a, y]), period, output_step=period / 4000)
    xs = orbit.samples[:, 1]
    amp = float(np.ptp(xs))
    cyc = Cycle(a, float(y), amp, float(period), float(ev.state[1] - y), orbit,
                (float(xs.min()), float(xs.max())), _track_repelling(cfg, orbit.samples))
    if abs(cyc.displacement) > tol:
        return CycleSearch(cyc, f"displacement {cyc.displacement:.3e} above tolerance", calls)
    return CycleSearch(cyc, "ok", calls)


@dataclass
class ExplosionScan:
    a: np.ndarray
    amplitude: np.ndarray
    period: np.ndarray
    interval: tuple[float, float] | None
    width: float | None
    relaxation: float
    notes: list = field(default_factory=list)
    repelling_track: np.ndarray | None = None

    def to_csv(self) -> str:
        lines = ["a,amplitude,period"]
        for a, m, p in zip(self.a, self.amplitude, self.period):
            lines.append(",".join(format(float(v), ".17g") for v in (a, m, p)))
        return "\n".join(lines) + "\n"


def _amp(cfg, a):
    r = find_cycle(cfg, a)
    if r.cycle is None:
        return 0.0, math.nan, 0.0
    return r.cycle.amplitude, r.cycle.period, r.cycle.repelling_track


def explosion_scan(spec_or_cfg, a_range: tuple[float, float], n: int, *,
                   refine: bool = True, levels: tuple[float, float] = (0.25, 0.75),
                   resolution: float = 1e-13) -> ExplosionScan:
    """Cycle amplitude over an ``a`` grid and the width of the amplitude jump.

    The transition interval spans the parameters where the amplitude crosses
    the two ``levels`` (fractions of the largest amplitude). Both crossings
    are located by bisection inside the first grid cell whose jump exceeds
    half the largest amplitude; when no intermediate amplitude is met the
    interval is the final bisection bracket, so ``width`` is an upper bound.
    """
    lo, hi = float(a_range[0]), float(a_range[1])
    if n < 2 and lo != hi:
        raise ValidationError("n must be at least 2")
    cfg = _config(spec_or_cfg)
    grid = np.array([lo]) if lo == hi else np.linspace(lo, hi, n)
    vals = [_amp(cfg, a) for a in grid]
    amp = np.array([v[0] for v in vals])
    per = np.array([v[1] for v in vals])
    trk = np.array([v[2] for v in vals])
    big = float(amp.max()) if amp.size else 0.0
    notes = []
    interval = width = None
    if grid.size >= 2 and big > 0:
        jumps = np.abs(np.diff(amp))
        idx = np.nonzero(jumps > 0.5 * big)[0]
        if idx.size == 0:
            notes.append("no amplitude jump above half the largest amplitude")
        else:
            i = int(idx[0])
            if refine:
                interval = _level_interval(cfg, grid[i], amp[i], grid[i + 1], amp[i + 1],
                                           levels[0] * big, levels[1] * big, resolution)
            else:
                interval = (float(grid[i]), float(grid[i + 1]))
            width = interval[1] - interval[0]
    return ExplosionScan(grid, amp, per, interval, width, big, notes, trk)


def _bisect(cfg, a_in, a_out, level, resolution):
    """Shrink ``[a_in, a_out]`` around the crossing of ``level`` (``a_in`` side below it)."""
    while abs(a_out - a_in) > resolution * max(1.0, abs(a_in)):
        am = 0.5 * (a_in + a_out)
        if am in (a_in, a_out):
            break
        if _amp(cfg, am)[0] < level:
            a_in = am
        else:
            a_out = am
    return a_in, a_out


def _level_interval(cfg, a0, m0, a1, m1, low, high, resolution):
    # orient so that a_small carries the small amplitude
    a_small, a_large = (a0, a1) if m0 < m1 else (a1, a0)
    while abs(a_large - a_small) > resolution * max(1.0, abs(a_small)):
        am = 0.5 * (a_small + a_large)
        if am in (a_small, a_large):
            break
        mm = _amp(cfg, am)[0]
        if mm < low:
            a_small = am
        elif mm > high:
            a_large = am
        else:
            # an intermediate cycle: the two level crossings separate here
            p = _bisect(cfg, a_small, am, low, resolution)
            q = _bisect(cfg, am, a_large, high, resolution) if mm < high else (am, am)
            pts = [*p, *q]
            return (min(pts), max(pts))
    return (min(a_small, a_large), max(a_small, a_large))


@dataclass
class Oscillation:
    t0: float
    t1: float
    x_min: float
    x_max: float
    label: str  # "SAO" or "LAO"

    @property
    def amplitude(self) -> float:
        return self.x_max - self.x_min


@dataclass
class TransientMmo:
    trajectory: Trajectory
    oscillations: list
    theta: float

    @property
    def labels(self) -> list:
        return [o.label for o in self.oscillations]

    def pattern(self) -> str:
        return "".join("L" if o.label == "LAO" else "s" for o in self.oscillations)


def oscillations(samples: np.ndarray, theta: float, center=None) -> list:
    """Cut the record at upward crossings of ``x = center`` and label each piece by its x-range.

    ``center`` defaults to the drifting parameter (third column), i.e. the
    y-nullcline, which every revolution crosses upward exactly once.
    """
    t, x = samples[:, 0], samples[:, 1]
    c = samples[:, 3] if center is None else np.broadcast_to(center, x.shape)
    g = x - c
    ups = np.nonzero((g[:-1] < 0) & (g[1:] >= 0))[0] + 1
    out = []
    for i0, i1 in zip(ups, ups[1:]):
        seg = x[i0:i1 + 1]
        lo, hi = float(seg.min()), float(seg.max())
        out.append(Oscillation(float(t[i0]), float(t[i1]), lo, hi,
                               "LAO" if hi - lo >= theta else "SAO"))
    return out


def transient_mmo(spec: SystemSpec, s0, horizon: float, theta: float | None = None,
                  output_step: float | None = None) -> TransientMmo:
    """Integrate a drifted planar system and label its oscillations as SAO/LAO."""
    if spec.dim != 3 or spec.meta.get("drift") is None:
        raise ValidationError("transient_mmo needs the drifted 3D planar spec")
    cfg = spec.meta["planar"]
    if theta is None:
        theta = 0.5 * outer_branch_separation(cfg)
    if output_step is None:
        output_step = 2 * math.pi / math.sqrt(spec.eps) / 200
    traj = integrate(spec, s0, horizon, output_step=output_step)
    return TransientMmo(traj, oscillations(traj.samples, theta), float(theta))
