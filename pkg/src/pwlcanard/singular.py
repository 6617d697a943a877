"""Singular limit (eps = 0) of the minimal system in the (z, x) plane.

In the outer zones the reduced flow is ``x' = sgn(x)(p1 x + p2 z)``,
``z' = p3``; the central zone carries only the constraint ``p1 x + p2 z = 0``.
An *opened* portrait keeps a strip ``|x| <= dt`` (``dt`` = delta tilde) between
the two outer zones so that the crossing directions become visible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .geometry import Kind, classify
from .model import Params, ValidationError

_ZONES = {"left": -1, "central": 0, "right": 1, -1: -1, 0: 0, 1: 1}
CONSTRAINT_TOL = 1e-12


def _zone_sign(zone) -> int:
    try:
        return _ZONES[zone]
    except KeyError:
        raise ValidationError(f"unknown zone {zone!r}; use left/central/right or -1/0/1") from None


def _outer_generator(params: Params, sigma: int) -> np.ndarray:
    """Augmented generator on (x, z, 1) for the outer zone with sign ``sigma``."""
    A = np.zeros((3, 3))
    A[0, 0], A[0, 1] = sigma * params.p1, sigma * params.p2
    A[1, 2] = params.p3
    return A


def reduced_flow(params: Params, zone, point, t: float) -> np.ndarray:
    """Exact reduced flow of ``(x, z)`` over time ``t`` within one zone.

    The central zone only admits points on ``p1 x + p2 z = 0``; there ``z``
    drifts at rate ``p3`` and ``x`` follows the constraint.
    """
    sigma = _zone_sign(zone)
    x, z = (float(v) for v in point)
    if sigma == 0:
        if params.p1 == 0:
            raise ValidationError("central reduced flow needs p1 != 0")
        scale = max(1.0, abs(params.p1 * x), abs(params.p2 * z))
        if abs(params.p1 * x + params.p2 * z) > CONSTRAINT_TOL * scale:
            raise ValidationError("central reduced dynamics lives on p1 x + p2 z = 0 only")
        zt = z + params.p3 * t
        return np.array([-params.p2 * zt / params.p1, zt])
    if x * sigma < 0:
        raise ValidationError(f"point x={x} is not in the {'right' if sigma > 0 else 'left'} zone")
    if t == 0:
        return np.array([x, z])
    p1, p2, p3 = params.p1, params.p2, params.p3
    zt = z + p3 * t
    if p1 == 0:
        return np.array([x + sigma * p2 * (z * t + 0.5 * p3 * t * t), zt])
    # w = p1 x + p2 z obeys w' = sigma p1 w + p2 p3
    a = sigma * p1
    w0 = p1 * x + p2 * z
    w_fix = -p2 * p3 / a
    wt = w0 + (w0 - w_fix) * math.expm1(a * t)
    return np.array([(wt - p2 * zt) / p1, zt])


def reduced_field(params: Params, x, z):
    """``(x', z')`` of the two-zonal reduced flow; zero-width central line gets ``sgn(0) = 0``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return np.sign(x) * (params.p1 * x + params.p2 * z), np.full_like(x + z, params.p3)


def smooth_reduced_flow(params: Params, point, t: float, rtol: float = 1e-10,
                        atol: float = 1e-12) -> np.ndarray:
    """Reduced flow of the smooth counterpart: ``x' = sgn(x)(p1 x + p2 z)``, ``z' = 2 p3 |x|``."""
    p1, p2, p3 = params.p1, params.p2, params.p3

    def rhs(_t, s):
        x, z = s
        return [math.copysign(1.0, x) * (p1 * x + p2 * z) if x != 0 else 0.0, 2 * p3 * abs(x)]

    if t == 0:
        return np.asarray(point, dtype=float).copy()
    sol = solve_ivp(rhs, (0.0, t), np.asarray(point, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol)
    return sol.y[:, -1]


def invariant_half_lines(params: Params) -> dict:
    """Constants ``c`` with ``p1 x + p2 z = c`` invariant in each outer zone."""
    if params.p1 == 0:
        raise ValidationError("half-lines need p1 != 0")
    c = params.p2 * params.p3 / params.p1
    return {"right": -c, "left": c}


@dataclass(frozen=True)
class CanardDirections:
    weak: tuple[float, float]  # (a, b): line a x + b z = 0
    strong: tuple[float, float] | None  # direction (dz, dx) through the origin
    weak_is_canard: bool
    strong_is_canard: bool
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"weak": list(self.weak), "strong": None if self.strong is None else list(self.strong),
                "weak_is_canard": self.weak_is_canard, "strong_is_canard": self.strong_is_canard,
                "notes": list(self.notes)}


def singular_canard_directions(params: Params) -> CanardDirections:
    """Weak line ``p1 x + p2 z = 0`` and strong direction ``(p3 / (2 sqrt(p1)), 1)`` in (z, x)."""
    p1, p2, p3 = params.p1, params.p2, params.p3
    if p1 == 0:
        raise ValidationError("canard directions need p1 != 0")
    notes = []
    weak_ok = strong_ok = True
    if p2 == 0:
        weak_ok = False
        notes.append("FSN-I: the weak line is x = 0 and joins no attracting to repelling side")
    if p3 == 0:
        weak_ok = strong_ok = False
        notes.append("FSN-II: the weak line is a line of equilibria; no crossing direction")
    if p1 < 0:
        notes.append("p1 < 0: slope computed with |p1|; the strong direction is a faux crossing")
    strong = (0.5 * p3 / math.sqrt(abs(p1)), 1.0)
    return CanardDirections((p1, p2), strong, weak_ok, strong_ok, tuple(notes))


def tangency_classification(params: Params) -> str:
    """Visibility of the two fold tangencies: sign of ``x''`` at ``x' = 0`` on each side."""
    cls = classify(params.p1, params.p2, params.p3)
    if cls.kind in (Kind.FSN_I, Kind.FSN_II, Kind.DEGENERATE):
        return "degenerate"
    q = params.p2 * params.p3
    # right zone: x'' = p2 p3 at a tangency, visible when it bends into x > 0;
    # left zone: x'' = -p2 p3, visible when it bends into x < 0.
    right_visible = q > 0
    left_visible = -q < 0
    if right_visible and left_visible:
        return "visible-visible"
    if not right_visible and not left_visible:
        return "invisible-invisible"
    return "visible-invisible"


@dataclass
class SingularPortrait:
    """Sampled singular phase portrait in the (z, x) plane.

    Polylines are ``(n, 2)`` arrays of ``(z, x)`` points. ``weak`` and
    ``strong`` map ``"left"``, ``"central"``, ``"right"`` to their pieces.
    """

    params: Params
    window: tuple[float, float, float, float]  # zmin, zmax, xmin, xmax
    opened: bool
    delta_t: float
    grid: np.ndarray  # columns: zone, z, x, z', x'
    half_lines: dict
    tangency_points: list
    tangency: str
    weak: dict
    strong: dict
    weak_connected: bool
    strong_connected: bool
    funnel: np.ndarray | None = None
    equilibria: np.ndarray | None = None
    notes: list = field(default_factory=list)

    def in_funnel(self, x: float, z: float) -> bool:
        return in_funnel(self.params, x, z, self.delta_t)

    def to_json(self) -> dict:
        poly = lambda d: {k: np.asarray(v).tolist() for k, v in d.items() if v is not None}
        return {
            "class": classify(self.params.p1, self.params.p2, self.params.p3).kind.value,
            "window": list(self.window),
            "opened": self.opened,
            "delta_tilde": self.delta_t,
            "tangency": self.tangency,
            "tangency_points": [list(p) for p in self.tangency_points],
            "half_lines": poly(self.half_lines),
            "weak": poly(self.weak),
            "strong": poly(self.strong),
            "weak_connected": self.weak_connected,
            "strong_connected": self.strong_connected,
            "funnel": None if self.funnel is None else self.funnel.tolist(),
            "equilibria": None if self.equilibria is None else self.equilibria.tolist(),
            "notes": list(self.notes),
        }

    def grid_csv(self) -> str:
        lines = ["zone,z,x,zdot,xdot"]
        for row in self.grid:
            lines.append(",".join([str(int(row[0]))] + [format(float(v), ".17g") for v in row[1:]]))
        return "\n".join(lines) + "\n"


def _clip_line(a: float, b: float, c: float, window, side: int, edge: float):
    """Points of ``a x + b z = c`` inside the window with ``side*(x - side*edge) >= 0``."""
    zmin, zmax, xmin, xmax = window
    if side > 0:
        lo, hi = max(edge, xmin), xmax
    else:
        lo, hi = xmin, min(-edge, xmax)
    if b == 0:
        if a == 0:
            return None
        x0 = c / a
        if not lo <= x0 <= hi:
            return None
        return np.array([[zmin, x0], [zmax, x0]])
    xs = np.linspace(lo, hi, 201) if hi > lo else np.array([])
    if xs.size == 0:
        return None
    zs = (c - a * xs) / b
    keep = (zs >= zmin) & (zs <= zmax)
    if not keep.any():
        return None
    return np.column_stack([zs[keep], xs[keep]])


def _orbit(params: Params, sigma: int, start, direction: int, window, edge: float,
           max_steps: int = 4000) -> np.ndarray:
    """Reduced orbit in outer zone ``sigma`` from ``start = (z, x)`` until it leaves the window or zone."""
    zmin, zmax, xmin, xmax = window
    diag = math.hypot(zmax - zmin, xmax - xmin)
    A = _outer_generator(params, sigma)
    S = np.array([start[1], start[0], 1.0])
    pts = [(start[0], start[1])]
    for _ in range(max_steps):
        xd = sigma * (params.p1 * S[0] + params.p2 * S[1])
        speed = math.hypot(xd, params.p3)
        if speed == 0:
            break
        dt = direction * (diag / 400) / speed
        Sn = expm(A * dt) @ S
        x, z = Sn[0], Sn[1]
        if sigma * x < edge:
            # stop on the boundary of the zone
            f = (sigma * S[0] - edge) / (sigma * (S[0] - x)) if S[0] != x else 0.0
            pts.append((S[1] + f * (z - S[1]), sigma * edge))
            break
        if not (zmin <= z <= zmax and xmin <= x <= xmax):
            pts.append((z, x))
            break
        pts.append((z, x))
        S = Sn
    return np.array(pts)


def _both_ways(params, sigma, start, window, edge):
    back = _orbit(params, sigma, start, -1, window, edge)
    fwd = _orbit(params, sigma, start, +1, window, edge)
    return np.vstack([back[::-1], fwd[1:]])


def _touches(piece, point, tol) -> bool:
    if piece is None or len(piece) == 0:
        return False
    d = np.min(np.hypot(piece[:, 0] - point[0], piece[:, 1] - point[1]))
    return bool(d <= tol)


def in_funnel(params: Params, x: float, z: float, delta_t: float, horizon: float = 1e3) -> bool:
    """Left-zone point whose reduced orbit reaches ``x = -dt`` between the fold tangency and the strong canard."""
    if x >= -delta_t or params.p1 <= 0 or params.p2 * params.p3 >= 0:
        return False
    from .model import Zone
    from .zoneflow import exit_crossing, make_zone_flow
    A = _outer_generator(params, -1)
    zone = Zone(0, -math.inf, -delta_t, A[:2, :2], A[:2, 2], "attracting")
    zf = make_zone_flow(zone, horizon)
    cr = exit_crossing(zf, np.array([x, z]), horizon)
    if cr is None:
        return False
    z_hit = cr.state[1]
    z_tan = params.p1 * delta_t / params.p2
    z_str = -0.5 * params.p3 / math.sqrt(params.p1) * delta_t
    lo, hi = sorted((z_tan, z_str))
    return bool(lo <= z_hit <= hi)


def singular_portrait(params: Params, window=(-1.0, 1.0, -1.0, 1.0), opened: bool = True,
                      delta_t: float | None = None, n: int = 21) -> SingularPortrait:
    """Sample the reduced field and assemble the singular canards.

    ``window`` is ``(zmin, zmax, xmin, xmax)``. ``delta_t`` defaults to a tenth
    of the window width in x. Weak canard outer pieces follow the tangency
    orbits when tangencies are visible and the invariant half-lines otherwise;
    the strong canard does the opposite.
    """
    zmin, zmax, xmin, xmax = (float(v) for v in window)
    if not (zmax > zmin and xmax > xmin):
        raise ValidationError("window must be nonempty")
    p1, p2, p3 = params.p1, params.p2, params.p3
    if p1 == 0:
        raise ValidationError("portrait needs p1 != 0")
    if delta_t is None:
        delta_t = 0.1 * (xmax - xmin)
    edge = float(delta_t) if opened else 0.0
    if opened and edge <= 0:
        raise ValidationError("delta_tilde must be positive for an opened portrait")
    win = (zmin, zmax, xmin, xmax)
    cls = classify(p1, p2, p3)
    notes = []

    zs, xs = np.meshgrid(np.linspace(zmin, zmax, n), np.linspace(xmin, xmax, n))
    zs, xs = zs.ravel(), xs.ravel()
    outer = np.abs(xs) > edge
    xd, zd = reduced_field(params, xs[outer], zs[outer])
    grid = np.column_stack([np.sign(xs[outer]), zs[outer], xs[outer], zd, xd])

    c = p2 * p3 / p1
    half = {"right": _clip_line(p1, p2, -c, win, 1, edge), "left": _clip_line(p1, p2, c, win, -1, edge)}

    if p2 != 0:
        tan_r = (-p1 * edge / p2, edge)
        tan_l = (p1 * edge / p2, -edge)
        tangency_points = [tan_l, tan_r] if opened else [(0.0, 0.0)]
    else:
        tan_r = tan_l = None
        tangency_points = []
        notes.append("p2 = 0: the tangency points have gone to infinity")
    tangency = tangency_classification(params)

    # central pieces
    weak_c = _clip_line(p1, p2, 0.0, (zmin, zmax, -edge, edge), 1, -edge) if opened else None
    if opened and p2 == 0:
        weak_c = np.array([[max(zmin, -1e300), 0.0], [zmax, 0.0]])
    dirs = singular_canard_directions(params)
    slope = dirs.strong[0]
    strong_c = np.array([[-slope * edge, -edge], [slope * edge, edge]]) if opened else np.array([[0.0, 0.0]])

    weak = {"central": weak_c}
    strong = {"central": strong_c}
    saddle_like = p2 * p3 > 0
    if p2 * p3 == 0:
        weak["left"] = weak["right"] = None
        ends = ((-slope * edge, -edge), (slope * edge, edge))
        strong["left"] = _orbit(params, -1, ends[0], -1, win, edge)
        strong["right"] = _orbit(params, 1, ends[1], +1, win, edge)
        if p3 == 0:
            notes.append("FSN-II: z is constant along orbits; the weak line is a line of equilibria")
    elif saddle_like:
        weak["left"] = _both_ways(params, -1, tan_l, win, edge)
        weak["right"] = _both_ways(params, 1, tan_r, win, edge)
        strong["left"], strong["right"] = half["left"], half["right"]
    else:
        weak["left"], weak["right"] = half["left"], half["right"]
        strong["left"] = _orbit(params, -1, (-slope * edge, -edge), -1, win, edge)
        strong["right"] = _orbit(params, 1, (slope * edge, edge), +1, win, edge)

    tol = 1e-9 * max(1.0, math.hypot(zmax - zmin, xmax - xmin))

    def connected(pieces):
        cen = pieces.get("central")
        if cen is None or len(cen) < 2 or pieces.get("left") is None or pieces.get("right") is None:
            return False
        ends = sorted([tuple(cen[0]), tuple(cen[-1])], key=lambda p: p[1])
        return _touches(pieces["left"], ends[0], tol) and _touches(pieces["right"], ends[1], tol)

    weak_conn = connected(weak) if opened else False
    strong_conn = connected(strong) if opened else False

    funnel = None
    if cls.kind in (Kind.FOLDED_NODE, Kind.FOLDED_FOCUS) and opened and strong["left"] is not None:
        z_t = p1 * edge / p2
        funnel = np.vstack([strong["left"], [[z_t, -edge]]])

    equilibria = None
    if p3 == 0 and p2 != 0:
        equilibria = _clip_line(p1, p2, 0.0, (zmin, zmax, xmin, xmax), 1, xmin - 1.0)
    return SingularPortrait(params, win, opened, float(edge), grid, half, tangency_points, tangency,
                            weak, strong, weak_conn, strong_conn, funnel, equilibria, notes)
