"""Exact affine flows inside a zone, first crossings of planes ``x = const``, and the central first integral."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .model import Params, SystemSpec, Zone

GRAZE_TOL = 1e-10


@dataclass(frozen=True)
class ZoneFlow:
    """A zone together with spectral data used to pick sampling steps."""

    zone: Zone
    eigvals: np.ndarray
    omega: float
    rate: float
    horizon: float

    @property
    def rotating(self) -> bool:
        return self.omega > 0.0

    @property
    def dim(self) -> int:
        return self.zone.M.shape[0]

    def generator(self) -> np.ndarray:
        """Augmented ``(dim+1) x (dim+1)`` homogeneous generator."""
        n = self.dim
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = self.zone.M
        A[:n, n] = self.zone.c
        return A

    def propagator(self, t: float) -> np.ndarray:
        return expm(self.generator() * t)

    def __call__(self, s, t: float) -> np.ndarray:
        return affine_flow(self, s, t)


def make_zone_flow(zone: Zone, horizon: float) -> ZoneFlow:
    ev = np.linalg.eigvals(zone.M)
    # Real eigenvalues come back with |Im| at roundoff level; treat them as real.
    scale = max(1.0, float(np.max(np.abs(ev))))
    im = np.abs(ev.imag)
    omega = float(np.max(im)) if np.max(im) > 1e-13 * scale else 0.0
    return ZoneFlow(zone, ev, omega, float(np.max(np.abs(ev))), float(horizon))


def flows_for(spec: SystemSpec) -> list[ZoneFlow]:
    """One :class:`ZoneFlow` per zone with the documented default horizons.

    The central zone of a minimal/return system uses ``10 t*``; every other
    zone uses ``1e3 / eps``.
    """
    default = 1e3 / spec.eps
    params = spec.meta.get("params")
    out = []
    for z in spec.zones:
        h = default
        if z.role == "central" and params is not None and params.p2 * params.p3 != 0 and params.p1 != 0:
            h = 10.0 * 2.0 * abs(params.p1) * params.delta / (params.eps * abs(params.p2 * params.p3))
        out.append(make_zone_flow(z, h))
    return out


def affine_flow(zf: ZoneFlow, s, t: float) -> np.ndarray:
    """Exact solution of ``s' = M s + c`` after time ``t`` (any sign)."""
    s = np.asarray(s, dtype=float)
    if t == 0.0:
        return s.copy()
    P = zf.propagator(t)
    n = zf.dim
    return P[:n, :n] @ s + P[:n, n]


def central_flow_closed_form(params: Params, s, t: float) -> np.ndarray:
    """Trigonometric (``p1 > 0``) or hyperbolic (``p1 < 0``) central-zone solution.

    Uses ``u = p1 x + p2 z`` and ``v = p1 y - eps p2 p3`` which obey
    ``u' = -v``, ``v' = eps p1 u``.
    """
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    x, y, z = (float(v) for v in s)
    u0 = p1 * x + p2 * z
    v0 = p1 * y - e * p2 * p3
    if p1 > 0:
        w = math.sqrt(e * p1)
        c, sn = math.cos(w * t), math.sin(w * t)
        u = u0 * c - (v0 / w) * sn
        v = v0 * c + w * u0 * sn
    elif p1 < 0:
        w = math.sqrt(-e * p1)
        c, sn = math.cosh(w * t), math.sinh(w * t)
        u = u0 * c - (v0 / w) * sn
        v = v0 * c - w * u0 * sn
    else:
        raise ValueError("closed form needs p1 != 0")
    zt = z + e * p3 * t
    return np.array([(u - p2 * zt) / p1, (v + e * p2 * p3) / p1, zt])


def first_integral_H(params: Params, s) -> float:
    """``eps p1 (p1 x + p2 z)^2 + (p1 y - eps p2 p3)^2``; constant along central orbits."""
    x, y, z = (float(v) for v in s[:3])
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    return e * p1 * (p1 * x + p2 * z) ** 2 + (p1 * y - e * p2 * p3) ** 2


@dataclass(frozen=True)
class Crossing:
    t: float
    state: np.ndarray
    plane: float
    index: int
    grazing: bool = False


def _xdot(zone: Zone, s) -> float:
    return float(zone.M[0] @ s + zone.c[0])


def _xddot(zone: Zone, s) -> float:
    return float(zone.M[0] @ zone.field(s))


def first_crossing(zf: ZoneFlow, s, planes: Sequence[float], directions: Sequence[int],
                   horizon: float | None = None, inside: Sequence[int] | None = None
                   ) -> Crossing | None:
    """Earliest ``t > 0`` at which ``x(t)`` crosses one of ``planes``.

    ``directions[j]`` is ``+1`` (upward only), ``-1`` (downward only) or ``0``.
    ``inside[j]`` gives the sign of ``x - plane`` on the zone side for planes
    that bound the zone (``0`` for free sections); it fixes the reference sign
    when ``s`` starts on the plane and enables the tangency rule.

    Each sampling step is cut at the zeros of the higher time derivatives of
    ``x`` so that ``x`` is monotone on every piece; short excursions across a
    plane between two samples are therefore not missed.
    """
    s = np.asarray(s, dtype=float)
    zone = zf.zone
    n = zf.dim
    H = zf.horizon if horizon is None else float(horizon)
    if not H > 0 or not planes:
        return None
    planes = np.asarray(planes, dtype=float)
    dirs = np.asarray(directions, dtype=int)
    ins = np.zeros(len(planes), dtype=int) if inside is None else np.asarray(inside, dtype=int)
    scale = max(1.0, float(np.max(np.abs(planes))))
    on_tol = 1e-13 * scale

    v0 = _xdot(zone, s)
    a0 = _xddot(zone, s)
    g = s[0] - planes
    ref = np.sign(g)
    for j in range(len(planes)):
        if abs(g[j]) <= on_tol:
            if ins[j] != 0:
                motion = v0 if abs(v0) > GRAZE_TOL else a0
                if motion * ins[j] < 0:
                    # starts on its own boundary heading out: not inside the zone
                    return None
                ref[j] = ins[j]
            else:
                motion = v0 if v0 != 0 else a0
                ref[j] = -np.sign(motion) if motion != 0 else 0

    A = zf.generator()
    S0 = np.r_[s, 1.0]
    depth = 2 if zf.rotating else 3
    rows = [np.eye(n + 1)[0]]
    for _ in range(depth):
        rows.append(rows[-1] @ A)

    def aug_at(t):
        return expm(A * t) @ S0

    def state_at(t):
        return aug_at(t)[:n]

    if zf.rotating:
        h_fix = min(math.pi / (8.0 * zf.omega), H / 1024.0)
        step_mat = expm(A * h_fix)
    else:
        h0 = min(H / 1024.0, 0.05 / max(zf.rate, 1.0 / H))

    t_prev, S_prev = 0.0, S0
    while t_prev < H:
        if zf.rotating:
            t_cur = min(t_prev + h_fix, H)
            S_cur = step_mat @ S_prev if t_cur - t_prev == h_fix else aug_at(t_cur)
        else:
            t_cur = min(t_prev + max(h0, 0.1 * t_prev), H)
            S_cur = aug_at(t_cur)
        pieces = _monotone_pieces(aug_at, rows, t_prev, S_prev, t_cur, S_cur)
        for (ta, Sa), (tb, Sb) in zip(pieces, pieces[1:]):
            g_b = Sb[0] - planes
            best = None
            flips = []
            for j in range(len(planes)):
                sc = np.sign(g_b[j])
                if ref[j] == 0:
                    ref[j] = sc
                    continue
                if sc == ref[j] or sc == 0:
                    continue
                root = _refine(state_at, zone, planes[j], ref[j], ta, tb)
                if root is None:
                    ref[j] = sc
                    continue
                tr, sr = root
                up = ref[j] < 0
                grazing = abs(_xdot(zone, sr)) < GRAZE_TOL
                if grazing and ins[j] != 0 and _xddot(zone, sr) * ins[j] > 0:
                    flips.append((j, sc))
                    continue  # curving back into the zone: a touch, not an exit
                if dirs[j] != 0 and (dirs[j] > 0) != up:
                    flips.append((j, sc))
                    continue
                if best is None or tr < best.t:
                    best = Crossing(tr, sr, float(planes[j]), j, grazing)
            if best is not None:
                return best
            for j, sc in flips:
                ref[j] = sc
        t_prev, S_prev = t_cur, S_cur
    return None


def _monotone_pieces(aug_at, rows, ta, Sa, tb, Sb):
    """Split ``[ta, tb]`` at zeros of ``d^k x / dt^k`` from the top order down to 1."""
    pts = [(ta, Sa), (tb, Sb)]
    for row in rows[:0:-1]:
        out = [pts[0]]
        for (t0, S0), (t1, S1) in zip(pts, pts[1:]):
            v0, v1 = float(row @ S0), float(row @ S1)
            if v0 * v1 < 0:
                fn = lambda t: float(row @ aug_at(t))
                if fn(t0) * fn(t1) < 0:
                    tm = brentq(fn, t0, t1, xtol=1e-15 * max(1.0, t1), rtol=8.9e-16)
                    if t0 < tm < t1:
                        out.append((tm, aug_at(tm)))
            out.append((t1, S1))
        pts = out
    return pts


def _refine(state_at, zone: Zone, plane: float, ref_sign: float, ta: float, tb: float):
    """Locate the sign change of ``x(t) - plane`` on ``[ta, tb]``, then one Newton step."""
    def gfun(t):
        return float(state_at(t)[0] - plane)

    ga = gfun(ta)
    if ga == 0.0 or np.sign(ga) != ref_sign:
        lo, hi = ta, tb
        for _ in range(200):
            if hi - lo <= 1e-14 * max(1.0, hi):
                break
            mid = 0.5 * (lo + hi)
            if np.sign(gfun(mid)) == ref_sign:
                lo = mid
            else:
                hi = mid
        t = hi
    else:
        gb = gfun(tb)
        if gb == 0.0:
            t = tb
        else:
            t = brentq(gfun, ta, tb, xtol=1e-15 * max(1.0, tb), rtol=8.9e-16)
            # keep the point on the far side so the next search starts outside
            if np.sign(gfun(t)) == ref_sign:
                t = min(tb, t + 1e-15 * max(1.0, t))
    if t <= 1e-12 * max(1.0, tb):
        return None
    st = state_at(t)
    xd = _xdot(zone, st)
    if xd != 0.0:
        tn = t - (st[0] - plane) / xd
        if ta <= tn <= tb:
            sn = state_at(tn)
            if abs(sn[0] - plane) <= abs(st[0] - plane):
                t, st = tn, sn
    st = st.copy()
    st[0] = plane
    return t, st


def crossing_time(zf: ZoneFlow, s, plane_x: float, horizon: float | None = None) -> Crossing | None:
    """Smallest ``t > 0`` with ``x(t) = plane_x`` under the zone's own flow, or ``None``."""
    zone = zf.zone
    ins = 0
    if plane_x == zone.hi:
        ins = -1
    elif plane_x == zone.lo:
        ins = 1
    return first_crossing(zf, s, [plane_x], [0], horizon, [ins])


def exit_crossing(zf: ZoneFlow, s, horizon: float | None = None,
                  sections: Sequence[tuple[float, int]] = ()) -> Crossing | None:
    """First exit through a zone boundary or first hit of an event section.

    Returned ``index`` is ``0`` for the lower boundary, ``1`` for the upper
    one and ``2 + j`` for section ``j``.
    """
    zone = zf.zone
    planes, dirs, ins, tags = [], [], [], []
    if math.isfinite(zone.lo):
        planes.append(zone.lo); dirs.append(-1); ins.append(1); tags.append(0)
    if math.isfinite(zone.hi):
        planes.append(zone.hi); dirs.append(1); ins.append(-1); tags.append(1)
    for j, (xs, d) in enumerate(sections):
        if zone.lo < xs < zone.hi:
            planes.append(xs); dirs.append(d); ins.append(0); tags.append(2 + j)
    cr = first_crossing(zf, s, planes, dirs, horizon, ins)
    if cr is None:
        return None
    return Crossing(cr.t, cr.state, cr.plane, tags[cr.index], cr.grazing)
