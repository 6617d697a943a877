"""Maximal canards of the minimal system.

A maximal canard enters the central zone on the trace ``L^A`` of the
attracting slow manifold at ``p = (-delta, y, z)`` and leaves it on the trace
``L^R`` of the repelling one. For reversible canards the exit is ``R(p)`` and
the flight time is ``-2 z / (eps p3)``, which turns the connection problem
into a scalar equation in ``z``:

    tan(theta(z)) = K Q(z),   theta = -2 sqrt(p1) z / (p3 sqrt(eps)),
    K = 2 |lam_A| sqrt(eps p1).

Only roots where ``cos(theta)`` has the sign of the denominator of ``Q``
solve the underlying pair of equations; those are then confirmed by flowing.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import Kind, classify, fast_eigenvalue, max_winding, reflect, slow_manifolds
from .hybrid import Segment, Trajectory, _sample_segment, winding_number
from .model import Params, ValidationError, build_minimal_3d
from .zoneflow import exit_crossing, flows_for

REVERSIBILITY_TOL = 1e-8
RESIDENCE_TOL = 1e-10


@dataclass(frozen=True)
class RootScaffold:
    """Zeros and poles of ``Q`` and the tangent grid."""

    z1: float
    z2: float
    poles: tuple[float, ...]
    poles_leading: tuple[float, float]
    spacing: float  # z-distance over which theta grows by pi/2
    K: float
    q_infinity: float

    def r(self, k: int) -> float:
        """Zeros of the tangent (``theta = k pi``)."""
        return -k * self.spacing

    def r_tilde(self, k: int) -> float:
        """Asymptotes of the tangent (``theta = (k + 1/2) pi``)."""
        return -(2 * k + 1) / 2 * self.spacing


def _nd(params: Params, z):
    """Factors ``N1 = p1 p2 z - delta p1^2 - p2 p3`` and ``N2 = p2 z - delta p1``."""
    p1, p2, p3, d = params.p1, params.p2, params.p3, params.delta
    z = np.asarray(z, dtype=float)
    return p1 * p2 * z - d * p1 * p1 - p2 * p3, p2 * z - d * p1


def num_den(params: Params, z):
    lam = fast_eigenvalue(params)
    n1, n2 = _nd(params, z)
    num = n1 * n2
    den = params.eps * n1 * n1 - lam * lam * params.p1 * n2 * n2
    return num, den


def root_scaffold(params: Params) -> RootScaffold:
    p1, p2, p3, e, d = params.p1, params.p2, params.p3, params.eps, params.delta
    if p2 == 0 or p3 == 0:
        raise ValidationError("Q degenerates when p2 p3 = 0 (folded saddle-node)")
    lam = fast_eigenvalue(params)
    z1 = d * p1 / p2
    z2 = z1 + p3 / p1
    poles: tuple[float, ...] = ()
    if p1 > 0:
        a = math.sqrt(e) * p1
        b = abs(lam) * math.sqrt(p1)
        cands = []
        for sgn in (1.0, -1.0):
            den = a - sgn * b
            if den != 0:
                cands.append((a * z2 - sgn * b * z1) / den)
        poles = tuple(sorted(cands, reverse=True))
    lead = (z1 + p3 * math.sqrt(e) / math.sqrt(abs(p1)), z1 - p3 * math.sqrt(e) / math.sqrt(abs(p1)))
    spacing = abs(p3) * math.sqrt(e) / math.sqrt(abs(p1)) * math.pi / 2
    K = 2 * abs(lam) * math.sqrt(e * abs(p1))
    qinf = 1.0 / (e * p1 - lam * lam)
    return RootScaffold(z1, z2, poles, lead, spacing, K, qinf)


def q_rational(params: Params, z: float) -> float:
    """``Q(z) = N1 N2 / (eps N1^2 - lam_A^2 p1 N2^2)``; raises within 1e-12 of a pole."""
    sc = root_scaffold(params)
    for zp in sc.poles:
        if abs(z - zp) < 1e-12 * max(1.0, abs(zp)):
            raise ValidationError(f"z={z} is within 1e-12 of the pole {zp}")
    num, den = num_den(params, z)
    return float(num / den)


def cylinder_amplitude(params: Params, k: int) -> float:
    """x-extent of the invariant cylinder holding the k-th canard."""
    p1, p2, p3 = params.p1, params.p2, params.p3
    return params.delta * (1 + p2 * p3 / (p1 * math.sqrt(p1)) * (k + 0.5))


@dataclass(frozen=True)
class CanardSolution:
    k: int
    entry: np.ndarray
    flight_time: float
    winding: int
    residual: float  # |sin(theta - psi)|: normalized residual of the tangent equation
    system_residual: float  # max error in the separate cos / sin equations
    reversible: bool
    resident: bool
    exit_error: float = math.nan
    transit_time: float = math.nan
    max_abs_x: float = math.nan
    branch: int = -1  # tangent half-branch index j with theta in (j pi/2, (j+1) pi/2)

    @property
    def valid(self) -> bool:
        return self.reversible and self.resident and self.winding == self.k

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "entry": [float(v) for v in self.entry],
            "flight_time": self.flight_time,
            "transit_time": self.transit_time,
            "winding": self.winding,
            "residual": self.residual,
            "system_residual": self.system_residual,
            "exit_error": self.exit_error,
            "max_abs_x": self.max_abs_x,
            "reversible": self.reversible,
            "resident": self.resident,
        }


@dataclass
class CanardReport:
    """Outcome of a canard search: accepted solutions plus rejected candidates."""

    params: Params
    window: tuple[float, float]
    solutions: list[CanardSolution]
    rejected: list[CanardSolution] = field(default_factory=list)
    spurious_roots: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _theta(params: Params, z):
    return -2.0 * math.sqrt(abs(params.p1)) * np.asarray(z) / (params.p3 * math.sqrt(params.eps))


def _h(params: Params, K: float, z):
    """Pole-free form of the tangent equation: ``sin(theta) Den - K Num cos(theta)``."""
    th = _theta(params, z)
    num, den = num_den(params, z)
    return np.sin(th) * den - K * num * np.cos(th)


def _h_prime(params: Params, K: float, z: float) -> float:
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    lam = fast_eigenvalue(params)
    th = float(_theta(params, z))
    dth = -2.0 * math.sqrt(p1) / (p3 * math.sqrt(e))
    n1, n2 = _nd(params, z)
    dn1, dn2 = p1 * p2, p2
    num, den = n1 * n2, e * n1 * n1 - lam * lam * p1 * n2 * n2
    dnum = dn1 * n2 + n1 * dn2
    dden = 2 * e * n1 * dn1 - 2 * lam * lam * p1 * n2 * dn2
    c, s = math.cos(th), math.sin(th)
    return float(c * dth * den + s * dden - K * (dnum * c - num * s * dth))


def _normalized(params: Params, K: float, z: float) -> tuple[float, float, float]:
    """Return (|sin(theta - psi)|, cos-equation error, sin-equation error)."""
    th = float(_theta(params, z))
    num, den = num_den(params, z)
    num, den = float(num), float(den)
    dplus = math.hypot(den, K * num)
    cpsi, spsi = den / dplus, K * num / dplus
    res = abs(math.sin(th) * cpsi - math.cos(th) * spsi)
    return res, abs(math.cos(th) - cpsi), abs(math.sin(th) - spsi)


def _bisect_newton(f, fp, a: float, b: float) -> float:
    fa = f(a)
    lo, hi = a, b
    for _ in range(200):
        if abs(hi - lo) <= 4e-16 * max(abs(lo), abs(hi), 1e-300):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            lo, fa = mid, fm
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    d = fp(z)
    if d != 0.0:
        zn = z - f(z) / d
        if min(a, b) <= zn <= max(a, b) and abs(f(zn)) <= abs(f(z)):
            z = zn
    return z


def admissible_window(params: Params, depth: int | None = None) -> tuple[float, float]:
    """z-interval scanned for entry points, from the admissibility table.

    ``p1 > 0, p2 < 0``: ``[z*_A, 0)``; ``p1 > 0, p2 > 0``: ``(-inf, 0)`` cut at
    ``depth`` tangent half-periods; ``p1 < 0, p2 > 0``: ``(-inf, z*_A)`` cut
    likewise.
    """
    sm = slow_manifolds(params)
    sc = root_scaffold(params)
    if depth is None:
        mu = max_winding(abs(params.p1), params.p2, params.p3)
        depth = 2 * (int(min(mu, 50)) + 3) + 2
    deep = -depth * 2 * sc.spacing
    if params.p1 > 0 and params.p2 < 0:
        return (sm.z_star_A, 0.0)
    if params.p1 > 0:
        return (deep, 0.0)
    return (sm.z_star_A + deep, sm.z_star_A)


def tangent_roots(params: Params, window: tuple[float, float] | None = None,
                  per_branch: int = 64) -> list[tuple[float, int]]:
    """All roots of the tangent equation in ``window``, one tangent half-branch at a time.

    Returns ``(z, j)`` pairs where ``theta(z)`` lies in ``[j pi/2, (j+1) pi/2]``.
    """
    sc = root_scaffold(params)
    K = sc.K
    lo, hi = admissible_window(params) if window is None else window
    f = lambda z: float(_h(params, K, z))
    fp = lambda z: _h_prime(params, K, z)
    half = sc.spacing  # theta advances by pi/2 per `half` in -z
    j_hi = int(math.floor(-hi / half)) if hi < 0 else 0
    j_lo = int(math.ceil(-lo / half))
    roots: list[tuple[float, int]] = []
    for j in range(j_hi, j_lo):
        a = max(lo, -(j + 1) * half)
        b = min(hi, -j * half)
        if not b > a:
            continue
        zs = np.linspace(a, b, per_branch + 1)
        if b == 0.0:
            zs = zs[:-1]
        hv = _h(params, K, zs)
        for i in range(len(zs) - 1):
            if hv[i] == 0.0:
                roots.append((float(zs[i]), j))
                continue
            if np.sign(hv[i]) != np.sign(hv[i + 1]) and hv[i + 1] != 0.0:
                roots.append((_bisect_newton(f, fp, float(zs[i]), float(zs[i + 1])), j))
    roots.sort(key=lambda r: -r[0])
    # drop duplicates at shared branch edges
    out: list[tuple[float, int]] = []
    for z, j in roots:
        if out and abs(out[-1][0] - z) <= 1e-13 * max(1.0, abs(z)):
            continue
        out.append((z, j))
    return out


def tanh_roots(params: Params, window: tuple[float, float] | None = None,
               n: int = 4096) -> list[float]:
    """Roots of ``tanh(theta_h) = 1 / (K Q(z))`` for ``p1 < 0`` (pole-free form)."""
    if params.p1 >= 0:
        raise ValidationError("hyperbolic branch needs p1 < 0")
    sc = root_scaffold(params)
    lo, hi = admissible_window(params) if window is None else window
    zs = np.linspace(lo, hi, n + 1)[:-1]
    num, den = num_den(params, zs)
    g = np.tanh(_theta(params, zs)) * sc.K * num - den
    out = []
    for i in range(len(zs) - 1):
        if np.sign(g[i]) != np.sign(g[i + 1]):
            out.append(float(0.5 * (zs[i] + zs[i + 1])))
    return out


def validate_entry(params: Params, entry, k_expected: int | None = None,
                   dense_step: float | None = None) -> dict:
    """Flow the exact central-zone dynamics from ``entry`` to the first exit."""
    spec = build_minimal_3d(params)
    flows = flows_for(spec)
    zf = flows[1]
    entry = np.asarray(entry, dtype=float)
    cr = exit_crossing(zf, entry)
    out = {"exit": None, "exit_error": math.inf, "transit_time": math.nan,
           "max_abs_x": math.nan, "winding": -1, "exit_plane": None}
    if cr is None:
        return out
    seg = Segment(1, 0.0, entry, cr.t, cr.state)
    omega = zf.omega if zf.rotating else 1.0 / max(cr.t, 1.0)
    step = dense_step or (2 * math.pi / omega) / 256
    xs = _sample_segment(zf, seg, step)[:, 1]
    traj = Trajectory(3, [seg], np.empty((0, 5)), "event")
    out.update(exit=cr.state, exit_plane=cr.index,
               exit_error=float(np.linalg.norm(cr.state - reflect(entry))),
               transit_time=float(cr.t), max_abs_x=float(np.max(np.abs(xs))))
    if params.p1 > 0:
        out["winding"] = winding_number(traj, params).turns
    else:
        out["winding"] = 0
    return out


def _solution_from_root(params: Params, z: float, branch: int, K: float) -> CanardSolution:
    sm = slow_manifolds(params)
    y = float(sm.y_on_A(z))
    entry = np.array([-params.delta, y, z])
    res, ecos, esin = _normalized(params, K, z)
    flight = -2.0 * z / (params.eps * params.p3)
    v = validate_entry(params, entry)
    rev = (v["exit_plane"] == 1 and v["exit_error"] <= REVERSIBILITY_TOL
           and abs(v["transit_time"] - flight) <= 1e-8 * flight)
    resident = v["exit_plane"] == 1 and v["max_abs_x"] <= params.delta * (1 + RESIDENCE_TOL)
    theta = float(_theta(params, z))
    k = int(math.floor(theta / (2 * math.pi)))
    return CanardSolution(k, entry, flight, v["winding"], res, max(ecos, esin), rev, resident,
                          v["exit_error"], v["transit_time"], v["max_abs_x"], branch)


def _mirror(params: Params) -> Params:
    return Params(params.p1, -params.p2, -params.p3, params.eps, params.delta)


def maximal_canards_report(params: Params, window: tuple[float, float] | None = None) -> CanardReport:
    """Search, filter and validate maximal canards; keep the rejected candidates for inspection."""
    cls = classify(params.p1, params.p2, params.p3)
    if cls.kind in (Kind.FSN_I, Kind.FSN_II, Kind.DEGENERATE):
        raise ValidationError(f"{cls.kind.value}: use the singular module for p2 p3 = 0")
    if params.p3 < 0:
        rep = maximal_canards_report(_mirror(params), window)
        flip = lambda s: CanardSolution(
            s.k, np.array([s.entry[0], s.entry[1], -s.entry[2]]), s.flight_time, s.winding,
            s.residual, s.system_residual, s.reversible, s.resident, s.exit_error,
            s.transit_time, s.max_abs_x, s.branch)
        return CanardReport(params, (-rep.window[1], -rep.window[0]),
                            [flip(s) for s in rep.solutions], [flip(s) for s in rep.rejected],
                            [-z for z in rep.spurious_roots], rep.warnings)
    if params.p1 < 0 and params.p2 < 0:
        return CanardReport(params, (math.nan, math.nan), [],
                            warnings=["p1 < 0 and p2 < 0: L^A and L^R cannot be connected"])
    win = admissible_window(params) if window is None else window
    sc = root_scaffold(params)
    if params.p1 < 0:
        cands = tanh_roots(params, win)
        rejected = []
        for z in cands:
            sm = slow_manifolds(params)
            entry = np.array([-params.delta, float(sm.y_on_A(z)), z])
            v = validate_entry(params, entry)
            rejected.append(CanardSolution(0, entry, -2 * z / (params.eps * params.p3), 0,
                                           math.nan, math.nan,
                                           v["exit_plane"] == 1 and v["exit_error"] <= REVERSIBILITY_TOL,
                                           v["exit_plane"] == 1, v["exit_error"],
                                           v["transit_time"], v["max_abs_x"]))
        sols = [s for s in rejected if s.reversible and s.resident]
        return CanardReport(params, win, sols, [s for s in rejected if s not in sols])
    sols, rejected, spurious = [], [], []
    for z, j in tangent_roots(params, win):
        num, den = num_den(params, z)
        if math.cos(float(_theta(params, z))) * float(den) <= 0:
            spurious.append(z)  # solves the tangent equation only
            continue
        s = _solution_from_root(params, z, j, sc.K)
        (sols if s.valid else rejected).append(s)
    sols.sort(key=lambda s: s.k)
    notes = []
    times = [s.flight_time for s in sols]
    for a, b in zip(times, times[1:]):
        if abs(a - b) <= 1e-10 * max(a, b):
            notes.append(f"two canards share the flight time {a}")
    ks = [s.k for s in sols]
    if len(set(ks)) != len(ks):
        notes.append("several canards with the same winding index")
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return CanardReport(params, win, sols, rejected, spurious, notes)


def maximal_canards(params: Params) -> list[CanardSolution]:
    """Validated maximal canards ordered by winding index."""
    return maximal_canards_report(params).solutions


def canard_coordinates_leading(params: Params, k: int) -> tuple[float, float]:
    """Truncated small-eps expansions of ``(y_k, z_k)``."""
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    y = -((k + 0.5) * p2 * p3 / math.sqrt(p1) + p1) * math.pi * e ** 1.5 - p2 * p3 * e * e
    z = -(k + 0.5) * p3 / math.sqrt(p1) * math.pi * math.sqrt(e)
    return y, z


@dataclass(frozen=True)
class SelectedCanard:
    """Explicit canard for the tuned half-width ``delta_k``."""

    k: int
    params: Params  # with delta = delta_k
    entry: np.ndarray
    flight_time: float

    @property
    def delta_k(self) -> float:
        return self.params.delta

    def __call__(self, t):
        p1, p2, p3, e = self.params.p1, self.params.p2, self.params.p3, self.params.eps
        w = math.sqrt(e * p1)
        A = p2 * p3 / (p1 * p1)
        ck = (self.k + 0.5) * math.pi
        t = np.asarray(t, dtype=float)
        x = A * np.cos(w * t) - w * A * (w * t - ck)
        y = w * A * np.sin(w * t) + e * p2 * p3 / p1
        z = self.entry[2] + e * p3 * t
        return np.stack([x, y, z], axis=-1)


def selected_delta(params: Params, k: int) -> float:
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    return -(p2 * p3 / (p1 * p1)) * ((k + 0.5) * math.pi * math.sqrt(e * p1) + 1.0)


def selected_canard(params: Params, k: int) -> SelectedCanard:
    """Closed-form canard for ``delta = delta_k`` (``params.delta`` is ignored)."""
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    if not (p1 > 0 and p2 < 0 and p3 > 0):
        raise ValidationError("explicit canards need p1 > 0, p2 < 0, p3 > 0")
    if k < 0 or k > math.floor(max_winding(p1, p2, p3)):
        raise ValidationError(f"k={k} outside 0..floor(mu)")
    dk = selected_delta(params, k)
    w = math.sqrt(e * p1)
    entry = np.array([-dk, e * p2 * p3 / p1, -(k + 0.5) * math.pi * (p3 / p1) * w])
    return SelectedCanard(k, params.with_delta(dk), entry, (2 * k + 1) * math.pi / w)


def weak_canard_gap(params: Params) -> float:
    """Distance within ``x = delta`` from the end of the rotation axis to ``L^R``."""
    p1, p2, p3, e, d = params.p1, params.p2, params.p3, params.eps, params.delta
    sm = slow_manifolds(params)
    za = -p1 * d / p2
    ya = e * p2 * p3 / p1
    slope, icpt = sm.line_R
    return abs(ya + slope * za - icpt) / math.hypot(1.0, slope)
