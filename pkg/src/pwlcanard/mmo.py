"""Mixed-mode oscillations of the minimal system closed by a global return.

The return adds a fourth zone beyond the fold ``x0`` and couples the slow
drift to the state: ``z' = eps (p3 + a1 (x - kappa) + a2 (y - zeta) + a3 (z - xi))``.
Periodic MMOs are fixed points of the return map to the entry plane of the
central zone ``{x = -delta, x increasing}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .hybrid import Trajectory, integrate
from .model import NumericalError, Params, ReturnParams, SystemSpec, ValidationError
from .zoneflow import flows_for

# Documented demo: folded-node local part of the main example plus a return
# through the y-coupling only (alpha1 = alpha3 = 0).
DEMO_PARAMS = Params(1.0, -1.0, 0.2, 0.01)
DEMO_RETURN = ReturnParams(alpha1=0.0, alpha2=-1.0, alpha3=0.0, kappa=0.0, zeta=-0.05, xi=0.0, x0=1.0)
DEMO_SEED = (-0.5, 0.2, -0.2)

# Coupling with p2 * alpha2 < 0 and a funnel entry giving four equal SAOs
# before the first large excursion (no periodic return for this sign).
CONSTANT_SAO_RETURN = ReturnParams(alpha1=0.0, alpha2=0.1, alpha3=0.0, x0=1.0)
CONSTANT_SAO_ENTRY = (-math.pi * 0.1, -0.0018, -0.25)

# Folded saddle: a start 0.05 off the rotation axis keeps rotating around it
# (seven turns) until the axis leaves the central zone.
FOLDED_SADDLE_PARAMS = Params(1.0, 1.0, 0.1, 0.01)
FOLDED_SADDLE_START = (0.25, 0.001, -0.2)


def central_generator(params: Params, ret: ReturnParams) -> np.ndarray:
    e = params.eps
    return np.array([[0.0, -1.0, 0.0],
                     [e * params.p1, 0.0, e * params.p2],
                     [e * ret.alpha1, e * ret.alpha2, e * ret.alpha3]])


@dataclass(frozen=True)
class CentralSpectrum:
    eigenvalues: np.ndarray
    constant_sao: bool
    max_abs_real: float


def central_spectrum(params: Params, ret: ReturnParams, tol: float = 1e-12) -> CentralSpectrum:
    """Eigenvalues of the central generator; SAOs keep a constant amplitude iff all
    real parts vanish (within ``tol``) and a rotating pair exists."""
    ev = np.linalg.eigvals(central_generator(params, ret))
    ev = ev[np.argsort(ev.imag)]
    re = float(np.max(np.abs(ev.real)))
    rotating = bool(np.max(np.abs(ev.imag)) > 0)
    return CentralSpectrum(ev, bool(re <= tol and rotating), re)


def entry_section(spec: SystemSpec) -> tuple[float, int]:
    """``(x, direction)`` of the plane through which orbits enter the central zone."""
    central = [z for z in spec.zones if z.role == "central"]
    if not central:
        raise ValidationError("spec has no central zone")
    return (central[0].lo, 1)


def poincare_map(spec: SystemSpec, s, section: tuple[float, int] | None = None,
                 horizon: float | None = None, crossings: int = 1):
    """State at the ``crossings``-th next hit of ``section``; ``None`` when none occurs."""
    sec = entry_section(spec) if section is None else section
    H = horizon if horizon is not None else 2e4 / spec.eps
    tr = integrate(spec, np.asarray(s, dtype=float), H, sections=[sec],
                   stop_after=crossings, dense=False)
    if tr.reason != "event":
        return None
    return tr.events[-1]


@dataclass
class MmoSignature:
    """Pairs ``(L, s)``: ``L`` large excursions followed by ``s`` small ones."""

    pairs: list
    margin: float
    x0: float
    delta: float

    def __str__(self) -> str:
        return " ".join(f"{L}^{s}" for L, s in self.pairs)

    def to_json(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "text": str(self),
                "margin": self.margin, "x0": self.x0, "delta": self.delta}


def x_extrema(spec: SystemSpec, traj: Trajectory, zones=None) -> list:
    """Exact local extrema of ``x`` inside the chosen zones as ``(t, x, +1 max / -1 min)``."""
    flows = flows_for(spec)
    out = []
    for seg in traj.segments:
        zf = flows[seg.zone]
        if zones is not None and seg.zone not in zones:
            continue
        dt = seg.t1 - seg.t0
        if dt <= 0:
            continue
        A = zf.generator()
        row = A[0]
        per = 2 * math.pi / zf.omega if zf.rotating else dt
        n = max(2, int(math.ceil(dt / (per / 32))) + 1)
        ts = np.linspace(0.0, dt, n)
        P = _expm(A * (ts[1] - ts[0]))
        S = np.r_[seg.s0, 1.0]
        vals = [float(row @ S)]
        states = [S]
        for _ in range(n - 1):
            S = P @ S
            states.append(S)
            vals.append(float(row @ S))
        S0 = np.r_[seg.s0, 1.0]
        for i in range(n - 1):
            v0, v1 = vals[i], vals[i + 1]
            if v0 > 0 >= v1 or v0 < 0 <= v1:
                fn = lambda tt: float(row @ (_expm(A * tt) @ S0))
                if fn(ts[i]) * fn(ts[i + 1]) > 0:
                    continue
                tr = brentq(fn, ts[i], ts[i + 1], xtol=1e-14 * max(1.0, ts[i + 1]), rtol=8.9e-16)
                if tr <= 0 or tr >= dt:
                    continue
                x = float((_expm(A * tr) @ S0)[0])
                out.append((seg.t0 + tr, x, 1 if v0 > 0 else -1))
    return out


def _expm(M):
    from scipy.linalg import expm
    return expm(M)


def signature(traj: Trajectory, spec: SystemSpec, margin: float = 0.05,
              cyclic: bool = False) -> MmoSignature:
    """Count LAOs (upward crossings of the fold ``x0``) and SAOs (maxima of ``x`` in
    ``|x| <= delta (1 + margin)``) and group them in time order.

    With ``cyclic`` the trajectory is one period: leading SAOs are attached to
    the trailing LAO group.
    """
    bounds = spec.boundaries
    delta = bounds[1] if len(bounds) >= 2 else bounds[0]
    x0 = bounds[2] if len(bounds) >= 3 else math.inf
    events = []
    for seg in traj.segments[1:]:
        if spec.zones[seg.zone].lo == x0 and seg.s0[0] == x0:
            events.append((seg.t0, "L"))
    for t, x, kind in x_extrema(spec, traj):
        if kind > 0 and abs(x) <= delta * (1 + margin):
            events.append((t, "s"))
    events.sort()
    pairs: list = []
    for _, tag in events:
        if tag == "L":
            if pairs and pairs[-1][1] == 0:
                pairs[-1] = (pairs[-1][0] + 1, 0)
            else:
                pairs.append((1, 0))
        else:
            if not pairs:
                pairs.append((0, 0))
            pairs[-1] = (pairs[-1][0], pairs[-1][1] + 1)
    if cyclic and len(pairs) > 1 and pairs[0][0] == 0:
        head = pairs.pop(0)
        pairs[-1] = (pairs[-1][0], pairs[-1][1] + head[1])
    return MmoSignature(pairs, margin, float(x0), float(delta))


def sao_amplitudes(spec: SystemSpec, traj: Trajectory, margin: float = 0.05) -> np.ndarray:
    """Half the x-swing from each central minimum to the next maximum."""
    bounds = spec.boundaries
    delta = bounds[1]
    central = [z.index for z in spec.zones if z.role == "central"]
    ext = [e for e in x_extrema(spec, traj, central) if abs(e[1]) <= delta * (1 + margin)]
    amps = []
    for (t0, x0, k0), (t1, x1, k1) in zip(ext, ext[1:]):
        if k0 < 0 < k1:
            amps.append(0.5 * (x1 - x0))
    return np.array(amps)


@dataclass
class PeriodicOrbit:
    anchor: np.ndarray
    period: float
    residual: float
    multipliers: np.ndarray
    crossings: int
    signature: MmoSignature
    orbit: Trajectory
    closure_gap: float
    iterations: int
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"anchor": [float(v) for v in self.anchor], "period": self.period,
                "residual": self.residual,
                "multipliers": [[float(m.real), float(m.imag)] for m in self.multipliers],
                "crossings": self.crossings, "signature": self.signature.to_json(),
                "closure_gap": self.closure_gap, "iterations": self.iterations,
                "notes": list(self.notes)}


def _pm(spec, sec, m, yz):
    ev = poincare_map(spec, np.array([sec[0], yz[0], yz[1]]), sec, crossings=m)
    if ev is None:
        return None, None
    return np.array([ev.state[1], ev.state[2]]), ev.t


def find_periodic_mmo(spec: SystemSpec, seed=None, tol: float = 1e-8, burn_in: int = 40,
                      max_crossings: int = 8, max_iter: int = 40,
                      section: tuple[float, int] | None = None) -> PeriodicOrbit:
    """Fixed point of the return map by damped quasi-Newton on ``(y, z)`` of the section.

    After ``burn_in`` section hits from ``seed`` the number of hits per period
    ``m`` is the smallest one (up to ``max_crossings``) whose ``m``-fold map
    nearly closes; Newton then uses a finite-difference Jacobian of that map.
    Raises :class:`NumericalError` with the last iterate on divergence.
    """
    sec = entry_section(spec) if section is None else section
    seed = np.asarray(DEMO_SEED if seed is None else seed, dtype=float)
    tr = integrate(spec, seed, 2e4 / spec.eps * max(1, burn_in), sections=[sec],
                   stop_after=burn_in + 2 * max_crossings + 1, dense=False)
    if tr.reason != "event" or len(tr.events) < burn_in + 2 * max_crossings + 1:
        raise NumericalError(f"no recurrent section hits after burn-in (stopped: {tr.reason}; "
                             f"last state {tr.end_state.tolist()})")
    hist = [np.array([e.state[1], e.state[2]]) for e in tr.events[burn_in:]]
    u = hist[0]
    scale = max(1e-3, float(np.max(np.abs(np.array(hist)))))
    gaps = [float(np.linalg.norm(hist[m] - u)) for m in range(1, max_crossings + 1)]
    m = int(np.argmin(gaps)) + 1
    for j, g in enumerate(gaps):
        if g <= 1e-3 * scale:
            m = j + 1
            break

    def F(v):
        pv, _ = _pm(spec, sec, m, v)
        if pv is None:
            return None
        return pv - v

    Fu = F(u)
    if Fu is None:
        raise NumericalError(f"orbit escaped from the section at {u.tolist()}")
    it = 0
    for it in range(1, max_iter + 1):
        r = float(np.linalg.norm(Fu))
        if r <= tol:
            break
        h = max(1e-9, 1e-7 * scale)
        J = np.empty((2, 2))
        ok = True
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            Fp, Fm = F(u + e), F(u - e)
            if Fp is None or Fm is None:
                ok = False
                break
            J[:, k] = (Fp - Fm) / (2 * h)
        if not ok:
            raise NumericalError(f"return map undefined near {u.tolist()}")
        try:
            step = np.linalg.solve(J, -Fu)
        except np.linalg.LinAlgError:
            raise NumericalError(f"singular Jacobian at {u.tolist()}") from None
        lam = 1.0
        while lam > 1e-4:
            cand = u + lam * step
            Fc = F(cand)
            if Fc is not None and np.linalg.norm(Fc) < r:
                u, Fu = cand, Fc
                break
            lam *= 0.5
        else:
            raise NumericalError(f"damped Newton stalled at {u.tolist()} (residual {r:.3e})")
    residual = float(np.linalg.norm(Fu))
    if residual > tol:
        raise NumericalError(f"no convergence: residual {residual:.3e} at {u.tolist()}")
    # multipliers of the m-fold map (the section is 2D: y, z)
    h = max(1e-9, 1e-7 * scale)
    J = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        J[:, k] = (F(u + e) - F(u - e)) / (2 * h) + e / h
    mult = np.linalg.eigvals(J)
    _, period = _pm(spec, sec, m, u)
    anchor = np.array([sec[0], u[0], u[1]])
    orbit = integrate(spec, anchor, period, sections=[sec])
    gap = float(np.linalg.norm(orbit.end_state - anchor))
    sig = signature(orbit, spec, cyclic=True)
    return PeriodicOrbit(anchor, float(period), residual, mult, m, sig, orbit, gap, it)
