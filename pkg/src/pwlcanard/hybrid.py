"""Event-driven integration across switching planes, rotation counting and a smooth reference solver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .model import NumericalError, Params, SystemSpec, ValidationError
from .zoneflow import ZoneFlow, exit_crossing, flows_for

MAX_SWITCHES = 10**7


@dataclass(frozen=True)
class Segment:
    zone: int
    t0: float
    s0: np.ndarray
    t1: float
    s1: np.ndarray


@dataclass(frozen=True)
class Event:
    """A hit of a user section ``x = const`` during integration."""

    t: float
    state: np.ndarray
    section: int


@dataclass
class Trajectory:
    """Zone-tagged segments, section events and a dense sample table."""

    dim: int
    segments: list[Segment]
    samples: np.ndarray  # columns: t, state..., zone
    reason: str
    events: list[Event] = field(default_factory=list)

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1 if self.segments else 0.0

    @property
    def end_state(self) -> np.ndarray:
        return self.segments[-1].s1

    def to_csv(self, path_or_buf=None) -> str:
        cols = ["t", "x", "y", "z"][: self.dim + 1] + ["zone"]
        lines = [",".join(cols)]
        for row in self.samples:
            vals = [format(float(v), ".17g") for v in row[:-1]] + [str(int(row[-1]))]
            lines.append(",".join(vals))
        text = "\n".join(lines) + "\n"
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w", newline="") as fh:
                    fh.write(text)
        return text


def _sample_segment(zf: ZoneFlow, seg: Segment, step: float) -> np.ndarray:
    n = zf.dim
    dt = seg.t1 - seg.t0
    m = int(math.floor(dt / step)) if step > 0 else 0
    rows = np.empty((m + 2, n + 2))
    rows[0, 0], rows[0, 1:n + 1] = seg.t0, seg.s0
    if m > 0:
        A = zf.generator()
        P = expm(A * step)
        S = np.r_[seg.s0, 1.0]
        for j in range(1, m + 1):
            S = P @ S
            rows[j, 0], rows[j, 1:n + 1] = seg.t0 + j * step, S[:n]
    keep = m + 1
    if m > 0 and seg.t0 + m * step >= seg.t1 - 1e-12 * max(1.0, abs(seg.t1)):
        keep = m
    rows[keep, 0], rows[keep, 1:n + 1] = seg.t1, seg.s1
    rows = rows[: keep + 1]
    rows[:, -1] = seg.zone
    return rows


def integrate(spec: SystemSpec, s0, horizon: float, *, output_step: float | None = None,
              sections: Sequence[tuple[float, int]] = (), stop_after: int | None = None,
              max_switches: int = MAX_SWITCHES, dense: bool = True,
              escape_radius: float = 1e8) -> Trajectory:
    """Concatenate exact zone flows from ``s0`` up to time ``horizon``.

    ``sections`` are extra planes ``(x, direction)`` recorded as events; with
    ``stop_after`` the run ends at that many events (reason ``"event"``).
    ``output_step`` overrides the default dense step of ``(2 pi / omega) / 64``
    in rotating zones and ``horizon / 4096`` elsewhere.
    """
    s = np.asarray(s0, dtype=float).copy()
    if s.shape != (spec.dim,) or not np.all(np.isfinite(s)):
        raise ValidationError(f"initial state must be {spec.dim} finite numbers")
    horizon = float(horizon)
    if horizon < 0 or not math.isfinite(horizon):
        raise ValidationError("horizon must be finite and nonnegative")
    flows = flows_for(spec)
    zone = spec.zone_at(s)
    segs: list[Segment] = []
    events: list[Event] = []
    chunks = []
    t = 0.0
    reason = "horizon"
    if horizon == 0.0:
        seg = Segment(zone.index, 0.0, s.copy(), 0.0, s.copy())
        samples = np.empty((0, spec.dim + 2))
        return Trajectory(spec.dim, [seg], samples, reason)

    switches = 0
    while t < horizon:
        zf = flows[zone.index]
        remaining = horizon - t
        cr = exit_crossing(zf, s, remaining, sections)
        if cr is None:
            t1 = horizon
            s1 = _flow(zf, s, remaining)
        else:
            t1 = t + cr.t
            s1 = cr.state
        seg = Segment(zone.index, t, s.copy(), t1, s1.copy())
        segs.append(seg)
        if dense:
            step = output_step
            if step is None:
                step = (2 * math.pi / zf.omega) / 64 if zf.rotating else horizon / 4096
            chunks.append(_sample_segment(zf, seg, step))
        t, s = t1, s1
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > escape_radius:
            reason = "left domain"
            break
        if cr is None:
            break
        if cr.index >= 2:
            events.append(Event(t, s.copy(), cr.index - 2))
            if stop_after is not None and len(events) >= stop_after:
                reason = "event"
                break
            continue
        switches += 1
        if switches > max_switches:
            raise NumericalError(f"more than {max_switches} switches before t={t}")
        # sections lying on a switching plane fire on the zone change itself
        going = 1 if cr.index == 1 else -1
        hit = [j for j, (xs, d) in enumerate(sections) if xs == cr.plane and d in (0, going)]
        if hit:
            events.append(Event(t, s.copy(), hit[0]))
        zone = spec.zones[zone.index + going]
        if hit and stop_after is not None and len(events) >= stop_after:
            reason = "event"
            break
    samples = np.vstack(chunks) if chunks else np.empty((0, spec.dim + 2))
    return Trajectory(spec.dim, segs, samples, reason, events)


def _flow(zf: ZoneFlow, s, t):
    from .zoneflow import affine_flow
    return affine_flow(zf, s, t)


@dataclass(frozen=True)
class WindingCount:
    turns: int
    residual: float
    axis: tuple[float, float]  # (x-slope in z, y-offset) of the rotation axis

    @property
    def angle(self) -> float:
        return 2 * math.pi * self.turns + self.residual


def _rot_coords(params: Params, s: np.ndarray) -> np.ndarray:
    """``(sqrt(eps p1) u, v)``: uniformly rotating coordinates around the axis."""
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps
    u = p1 * s[..., 0] + p2 * s[..., 2]
    v = p1 * s[..., 1] - e * p2 * p3
    return np.stack([math.sqrt(e * p1) * u, v], axis=-1)


def winding_number(traj: Trajectory, params: Params, central_zone: int = 1) -> WindingCount:
    """Accumulated rotation angle around the axis over central-zone segments."""
    if params.p1 <= 0:
        raise ValidationError("no rotation in the central zone when p1 <= 0")
    w = math.sqrt(params.eps * params.p1)
    total = 0.0
    for seg in traj.segments:
        if seg.zone != central_zone or seg.t1 <= seg.t0:
            continue
        M = np.array([[0.0, -1.0, 0.0], [params.eps * params.p1, 0.0, params.eps * params.p2],
                      [0.0, 0.0, 0.0]])
        c = np.array([0.0, 0.0, params.eps * params.p3])
        A = np.zeros((4, 4))
        A[:3, :3], A[:3, 3] = M, c
        dt = seg.t1 - seg.t0
        n = max(2, int(math.ceil(dt * w / (math.pi / 8))) + 1)
        ts = np.linspace(0.0, dt, n)
        P = expm(A * (dt / (n - 1)))
        S = np.r_[seg.s0, 1.0]
        pts = [S[:3]]
        for _ in range(n - 1):
            S = P @ S
            pts.append(S[:3])
        pts[-1] = seg.s1
        ab = _rot_coords(params, np.array(pts))
        ang = np.unwrap(np.arctan2(ab[:, 1], ab[:, 0]))
        if np.all(np.hypot(ab[:, 0], ab[:, 1]) > 0):
            total += ang[-1] - ang[0]
    total = abs(total)
    turns = int(math.floor(total / (2 * math.pi)))
    resid = total - 2 * math.pi * turns
    axis = (-params.p2 / params.p1, params.eps * params.p2 * params.p3 / params.p1)
    return WindingCount(turns, resid, axis)


def integrate_smooth_reference(params: Params, s0, horizon: float, *, rtol: float = 1e-10,
                               atol: float = 1e-13, n_out: int = 4096,
                               events=None) -> Trajectory:
    """Smooth counterpart with ``f(x) = x^2``, solved adaptively (DOP853) in fast time."""
    p1, p2, p3, e = params.p1, params.p2, params.p3, params.eps

    def rhs(_t, s):
        x, y, z = s
        return [-y + x * x, e * (p1 * x + p2 * z), e * p3]

    s0 = np.asarray(s0, dtype=float)
    t_eval = np.linspace(0.0, horizon, n_out + 1)
    sol = solve_ivp(rhs, (0.0, horizon), s0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, events=events, dense_output=False)
    if sol.status == -1:
        raise NumericalError(f"smooth reference failed: {sol.message}")
    reason = "event" if sol.status == 1 else "horizon"
    samples = np.column_stack([sol.t, sol.y.T, np.zeros_like(sol.t)])
    end = sol.y[:, -1] if sol.t.size else s0
    seg = Segment(0, 0.0, s0, float(sol.t[-1]) if sol.t.size else 0.0, end)
    evs = []
    if sol.t_events is not None:
        for j, (te, ye) in enumerate(zip(sol.t_events, sol.y_events)):
            evs += [Event(float(tt), yy, j) for tt, yy in zip(te, ye)]
        evs.sort(key=lambda ev: ev.t)
    return Trajectory(3, [seg], samples, reason, evs)
