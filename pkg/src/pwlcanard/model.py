"""Parameterized piecewise-linear slow-fast families and their zone decomposition.

Every generator is stored in fast time: a zone carries ``(M, c)`` so that
``s' = M s + c`` holds while ``lo <= x <= hi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ValidationError(ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or ran away."""


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Params:
    """Coefficients of the three-dimensional minimal system.

    ``delta`` defaults to ``pi * sqrt(eps)``, the choice that makes the
    maximal winding number independent of ``eps``.
    """

    p1: float
    p2: float
    p3: float
    eps: float
    delta: float | None = None

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "p3", "eps"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.eps <= 0:
            raise ValidationError(f"eps must be positive, got {self.eps}")
        d = math.pi * math.sqrt(self.eps) if self.delta is None else _finite("delta", self.delta)
        if d <= 0:
            raise ValidationError(f"delta must be positive, got {d}")
        object.__setattr__(self, "delta", d)

    def with_delta(self, delta: float) -> "Params":
        return Params(self.p1, self.p2, self.p3, self.eps, delta)

    def with_eps(self, eps: float, keep_delta: bool = False) -> "Params":
        return Params(self.p1, self.p2, self.p3, eps, self.delta if keep_delta else None)


@dataclass(frozen=True)
class ReturnParams:
    """Coupling of the slow drift to the state, plus the fourth-zone fold ``x0``."""

    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    kappa: float = 0.0
    zeta: float = 0.0
    xi: float = 0.0
    x0: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha1", "alpha2", "alpha3", "kappa", "zeta", "xi", "x0"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))


@dataclass(frozen=True)
class PwlCurve:
    """Continuous piecewise-affine function of one variable.

    Segment ``i`` covers ``[breakpoints[i-1], breakpoints[i]]`` and has value
    ``slopes[i] * x + intercepts[i]``.
    """

    breakpoints: tuple[float, ...]
    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]

    def __post_init__(self) -> None:
        bp = tuple(_finite("breakpoint", b) for b in self.breakpoints)
        sl = tuple(_finite("slope", s) for s in self.slopes)
        ic = tuple(_finite("intercept", c) for c in self.intercepts)
        if len(sl) != len(bp) + 1 or len(ic) != len(sl):
            raise ValidationError("need len(breakpoints)+1 slopes and intercepts")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValidationError(f"breakpoints must be strictly increasing: {bp}")
        for i, b in enumerate(bp):
            left = sl[i] * b + ic[i]
            right = sl[i + 1] * b + ic[i + 1]
            scale = max(1.0, abs(left), abs(right))
            if abs(left - right) > 1e-14 * scale:
                raise ValidationError(f"discontinuity at x={b}: {left} vs {right}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        object.__setattr__(self, "intercepts", ic)

    @classmethod
    def from_values(cls, breakpoints: Sequence[float], slopes: Sequence[float],
                    anchor: tuple[float, float]) -> "PwlCurve":
        """Build from slopes and one point ``(x, f(x))`` lying in the first segment.

        Intercepts are chained through the breakpoints so the curve is
        continuous by construction.
        """
        bp = [float(b) for b in breakpoints]
        ax, ay = anchor
        ic = [ay - slopes[0] * ax]
        for i, b in enumerate(bp):
            val = slopes[i] * b + ic[i]
            ic.append(val - slopes[i + 1] * b)
        return cls(tuple(bp), tuple(float(s) for s in slopes), tuple(ic))

    def segment(self, x: float) -> int:
        return int(np.searchsorted(self.breakpoints, x, side="left"))

    def __call__(self, x):
        return eval_pwl(self, x)


def eval_pwl(curve: PwlCurve, x):
    """Evaluate ``curve`` at scalar or array ``x``."""
    xa = np.asarray(x, dtype=float)
    idx = np.searchsorted(curve.breakpoints, xa, side="left")
    sl = np.asarray(curve.slopes)[idx]
    ic = np.asarray(curve.intercepts)[idx]
    out = sl * xa + ic
    return float(out) if out.ndim == 0 else out


def f_delta(delta: float) -> PwlCurve:
    """``0`` on ``|x| <= delta`` and ``|x| - delta`` outside."""
    return PwlCurve((-delta, delta), (-1.0, 0.0, 1.0), (-delta, 0.0, -delta))


def f_tilde(delta: float, x0: float) -> PwlCurve:
    """``f_delta`` with a fourth, decreasing branch beyond the fold at ``x0``."""
    if not x0 > delta:
        raise ValidationError(f"x0 must exceed delta ({x0} <= {delta})")
    return PwlCurve((-delta, delta, x0), (-1.0, 0.0, 1.0, -1.0),
                    (-delta, 0.0, -delta, 2.0 * x0 - delta))


def f_four_zone(delta: float, x0: float, beta: float = 0.0) -> PwlCurve:
    """Four-zone function with slope ``beta`` on ``|x| <= delta`` and a fold at ``x0 < -delta``.

    Branches: ``-x + 2 x0 - (beta-1) delta`` for ``x <= x0``,
    ``x - (beta-1) delta`` on ``(x0, -delta)``, ``beta x`` in the centre and
    ``-x + (beta+1) delta`` for ``x >= delta``.
    """
    if not x0 < -delta:
        raise ValidationError(f"x0 must be below -delta ({x0} >= {-delta})")
    return PwlCurve((x0, -delta, delta), (-1.0, 1.0, beta, -1.0),
                    (2 * x0 - (beta - 1) * delta, -(beta - 1) * delta, 0.0, (beta + 1) * delta))


def f_quasi(k: float) -> PwlCurve:
    """``x + (1+k)/2 (|x-1| - |x+1|)``: slope 1 outside ``[-1, 1]``, ``-k`` inside."""
    return PwlCurve((-1.0, 1.0), (1.0, -k, 1.0), (1.0 + k, 0.0, -1.0 - k))


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Zone:
    """One linearity zone ``lo <= x <= hi`` with fast-time generator ``(M, c)``."""

    index: int
    lo: float
    hi: float
    M: np.ndarray
    c: np.ndarray
    role: str = ""

    def field(self, s) -> np.ndarray:
        return self.M @ np.asarray(s, dtype=float) + self.c

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class SystemSpec:
    """A continuous piecewise-affine vector field split by planes ``x = const``."""

    dim: int
    zones: tuple[Zone, ...]
    eps: float
    tag: str
    curve: PwlCurve
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValidationError(f"dimension must be 2 or 3, got {self.dim}")
        zs = self.zones
        if zs[0].lo != -math.inf or zs[-1].hi != math.inf:
            raise ValidationError("zones must cover the whole x-axis")
        for a, b in zip(zs, zs[1:]):
            if a.hi != b.lo:
                raise ValidationError(f"gap between zones at {a.hi} / {b.lo}")
            _check_plane_continuity(a, b, self.dim)

    @property
    def boundaries(self) -> tuple[float, ...]:
        return tuple(z.hi for z in self.zones[:-1])

    def field(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.zone_at(s).field(s)

    def zone_at(self, s) -> Zone:
        """Zone containing ``s``; on a plane, the zone the flow is entering."""
        s = np.asarray(s, dtype=float)
        x = s[0]
        for i, z in enumerate(self.zones[:-1]):
            if x < z.hi:
                return z
            if x == z.hi:
                return self.zones[i + 1] if _enters_upper(z, s) else z
        return self.zones[-1]


def _enters_upper(z: Zone, s: np.ndarray) -> bool:
    v = z.field(s)
    if v[0] != 0.0:
        return v[0] > 0.0
    acc = (z.M @ v)[0]
    return acc >= 0.0


def _check_plane_continuity(a: Zone, b: Zone, dim: int) -> None:
    xb = a.hi
    basis = [np.eye(dim)[i] for i in range(1, dim)]
    pts = [np.r_[xb, np.zeros(dim - 1)]] + [np.r_[xb, np.zeros(dim - 1)] + e for e in basis]
    for p in pts:
        fa, fb = a.field(p), b.field(p)
        scale = max(1.0, float(np.max(np.abs(fa))), float(np.max(np.abs(fb))))
        if np.max(np.abs(fa - fb)) > 1e-14 * scale:
            raise ValidationError(f"field discontinuous across x={xb}")


def _zones_from_curve(curve: PwlCurve, rows) -> tuple[Zone, ...]:
    edges = (-math.inf,) + curve.breakpoints + (math.inf,)
    out = []
    for i, (m, b) in enumerate(zip(curve.slopes, curve.intercepts)):
        M, c = rows(m, b)
        out.append(Zone(i, edges[i], edges[i + 1], _readonly(M), _readonly(c)))
    return tuple(out)


def build_minimal_3d(params: Params) -> SystemSpec:
    """``x' = -y + f_delta(x)``, ``y' = eps (p1 x + p2 z)``, ``z' = eps p3``."""
    p, e = params, params.eps
    curve = f_delta(p.delta)

    def rows(m, b):
        M = [[m, -1.0, 0.0], [e * p.p1, 0.0, e * p.p2], [0.0, 0.0, 0.0]]
        return M, [b, 0.0, e * p.p3]

    zones = _zones_from_curve(curve, rows)
    zones = tuple(Zone(z.index, z.lo, z.hi, z.M, z.c, r)
                  for z, r in zip(zones, ("attracting", "central", "repelling")))
    return SystemSpec(3, zones, e, "minimal-3d", curve, {"params": params})


def constant_sao_condition(params: Params, ret: ReturnParams) -> bool:
    """Coupling pattern ``alpha1 = alpha3 = 0`` with ``p2 * alpha2 < 0``."""
    return ret.alpha1 == 0.0 and ret.alpha3 == 0.0 and params.p2 * ret.alpha2 < 0.0


def build_global_return(params: Params, ret: ReturnParams) -> SystemSpec:
    """Minimal system with a fourth zone past ``x0`` and a state-dependent drift of ``z``."""
    p, e, r = params, params.eps, ret
    if not r.x0 > p.delta:
        raise ValidationError(f"x0={r.x0} must exceed delta={p.delta}")
    curve = f_tilde(p.delta, r.x0)
    zc = e * (p.p3 - r.alpha1 * r.kappa - r.alpha2 * r.zeta - r.alpha3 * r.xi)

    def rows(m, b):
        M = [[m, -1.0, 0.0], [e * p.p1, 0.0, e * p.p2],
             [e * r.alpha1, e * r.alpha2, e * r.alpha3]]
        return M, [b, 0.0, zc]

    zones = _zones_from_curve(curve, rows)
    zones = tuple(Zone(z.index, z.lo, z.hi, z.M, z.c, role) for z, role in
                  zip(zones, ("attracting", "central", "repelling", "return")))
    meta = {"params": params, "ret": ret,
            "constant_sao": constant_sao_condition(params, ret)}
    return SystemSpec(3, zones, e, "global-return", curve, meta)


@dataclass(frozen=True)
class PlanarConfig:
    """Coefficients for the planar Liénard builders.

    ``kind`` is ``"quasi-canard"`` (uses ``k``) or ``"arima"`` (uses
    ``beta``, ``delta``, ``x0``). A nonzero ``drift`` is not implied; use
    :func:`build_planar` with ``drift=c`` to obtain the 3D drifted spec.
    """

    kind: str = "quasi-canard"
    eps: float = 0.2
    a: float = 0.7
    k: float = 0.885
    beta: float = 0.0
    delta: float = 0.1
    x0: float = -1.0

    def curve(self) -> PwlCurve:
        if self.kind == "quasi-canard":
            return f_quasi(self.k)
        if self.kind == "arima":
            # Orientation flipped so that both outer branches attract under
            # eps x' = y - f(x); see the README for the exact branches.
            g = f_four_zone(self.delta, self.x0, self.beta)
            return PwlCurve(g.breakpoints, tuple(-s for s in g.slopes),
                            tuple(-c for c in g.intercepts))
        raise ValidationError(f"unknown planar kind {self.kind!r}")


def build_planar(cfg: PlanarConfig, drift: float | None = None) -> SystemSpec:
    """``eps x' = y - f(x)``, ``y' = a - x`` in fast time; with ``drift`` also ``a' = eps*drift``."""
    e = _finite("eps", cfg.eps)
    if e <= 0:
        raise ValidationError("eps must be positive")
    curve = cfg.curve()
    if drift is None:
        def rows(m, b):
            return [[-m, 1.0], [-e, 0.0]], [-b, e * cfg.a]
        dim, tag = 2, f"planar-{cfg.kind}"
    else:
        c = _finite("drift", drift)

        def rows(m, b):
            return [[-m, 1.0, 0.0], [-e, 0.0, e], [0.0, 0.0, 0.0]], [-b, 0.0, e * c]
        dim, tag = 3, f"drifted-{cfg.kind}"
    zones = _zones_from_curve(curve, rows)
    return SystemSpec(dim, zones, e, tag, curve, {"planar": cfg, "drift": drift})
