"""Closed-form invariant objects of the minimal system.

Slow manifolds in the outer zones, their traces on the switching planes,
the rotation axis, the classification of the folded singularity and the
winding bound.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import Params, ValidationError


class Kind(str, enum.Enum):
    FOLDED_SADDLE = "FoldedSaddle"
    FOLDED_NODE = "FoldedNode"
    FOLDED_FOCUS = "FoldedFocus"
    FSN_I = "FSN-I"
    FSN_II = "FSN-II"
    NON_ROTATING = "NonRotating"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SingularityClass:
    kind: Kind
    mu: float | None = None
    sign_class: Kind | None = None  # saddle/node sign pattern when kind is NON_ROTATING
    boundary: bool = False  # mu exactly 1 (node/focus border) or integer mu

    @property
    def label(self) -> str:
        if self.kind is Kind.NON_ROTATING and self.sign_class is not None:
            return f"{self.kind.value}+{self.sign_class.value.replace('Folded', '')}-sign"
        return self.kind.value

    def to_json(self) -> dict:
        out = {"class": self.kind.value, "mu": self.mu}
        if self.sign_class is not None:
            out["sign_class"] = self.sign_class.value
        if self.boundary:
            out["boundary"] = True
        return out


def classify(p1: float, p2: float, p3: float) -> SingularityClass:
    """Classify the folded singularity from the signs of ``p1`` and ``p2 p3``."""
    vals = [float(v) for v in (p1, p2, p3)]
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError("coefficients must be finite")
    p1, p2, p3 = vals
    if p2 == 0 and p3 == 0:
        return SingularityClass(Kind.DEGENERATE)
    if p2 == 0:
        return SingularityClass(Kind.FSN_I)
    if p3 == 0:
        return SingularityClass(Kind.FSN_II)
    q = p2 * p3
    sign = Kind.FOLDED_SADDLE if q > 0 else Kind.FOLDED_NODE
    if p1 <= 0:
        return SingularityClass(Kind.NON_ROTATING, None, sign)
    mu = max_winding(p1, p2, p3)
    if q > 0:
        return SingularityClass(Kind.FOLDED_SADDLE, mu, boundary=mu == math.floor(mu))
    thr = p1 * math.sqrt(p1)
    if q > -thr:
        return SingularityClass(Kind.FOLDED_NODE, mu, boundary=mu == math.floor(mu))
    return SingularityClass(Kind.FOLDED_FOCUS, mu, boundary=q == -thr)


def max_winding(p1: float, p2: float, p3: float) -> float:
    """``p1^{3/2} / |p2 p3|``: bound on complete turns with ``delta = pi sqrt(eps)``."""
    if p1 <= 0:
        raise ValidationError("winding bound needs p1 > 0")
    if p2 * p3 == 0:
        raise ValidationError("p2 p3 = 0 is a folded saddle-node; the bound is infinite")
    return p1 * math.sqrt(p1) / abs(p2 * p3)


def t_star(params: Params) -> float:
    """Fast-time flight of an axis orbit from ``x = -delta`` to ``x = +delta``."""
    p = params
    if p.p2 * p.p3 == 0:
        raise ValidationError("flight time undefined when p2 p3 = 0")
    return 2.0 * abs(p.p1) * p.delta / (p.eps * abs(p.p2 * p.p3))


def winding_from_flight(params: Params) -> float:
    """Turns completed by an axis orbit: ``omega t* / 2 pi`` for general ``delta``."""
    return math.sqrt(params.eps * params.p1) * t_star(params) / (2.0 * math.pi)


@dataclass(frozen=True)
class RotationAxis:
    slope: float  # x = slope * z
    y: float
    z_range: tuple[float, float]  # z-interval where |x| <= delta

    def point(self, z: float) -> np.ndarray:
        return np.array([self.slope * z, self.y, z])


def rotation_axis(params: Params) -> RotationAxis:
    p = params
    if p.p1 == 0:
        raise ValidationError("axis undefined when p1 = 0")
    slope = -p.p2 / p.p1
    y = p.eps * p.p2 * p.p3 / p.p1
    if slope == 0:
        zr = (-math.inf, math.inf)
    else:
        a, b = p.delta / slope, -p.delta / slope
        zr = (min(a, b), max(a, b))
    return RotationAxis(slope, y, zr)


@dataclass(frozen=True)
class SlowManifolds:
    """Invariant half-planes of the outer zones and their switching-plane traces.

    ``attracting_plane`` / ``repelling_plane`` are ``(a, b, c, d)`` with
    ``a x + b y + c z = d``. ``line_A`` / ``line_R`` are ``(slope, intercept)``
    giving ``y = intercept - slope * z`` on ``x = -delta`` / ``x = +delta``.
    """

    lam_A: float
    lam_R: float
    attracting_plane: tuple[float, float, float, float]
    repelling_plane: tuple[float, float, float, float]
    line_A: tuple[float, float]
    line_R: tuple[float, float]
    y_star: float
    z_star_A: float
    z_star_R: float

    def y_on_A(self, z):
        return self.line_A[1] - self.line_A[0] * np.asarray(z)

    def y_on_R(self, z):
        return self.line_R[1] - self.line_R[0] * np.asarray(z)


def fast_eigenvalue(params: Params) -> float:
    disc = 1.0 - 4.0 * params.eps * params.p1
    if disc <= 0:
        raise ValidationError("1 - 4 eps p1 must be positive (real fast eigenvalues)")
    return -(1.0 + math.sqrt(disc)) / 2.0


def slow_manifolds(params: Params) -> SlowManifolds:
    p = params
    e, d = p.eps, p.delta
    lam = fast_eigenvalue(p)
    lr = -lam
    # left zone: left eigenvector (-lam^2, lam, eps p2) annihilates the fast direction
    plane_A = (-lam * lam, lam, e * p.p2, -d * lam - p.p2 * p.p3 * e * e / lam)
    plane_R = (-lr * lr, lr, e * p.p2, -d * lr - p.p2 * p.p3 * e * e / lr)
    cA = -d * (1.0 + lam) - p.p2 * p.p3 * e * e / (lam * lam)
    cR = -d * (1.0 - lr) - p.p2 * p.p3 * e * e / (lr * lr)
    line_A = (e * p.p2 / lam, cA)
    line_R = (e * p.p2 / lr, cR)
    zA = cA * lam / (e * p.p2) if p.p2 != 0 else math.inf
    zR = cR * lr / (e * p.p2) if p.p2 != 0 else math.inf
    return SlowManifolds(lam, lr, plane_A, plane_R, line_A, line_R, cA, zA, zR)


def reflect(s) -> np.ndarray:
    """Reversing involution ``(x, y, z) -> (-x, y, -z)``."""
    s = np.asarray(s, dtype=float)
    return np.array([-s[0], s[1], -s[2]])
