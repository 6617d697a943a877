"""Independent reference computations used by the tests.

Nothing here calls the package's canard solver; the formulas are written out
from the model equations directly.
"""
import math

import numpy as np


def _lam(p1, eps):
    return -(1.0 + math.sqrt(1.0 - 4.0 * eps * p1)) / 2.0


def attracting_trace(p1, p2, p3, eps, delta, z):
    """y on the attracting slow manifold at x = -delta (left-zone invariant plane)."""
    lam = _lam(p1, eps)
    c = -delta * (1.0 + lam) - eps * eps * p2 * p3 / (lam * lam)
    return c - eps * p2 / lam * z


def central_state(p1, p2, p3, eps, s, t):
    """Central-zone solution written with the rotating pair (u, v)."""
    x, y, z = s
    w = math.sqrt(eps * p1)
    u0 = p1 * x + p2 * z
    v0 = p1 * y - eps * p2 * p3
    u = u0 * np.cos(w * t) - v0 / w * np.sin(w * t)
    v = v0 * np.cos(w * t) + w * u0 * np.sin(w * t)
    zt = z + eps * p3 * t
    return (u - p2 * zt) / p1, (v + eps * p2 * p3) / p1, zt


def symmetric_canards(p1, p2, p3, eps, delta=None, n=10_000, zmin=None):
    """Maximal canards as symmetric orbits: enter on the attracting trace at x = -delta,
    reach x = 0 exactly when z = 0, and stay in |x| <= delta meanwhile.

    Requires p1 > 0, p3 > 0 (z increases); scans z on ``n`` points of
    ``[zmin, 0)`` and refines sign changes of x(-z / (eps p3)) by bisection.
    """
    delta = math.pi * math.sqrt(eps) if delta is None else delta
    if zmin is None:
        lam = _lam(p1, eps)
        c = -delta * (1.0 + lam) - eps * eps * p2 * p3 / (lam * lam)
        zmin = c * lam / (eps * p2) if p2 < 0 else -20 * delta
    zs = np.linspace(zmin, 0.0, n + 1)[:-1]

    def g(z):
        y = attracting_trace(p1, p2, p3, eps, delta, z)
        return central_state(p1, p2, p3, eps, (-delta, y, z), -z / (eps * p3))[0]

    gv = np.array([g(z) for z in zs])
    roots = []
    for i in np.nonzero(np.sign(gv[:-1]) * np.sign(gv[1:]) < 0)[0]:
        a, b = zs[i], zs[i + 1]
        ga = gv[i]
        for _ in range(200):
            m = 0.5 * (a + b)
            if m in (a, b):
                break
            gm = g(m)
            if np.sign(gm) == np.sign(ga):
                a, ga = m, gm
            else:
                b = m
        z = 0.5 * (a + b)
        y = attracting_trace(p1, p2, p3, eps, delta, z)
        T = -z / (eps * p3)
        ts = np.linspace(0.0, T, 4000)
        xs = central_state(p1, p2, p3, eps, (-delta, y, z), ts)[0]
        if np.max(np.abs(xs[1:])) <= delta * (1 + 1e-9):
            turns = int(math.floor(2 * math.sqrt(eps * p1) * T / (2 * math.pi)))
            roots.append((z, turns))
    return roots


def tangent_equation_scan(p1, p2, p3, eps, delta=None, n=10_000, zmin=None):
    """Dense sign scan of the tangent form of the canard equation, keeping sign changes
    where cos(theta) * Den > 0 (the others are poles or spurious branches)."""
    delta = math.pi * math.sqrt(eps) if delta is None else delta
    lam = _lam(p1, eps)
    if zmin is None:
        c = -delta * (1.0 + lam) - eps * eps * p2 * p3 / (lam * lam)
        zmin = c * lam / (eps * p2)
    z = np.linspace(zmin, 0.0, n + 1)[:-1]
    theta = -2.0 * math.sqrt(p1) * z / (p3 * math.sqrt(eps))
    n1 = p1 * p2 * z - delta * p1 ** 2 - p2 * p3
    n2 = p2 * z - delta * p1
    num = n1 * n2
    den = eps * n1 ** 2 - lam ** 2 * p1 * n2 ** 2
    K = 2 * abs(lam) * math.sqrt(eps * p1)
    h = np.sin(theta) * den - K * num * np.cos(theta)
    keep = np.cos(theta) * den > 0
    idx = np.nonzero((np.sign(h[:-1]) * np.sign(h[1:]) < 0) & keep[:-1] & keep[1:])[0]
    return [0.5 * (z[i] + z[i + 1]) for i in idx]
