"""Smooth compactly supported test functions with h-dependent steepness.

The primitive is the standard bump exp(-t^2/(1-t^2)) on (-1, 1); integrating
it yields a smooth step, and products of scaled steps yield inner/outer
window mollifiers that sandwich the indicator of a shrinking energy interval
[c, c + h^delta] with shoulders of relative width h^lambda.  All derivatives
up to order 6 are analytic (symbolically generated once and cached), so the
derivative-growth class membership can be checked rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ShoulderTooWide

MAX_ORDER = 6

#: integral of the unit bump exp(-t^2/(1-t^2)) over (-1, 1)
BUMP_MASS = 1.2069003224378765

_EDGE = 1.0 - 1e-9  # evaluation mask: beyond this the bump underflows to 0 anyway


@lru_cache(maxsize=1)
def _bump_derivative_table():
    import sympy as sp

    t = sp.symbols("t")
    expr = sp.exp(-(t**2) / (1 - t**2))
    return tuple(
        sp.lambdify(t, sp.diff(expr, t, j), modules="numpy") for j in range(MAX_ORDER + 1)
    )


def _bump_deriv(t, order):
    """d^order/dt^order of exp(-t^2/(1-t^2)), zero outside (-1, 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < _EDGE
    if np.any(inside):
        out[inside] = _bump_derivative_table()[order](t[inside])
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)


def _step_value(t):
    """Smooth step rising 0 -> 1 over [-1, 1]: cumulative unit bump / BUMP_MASS."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > -1.0) & (t < 1.0)
    if np.any(inside):
        ti = t[inside]
        half = 0.5 * (ti + 1.0)
        pts = -1.0 + half[:, None] * (_GL_NODES[None, :] + 1.0)
        vals = np.zeros_like(pts)
        ok = np.abs(pts) < _EDGE
        vals[ok] = _bump_derivative_table()[0](pts[ok])
        out[inside] = np.clip((vals @ _GL_WEIGHTS) * half / BUMP_MASS, 0.0, 1.0)
    return out


def _step_deriv(t, order):
    if order == 0:
        return _step_value(t)
    return _bump_deriv(t, order - 1) / BUMP_MASS


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported function with analytic derivatives.

    ``scale_exponent`` is the exponent governing derivative growth: the
    order-j derivative sup is O(h^(-scale_exponent * j)) along the family the
    function came from.  ``breakpoints`` mark support and plateau edges so
    quadratures can split there.
    """

    support: tuple[float, float]
    scale_exponent: float
    breakpoints: tuple[float, ...]
    _value: Callable
    _derivative: Callable

    def __call__(self, x):
        out = self._value(np.asarray(x, dtype=float))
        return float(out) if np.ndim(x) == 0 else out

    def derivative(self, x, order: int = 1):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in [0, {MAX_ORDER}]")
        out = self._derivative(np.asarray(x, dtype=float), order)
        return float(out) if np.ndim(x) == 0 else out


def bump(center: float, width: float, height: float = 1.0) -> TestFunction:
    """Bump of the given height supported on [center - width, center + width]."""
    if width <= 0:
        raise ValueError("bump width must be positive")

    def value(x):
        return height * _bump_deriv((x - center) / width, 0)

    def derivative(x, order):
        return height * _bump_deriv((x - center) / width, order) / width**order

    lo, hi = center - width, center + width
    return TestFunction((lo, hi), 0.0, (lo, hi), value, derivative)


def _rising_step(lo: float, hi: float):
    """(value, derivative) pair of a smooth 0 -> 1 step over [lo, hi]."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)

    def value(x):
        return _step_value((x - mid) / half)

    def derivative(x, order):
        return _step_deriv((x - mid) / half, order) / half**order

    return value, derivative


def _falling_step(lo: float, hi: float):
    rise_v, rise_d = _rising_step(lo, hi)

    def value(x):
        return 1.0 - rise_v(x)

    def derivative(x, order):
        if order == 0:
            return value(x)
        return -rise_d(x, order)

    return value, derivative


def _product(parts):
    """Leibniz product of (value, derivative) pairs."""

    def value(x):
        out = np.ones_like(np.asarray(x, dtype=float))
        for v, _ in parts:
            out = out * v(x)
        return out

    (va, da), (vb, db) = parts

    def derivative(x, order):
        if order == 0:
            return value(x)
        out = np.zeros_like(np.asarray(x, dtype=float))
        for i in range(order + 1):
            out += math.comb(order, i) * da(x, i) * db(x, order - i)
        return out

    return value, derivative


def _window_parts(h, lam, kind):
    hl = h**lam
    if 3.0 * hl >= 0.5:
        raise ShoulderTooWide(f"3 h^lambda = {3 * hl:.4f} >= 1/2; decrease h or raise lambda")
    if kind == "inner":
        edges = (-0.5 + hl, -0.5 + 3 * hl, 0.5 - 3 * hl, 0.5 - hl)
    elif kind == "outer":
        edges = (-0.5 - 3 * hl, -0.5 - hl, 0.5 + hl, 0.5 + 3 * hl)
    else:
        raise ValueError("kind must be 'inner' or 'outer'")
    rise = _rising_step(edges[0], edges[1])
    fall = _falling_step(edges[2], edges[3])
    return _product((rise, fall)), edges


def mollified_window(c: float, h: float, delta: float, lam: float, kind: str) -> TestFunction:
    """Inner or outer mollifier for the energy window [c, c + h^delta].

    In the normalized coordinate y = (x - c)/h^delta - 1/2 the inner window
    is supported on [-1/2 + h^lam, 1/2 - h^lam] and equals 1 on
    [-1/2 + 3h^lam, 1/2 - 3h^lam]; the outer window is supported on
    [-1/2 - 3h^lam, 1/2 + 3h^lam] and equals 1 on [-1/2 - h^lam, 1/2 + h^lam].
    Then inner <= indicator <= outer pointwise, and derivatives of order j
    grow like h^(-(lam + delta) * j).
    """
    if not (h > 0 and delta > 0 and lam > 0):
        raise ValueError("h, delta, lambda must be positive")
    (val_y, der_y), edges = _window_parts(h, lam, kind)
    hd = h**delta

    def to_y(x):
        return (x - c) / hd - 0.5

    def value(x):
        return val_y(to_y(x))

    def derivative(x, order):
        return der_y(to_y(x), order) / hd**order

    def to_x(y):
        return c + (y + 0.5) * hd

    support = (to_x(edges[0]), to_x(edges[3]))
    breaks = tuple(to_x(e) for e in edges)
    return TestFunction(support, lam + delta, breaks, value, derivative)


def mollified_shoulder(c: float, h: float, delta: float, lam: float) -> TestFunction:
    """The leak term outer * (1 - inner), supported in the two shoulder bands."""
    inner = mollified_window(c, h, delta, lam, "inner")
    outer = mollified_window(c, h, delta, lam, "outer")

    def value(x):
        return outer(x) * (1.0 - inner(x))

    def derivative(x, order):
        if order == 0:
            return value(x)
        out = np.zeros_like(np.asarray(x, dtype=float))
        for i in range(order + 1):
            comp = -inner.derivative(x, order - i)
            if order - i == 0:
                comp = 1.0 - inner(x)
            out += math.comb(order, i) * outer.derivative(x, i) * comp
        return out

    breaks = tuple(sorted(set(inner.breakpoints + outer.breakpoints)))
    return TestFunction(outer.support, lam + delta, breaks, value, derivative)


def shoulder_bands(c: float, h: float, delta: float, lam: float):
    """The two bands that must contain the support of the shoulder term."""
    hd, w = h**delta, 3.0 * h**lam * h**delta
    return ((c - w, c + w), (c + hd - w, c + hd + w))


def derivative_bound_check(tf: TestFunction, h: float, order: int, samples: int = 2001) -> float:
    """Max over a dense sample of |tf^(order)| * h^(scale_exponent * order).

    A bounded result over an h-sweep certifies membership in the derivative
    growth class the function claims via ``scale_exponent``.  Sampling is
    refined between breakpoints so narrow shoulders are resolved.
    """
    pts = [np.linspace(tf.support[0], tf.support[1], samples)]
    knots = sorted(set((tf.support[0],) + tf.breakpoints + (tf.support[1],)))
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi > lo:
            pts.append(np.linspace(lo, hi, 201))
    x = np.concatenate(pts)
    peak = float(np.max(np.abs(tf.derivative(x, order))))
    return peak * h ** (tf.scale_exponent * order)
