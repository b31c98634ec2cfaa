"""Reduced phase space numerics: level-set measures and phase-space integrals.

Dividing out the circle action identifies the zero-momentum slice p_phi = 0,
modulo rotation, with the cotangent plane over the profile interval; the
reduced Hamiltonian is p(s, sigma) = sigma^2 + V(s) with flat measure ds
dsigma.  Level sets {p = c} carry the thin-shell (Gelfand-Leray) measure,
whose density per unit s is 1/sqrt(c - V) with both momentum branches
combined.  That normalization - not the Riemannian surface measure, which
differs by |grad p| - is what every leading term in the eigenvalue
asymptotics integrates against.

``thin_shell_measure`` computes shell averages by direct 2D quadrature and
serves as the independent oracle for the 1D level-set quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import NonRegularValue, ZeroShell
from .geometry import RevolutionSurface

#: |V'| below this at a root of V = c makes c non-regular
REGULARITY_TOL = 1e-8

_GL_NODES_40, _GL_WEIGHTS_40 = np.polynomial.legendre.leggauss(40)
_GL_NODES_32, _GL_WEIGHTS_32 = np.polynomial.legendre.leggauss(32)


def _as_potential(model: RevolutionSurface, potential):
    return model.potential if potential is None else potential


def _fd_deriv(f, s, step=1e-6):
    return (float(f(s + step)) - float(f(s - step))) / (2.0 * step)


def _fd_deriv2(f, s, step=1e-4):
    return (float(f(s + step)) - 2.0 * float(f(s)) + float(f(s - step))) / step**2


@dataclass(frozen=True)
class ReducedPhaseSpace:
    """Cotangent plane over (0, L) with Hamiltonian sigma^2 + V(s)."""

    model: RevolutionSurface
    potential: Callable | None = None

    def p(self, s, sigma):
        v = _as_potential(self.model, self.potential)
        return np.asarray(sigma, dtype=float) ** 2 + np.asarray(v(s), dtype=float)


@dataclass(frozen=True)
class AllowedInterval:
    lo: float
    hi: float
    lo_turning: bool
    hi_turning: bool


@dataclass(frozen=True)
class ReducedHypersurface:
    """Level set {sigma^2 + V(s) = c} with branch and measure data.

    For each s in the allowed region V < c the two momentum branches are
    sigma = +-sqrt(c - V(s)); the combined thin-shell density per unit s is
    w(s) = 1/sqrt(c - V(s)), integrable across simple turning points.
    """

    c: float
    intervals: tuple[AllowedInterval, ...]
    turning_points: tuple[float, ...]

    def branches(self, s, potential_value):
        root = math.sqrt(self.c - potential_value)
        return root, -root


def level_set(model: RevolutionSurface, c: float, potential=None) -> ReducedHypersurface:
    """Locate the allowed region {V < c} and verify c is a regular value.

    Turning points are roots of V = c refined by bisection from a dense scan;
    a root with |V'| below REGULARITY_TOL raises NonRegularValue, as the
    level-set measure degenerates there.
    """
    v = _as_potential(model, potential)
    L = model.length
    s = np.linspace(0.0, L, 8193)
    vals = np.asarray(v(s), dtype=float) - c
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(lambda t: float(v(t)) - c, s[i], s[i + 1], xtol=1e-14))
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(float(s[i]))
    roots = sorted(set(roots))
    for r in roots:
        if abs(_fd_deriv(v, r)) <= REGULARITY_TOL:
            raise NonRegularValue(
                f"c = {c} is not a regular value: V' vanishes at the turning point s = {r:.6g}"
            )
    edges = [0.0] + roots + [L]
    intervals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-13:
            continue
        mid = 0.5 * (lo + hi)
        if float(v(mid)) < c:
            intervals.append(
                AllowedInterval(lo, hi, lo in roots, hi in roots)
            )
    return ReducedHypersurface(float(c), tuple(intervals), tuple(roots))


def _turning_width(v, t: float, toward: float, max_width: float) -> float:
    # shrink until |V''| * width <= 0.1 |V'| at the neighborhood boundary
    w = max_width
    sgn = 1.0 if toward > t else -1.0
    for _ in range(60):
        edge = t + sgn * w
        d1 = abs(_fd_deriv(v, edge))
        d2 = abs(_fd_deriv2(v, edge))
        if d2 * w <= 0.1 * d1 and d1 > 0:
            return w
        w *= 0.5
    return w


def _turning_piece(v, c, t: float, toward: float, width: float, weight) -> float:
    """Integral of weight(s, sqrt(c-V)) / sqrt(c - V) over the substituted patch.

    With u^2 = c - V(s) the integrand becomes 2 * weight / |V'(s(u))| du,
    which is smooth; s(u) is recovered per quadrature node by bisection on
    the locally monotone potential.
    """
    sgn = 1.0 if toward > t else -1.0
    edge = t + sgn * width
    u_max = math.sqrt(max(c - float(v(edge)), 0.0))
    if u_max == 0.0:
        return 0.0
    total = 0.0
    half = 0.5 * u_max
    for node, wq in zip(_GL_NODES_40, _GL_WEIGHTS_40):
        u = half * (node + 1.0)
        target = c - u * u
        lo, hi = (t, edge) if sgn > 0 else (edge, t)
        s_u = brentq(lambda x: float(v(x)) - target, lo, hi, xtol=1e-14)
        total += wq * 2.0 * weight(s_u, u) / abs(_fd_deriv(v, s_u))
    return total * half


def _level_integral(model, c, weight, potential=None) -> float:
    """Integral of weight(s, sigma_+) against the thin-shell density.

    ``weight`` receives (s, sqrt(c - V(s))) and already accounts for both
    branches; weight = 1 gives the level-set volume.  Interior pieces use
    adaptive quadrature; neighborhoods of turning points are substituted so
    the inverse square-root singularity disappears.
    """
    v = _as_potential(model, potential)
    surf = level_set(model, c, potential)
    total = 0.0
    for iv in surf.intervals:
        lo, hi = iv.lo, iv.hi
        lo_w = _turning_width(v, lo, hi, (hi - lo) / 4.0) if iv.lo_turning else 0.0
        hi_w = _turning_width(v, hi, lo, (hi - lo) / 4.0) if iv.hi_turning else 0.0
        if iv.lo_turning:
            total += _turning_piece(v, c, lo, hi, lo_w, weight)
        if iv.hi_turning:
            total += _turning_piece(v, c, hi, lo, hi_w, weight)
        a, b = lo + lo_w, hi - hi_w
        if b > a:
            val, _ = quad(
                lambda s: weight(s, math.sqrt(c - float(v(s)))) / math.sqrt(c - float(v(s))),
                a,
                b,
                limit=300,
                epsabs=1e-12,
                epsrel=1e-12,
            )
            total += val
    return total


def reduced_volume(model: RevolutionSurface, c: float, potential=None) -> float:
    """Thin-shell volume of the reduced level set: integral of ds/sqrt(c - V)."""
    return sigma_c_integral(model, c, None, potential)


def averaged_symbol(b, point, n: int = 64, tol: float = 1e-13) -> float:
    """Orbit average of a phase-space symbol b(s, phi, sigma, p_phi).

    Periodic trapezoid quadrature over phi, doubling nodes until stable;
    spectrally accurate for smooth symbols, exact for phi-independent ones.
    """
    s, sigma, p_phi = point
    prev = None
    while n <= 8192:
        phi = np.arange(n) * (2.0 * math.pi / n)
        vals = np.broadcast_to(b(s, phi, sigma, p_phi), phi.shape)
        if np.all(vals == vals[0]):
            return float(vals[0])  # invariant symbol: average is the value itself
        val = float(np.mean(vals))
        if prev is not None and abs(val - prev) <= tol * (abs(val) + 1.0):
            return val
        prev = val
        n *= 2
    return prev


def sigma_c_integral(model: RevolutionSurface, c: float, b, potential=None) -> float:
    """Level-set integral of the orbit-averaged symbol against the thin-shell measure.

    Computes the sum over momentum branches of <b>(s, +-sqrt(c-V), 0) weighted
    by half the density 1/sqrt(c - V); b = None means the constant 1, in which
    case this is exactly the reduced volume (same code path).
    """
    if b is None:
        weight = lambda s, u: 1.0
    else:
        def weight(s, u):
            up = averaged_symbol(b, (s, u, 0.0))
            dn = averaged_symbol(b, (s, -u, 0.0))
            return 0.5 * (up + dn)

    return _level_integral(model, c, weight, potential)


def thin_shell_measure(model: RevolutionSurface, c: float, eps: float, f, potential=None) -> float:
    """Shell average (1/eps) * integral of f over {c <= sigma^2 + V <= c + eps}.

    Independent 2D quadrature over (s, sigma): per s the shell occupies one or
    two sigma-bands with exactly known endpoints, integrated by fixed
    Gauss-Legendre; the s-integral is adaptive with breakpoints at all
    turning points of the two bounding levels.  This is the measure-defining
    construction and the oracle for every 1D level-set quadrature.
    """
    if eps <= 0:
        raise ValueError("shell width eps must be positive")
    v = _as_potential(model, potential)
    for level in (c, c + eps):
        level_set(model, level, potential)  # regularity check across the shell
    surf_hi = level_set(model, c + eps, potential)
    if not surf_hi.intervals:
        raise ZeroShell(f"the shell [{c}, {c + eps}] contains no phase-space volume")

    def band_integral(s):
        pot = float(v(s))
        hi2 = c + eps - pot
        if hi2 <= 0.0:
            return 0.0
        lo2 = max(c - pot, 0.0)
        hi_r, lo_r = math.sqrt(hi2), math.sqrt(lo2)
        total = 0.0
        if lo_r == 0.0:
            bands = [(-hi_r, hi_r)]
        else:
            bands = [(lo_r, hi_r), (-hi_r, -lo_r)]
        for a, bnd in bands:
            half = 0.5 * (bnd - a)
            mid = 0.5 * (a + bnd)
            sig = mid + half * _GL_NODES_32
            total += float(np.sum(_GL_WEIGHTS_32 * np.asarray(f(s, sig), dtype=float))) * half
        return total

    points = sorted(set(surf_hi.turning_points) | set(level_set(model, c, potential).turning_points))
    val, _ = quad(
        band_integral,
        0.0,
        model.length,
        points=points or None,
        limit=400,
        epsabs=1e-11,
        epsrel=1e-11,
    )
    return val / eps


def omega_weighted_integral(model: RevolutionSurface, b, rho, potential=None) -> float:
    """Phase-space integral of <b>(s, sigma, 0) * rho(sigma^2 + V) over (s, sigma).

    ``rho`` needs a compact ``support`` attribute; its ``breakpoints`` (if
    any) split the sigma-bands so steep mollifier shoulders stay resolved.
    This is the right-hand side of the smoothed trace comparison.
    """
    v = _as_potential(model, potential)
    r_lo, r_hi = rho.support
    breaks = sorted(set(getattr(rho, "breakpoints", ()) or (r_lo, r_hi)))

    def band_integral(s):
        pot = float(v(s))
        hi2 = r_hi - pot
        if hi2 <= 0.0:
            return 0.0
        lo2 = max(r_lo - pot, 0.0)
        cuts = [math.sqrt(lo2), math.sqrt(hi2)]
        for e in breaks:
            t = e - pot
            if lo2 < t < hi2:
                cuts.append(math.sqrt(t))
        cuts = sorted(set(cuts))
        total = 0.0
        for a, bnd in zip(cuts[:-1], cuts[1:]):
            for lo_s, hi_s in ((a, bnd), (-bnd, -a)):
                half = 0.5 * (hi_s - lo_s)
                if half <= 0:
                    continue
                mid = 0.5 * (lo_s + hi_s)
                sig = mid + half * _GL_NODES_32
                if b is None:
                    avg = np.ones_like(sig)
                else:
                    avg = np.array([averaged_symbol(b, (s, sg, 0.0)) for sg in sig])
                total += float(np.sum(_GL_WEIGHTS_32 * avg * rho(sig * sig + pot))) * half
        return total

    # breakpoints in s: where V crosses any energy breakpoint of rho
    s = np.linspace(0.0, model.length, 2049)
    pts = set()
    vv = np.asarray(v(s), dtype=float)
    for e in breaks:
        d = vv - e
        for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
            pts.add(brentq(lambda t: float(v(t)) - e, s[i], s[i + 1], xtol=1e-12))
    val, _ = quad(
        band_integral,
        0.0,
        model.length,
        points=sorted(pts) or None,
        limit=400,
        epsabs=1e-11,
        epsrel=1e-11,
    )
    return val
