"""Circle-symmetric model surfaces and their classical data.

Every model is a surface of revolution with metric ds^2 + a(s)^2 dphi^2,
where ``a`` is the arclength profile on [0, L] and the circle group acts by
phi-translation.  The profile, the invariant potential and the action
metadata determine both the classical Hamiltonian and the separated quantum
mode operators built in :mod:`equiweyl.modespec`.

Profile and potential callables are vectorized over numpy arrays.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidModel, UnknownModel

TWO_PI = 2.0 * math.pi

#: tolerance for the pole conditions a(0)=a(L)=0, |a'| = 1
POLE_TOL = 1e-10

SPHEROID_AXIS_RATIO = 1.5


class Boundary(str, enum.Enum):
    POLES = "poles"          # a vanishes at both ends, |a'| = 1 there
    PERIODIC = "periodic"    # a and V are L-periodic, a > 0 everywhere


@dataclass(frozen=True)
class ActionProfile:
    """Group-action metadata of a model.

    ``orbit_dim`` is the dimension of a principal orbit (always 1 for a
    circle acting on a surface), ``isotropy_chain_length`` the length of the
    longest totally ordered chain of isotropy types (2 when fixed points
    exist, else 1), and ``fixed_points`` the s-values where the orbit
    degenerates to a point.
    """

    orbit_dim: int = 1
    isotropy_chain_length: int = 1
    principal_isotropy_order: int = 1
    fixed_points: tuple[float, ...] = ()

    def __post_init__(self):
        if self.orbit_dim != 1:
            raise InvalidModel("surfaces of revolution have 1-dimensional principal orbits")
        want = 2 if self.fixed_points else 1
        if self.isotropy_chain_length != want:
            raise InvalidModel(
                "isotropy_chain_length must be 2 exactly when fixed points exist"
            )
        if self.principal_isotropy_order < 1:
            raise InvalidModel("principal_isotropy_order must be a positive integer")


@dataclass(frozen=True)
class PhasePoint:
    """Point of the phase space T*M in coordinates (s, phi, sigma, p_phi)."""

    s: float
    phi: float = 0.0
    sigma: float = 0.0
    p_phi: float = 0.0


@dataclass(frozen=True, eq=False)
class RevolutionSurface:
    name: str
    profile: Callable          # a(s), length units
    profile_deriv: Callable    # a'(s)
    length: float              # L
    boundary: Boundary
    potential: Callable        # V(s), energy units, bounded below
    exact_backend: str | None = None   # "sphere" | "flat_torus" | None
    action: ActionProfile = field(default_factory=ActionProfile)

    def validate(self, samples: int = 2000) -> None:
        """Check the structural invariants on a dense sample; raise InvalidModel."""
        L = self.length
        s = np.linspace(0.0, L, samples + 1)
        a = np.asarray(self.profile(s), dtype=float)
        v = np.asarray(self.potential(s), dtype=float)
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(v)):
            raise InvalidModel(f"{self.name}: profile or potential not finite on [0, L]")
        if np.min(a[1:-1]) <= 0.0:
            raise InvalidModel(f"{self.name}: profile must be positive on the open interior")
        if self.boundary is Boundary.POLES:
            if abs(a[0]) > POLE_TOL or abs(a[-1]) > POLE_TOL:
                raise InvalidModel(f"{self.name}: profile must vanish at both poles")
            if abs(self.profile_deriv(0.0) - 1.0) > POLE_TOL:
                raise InvalidModel(f"{self.name}: a'(0) must be +1 at a pole")
            if abs(self.profile_deriv(L) + 1.0) > POLE_TOL:
                raise InvalidModel(f"{self.name}: a'(L) must be -1 at a pole")
            if self.action.fixed_points != (0.0, L):
                raise InvalidModel(f"{self.name}: pole models fix exactly s=0 and s=L")
        else:
            if np.min(a) <= 0.0:
                raise InvalidModel(f"{self.name}: periodic profile must stay positive")
            if abs(a[0] - a[-1]) > POLE_TOL:
                raise InvalidModel(f"{self.name}: periodic profile must match at the seam")
            if self.action.fixed_points:
                raise InvalidModel(f"{self.name}: free actions have no fixed points")


class OrbitVolume(NamedTuple):
    """Orbit volume with a flag marking the counting-measure convention.

    At a fixed point the orbit is a single point and its ``value`` is the
    counting measure 1, not the vanishing circle length.
    """

    value: float
    counting: bool


def orbit_volume(model: RevolutionSurface, s: float) -> OrbitVolume:
    """Riemannian length 2*pi*a(s) of the orbit circle through s.

    Fixed points (where a vanishes) return the counting-measure value 1
    with ``counting=True``.
    """
    a = float(model.profile(s))
    at_end = s <= 0.0 or s >= model.length
    if a <= 0.0 or (model.boundary is Boundary.POLES and at_end):
        return OrbitVolume(1.0, True)
    return OrbitVolume(TWO_PI * a, False)


def hamiltonian_p(model: RevolutionSurface, pt: PhasePoint) -> float:
    """Invariant symbol sigma^2 + p_phi^2 / a(s)^2 + V(s).

    Never reads ``pt.phi``, which is the exact form of rotation invariance.
    """
    a = float(model.profile(pt.s))
    return pt.sigma**2 + pt.p_phi**2 / a**2 + float(model.potential(pt.s))


def orbit_average(f: Callable, s: float, n: int = 64, tol: float = 1e-13) -> float:
    """Average of f(s, phi) over the orbit circle by periodic trapezoid rule.

    The rule is spectrally accurate for smooth periodic integrands; the node
    count doubles until the value stabilizes to ``tol``.
    """
    prev = None
    while n <= 8192:
        phi = np.arange(n) * (TWO_PI / n)
        vals = np.broadcast_to(f(s, phi), phi.shape)
        if np.all(vals == vals[0]):
            return float(vals[0])  # orbit-invariant integrand
        val = float(np.mean(vals))
        if prev is not None and abs(val - prev) <= tol * (abs(val) + 1.0):
            return val
        prev = val
        n *= 2
    return prev


def surface_integral(model: RevolutionSurface, f: Callable) -> float:
    """Integral of f(s, phi) over the surface with its Riemannian measure a(s) ds dphi."""

    def outer(s):
        phi_avg = orbit_average(f, s)
        return TWO_PI * float(model.profile(s)) * phi_avg

    val, _ = quad(outer, 0.0, model.length, limit=200, epsabs=1e-12, epsrel=1e-12)
    return val


def fiber_integral(model: RevolutionSurface, f: Callable) -> float:
    """Same integral computed through the orbit fibration.

    Integrates 2*pi*a(s) times the orbit average of f over s; agreeing with
    :func:`surface_integral` is the fibration identity tested in the suite.
    """
    val, _ = quad(
        lambda s: TWO_PI * float(model.profile(s)) * orbit_average(f, s),
        0.0,
        model.length,
        limit=200,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    return val


# ---------------------------------------------------------------------------
# built-in catalog
# ---------------------------------------------------------------------------

def _zero_potential(s):
    return np.zeros_like(np.asarray(s, dtype=float))


def _sphere() -> RevolutionSurface:
    return RevolutionSurface(
        name="sphere",
        profile=np.sin,
        profile_deriv=np.cos,
        length=math.pi,
        boundary=Boundary.POLES,
        potential=_zero_potential,
        exact_backend="sphere",
        action=ActionProfile(1, 2, 1, (0.0, math.pi)),
    )


def _flat_torus() -> RevolutionSurface:
    return RevolutionSurface(
        name="flat_torus",
        profile=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        profile_deriv=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        length=TWO_PI,
        boundary=Boundary.PERIODIC,
        potential=_zero_potential,
        exact_backend="flat_torus",
        action=ActionProfile(1, 1, 1, ()),
    )


def _bumpy_torus() -> RevolutionSurface:
    return RevolutionSurface(
        name="bumpy_torus",
        profile=lambda s: 1.0 + 0.3 * np.cos(s),
        profile_deriv=lambda s: -0.3 * np.sin(s),
        length=TWO_PI,
        boundary=Boundary.PERIODIC,
        potential=_zero_potential,
        exact_backend=None,
        action=ActionProfile(1, 1, 1, ()),
    )


def _spheroid_reparametrization(ratio: float, knots: int = 4000):
    """Arclength reparametrization of the ellipse profile r = sin t, z = ratio*cos t.

    Returns (t_of_s spline, total length).  Cumulative arclength is computed
    by composite Gauss-Legendre quadrature per knot interval; the inverse map
    t(s) is a cubic Hermite spline with the exact derivative dt/ds = 1/g(t),
    which keeps the reparametrization accurate to ~1e-14.
    """

    def g(t):
        return np.sqrt(np.cos(t) ** 2 + ratio**2 * np.sin(t) ** 2)

    t_knots = np.linspace(0.0, math.pi, knots + 1)
    nodes, weights = np.polynomial.legendre.leggauss(12)
    mid = 0.5 * (t_knots[:-1] + t_knots[1:])
    half = 0.5 * np.diff(t_knots)
    seg = (g(mid[:, None] + half[:, None] * nodes[None, :]) * weights).sum(axis=1) * half
    s_knots = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicHermiteSpline(s_knots, t_knots, 1.0 / g(t_knots))
    return spline, g, float(s_knots[-1])


def _spheroid() -> RevolutionSurface:
    t_of_s, g, length = _spheroid_reparametrization(SPHEROID_AXIS_RATIO)

    def profile(s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, length)
        return np.sin(t_of_s(s))

    def profile_deriv(s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, length)
        t = t_of_s(s)
        return np.cos(t) / g(t)

    return RevolutionSurface(
        name="spheroid",
        profile=profile,
        profile_deriv=profile_deriv,
        length=length,
        boundary=Boundary.POLES,
        potential=_zero_potential,
        exact_backend=None,
        action=ActionProfile(1, 2, 1, (0.0, length)),
    )


_BUILDERS = {
    "sphere": _sphere,
    "flat_torus": _flat_torus,
    "bumpy_torus": _bumpy_torus,
    "spheroid": _spheroid,
}


def catalog_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILDERS))


@lru_cache(maxsize=None)
def builtin_model(name: str) -> RevolutionSurface:
    """Return a validated built-in model by name.

    Known names: sphere, flat_torus, bumpy_torus, spheroid.  The spheroid
    profile is reparametrized once and cached with the model.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(catalog_names())}") from None
    model = builder()
    model.validate()
    return model


def model_document(model: RevolutionSurface, samples: int = 129) -> dict:
    """JSON-serializable catalog entry with profile/potential samples."""
    s = np.linspace(0.0, model.length, samples)
    return {
        "name": model.name,
        "length": model.length,
        "boundary": model.boundary.value,
        "exact_backend": model.exact_backend,
        "s": s.tolist(),
        "profile": np.asarray(model.profile(s), dtype=float).tolist(),
        "potential": np.asarray(model.potential(s), dtype=float).tolist(),
        "action": {
            "orbit_dim": model.action.orbit_dim,
            "isotropy_chain_length": model.action.isotropy_chain_length,
            "principal_isotropy_order": model.action.principal_isotropy_order,
            "fixed_points": list(model.action.fixed_points),
        },
    }


def catalog_json(samples: int = 129) -> str:
    docs = [model_document(builtin_model(n), samples) for n in catalog_names()]
    return json.dumps({"models": docs}, indent=2)
