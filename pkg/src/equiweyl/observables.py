"""Fixed named catalog of observables, energy filters, traces and potentials.

Experiments reference observables by id rather than by arbitrary runtime
expressions, which keeps runs reproducible and lets exact backends supply
closed-form expectations where they exist.
"""

from __future__ import annotations

import numpy as np

from . import mollify
from .errors import UnknownObservable
from .modespec import sphere_cos2_expectation


def _cos2(s):
    return np.cos(np.asarray(s, dtype=float)) ** 2


def _zero(s):
    return np.zeros_like(np.asarray(s, dtype=float))


#: multiplication observables b0(s); None is the identity operator
B0_CATALOG = {
    "one": None,
    "cos2": _cos2,
    "zero": _zero,
}

#: energy filters beta(E); None is the constant 1
BETA_CATALOG = {
    "one": None,
    "energy": lambda e: np.asarray(e, dtype=float),
}

#: smoothed trace windows rho(E)
_RHO_BUILDERS = {
    "bump_05_15": lambda: mollify.bump(1.0, 0.5, 1.0),      # unit bump on [0.5, 1.5]
    "bump_quarter": lambda: mollify.bump(1.0, 0.25, 1.0),
    "bump_wide": lambda: mollify.bump(1.25, 0.75, 1.0),
}

#: named potentials V(s) for the reduced-volume tooling
POTENTIAL_CATALOG = {
    "zero": None,                                            # fall back to the model potential
    "cos_well": lambda s: 0.5 * (1.0 - np.cos(np.asarray(s, dtype=float))),
}

#: closed-form sphere-mode expectations, by b0 id: f(l, k) vectorized over l
SPHERE_EXACT_EXPECTATION = {
    "one": lambda l, k: np.ones_like(np.asarray(l, dtype=float)),
    "zero": lambda l, k: np.zeros_like(np.asarray(l, dtype=float)),
    "cos2": sphere_cos2_expectation,
}


def get_b0(name: str):
    try:
        return B0_CATALOG[name]
    except KeyError:
        raise UnknownObservable(f"unknown b0 observable {name!r}; known: {sorted(B0_CATALOG)}") from None


def get_beta(name: str):
    try:
        return BETA_CATALOG[name]
    except KeyError:
        raise UnknownObservable(f"unknown beta filter {name!r}; known: {sorted(BETA_CATALOG)}") from None


def get_rho(name: str) -> mollify.TestFunction:
    try:
        return _RHO_BUILDERS[name]()
    except KeyError:
        raise UnknownObservable(f"unknown rho window {name!r}; known: {sorted(_RHO_BUILDERS)}") from None


def get_potential(name: str):
    try:
        return POTENTIAL_CATALOG[name]
    except KeyError:
        raise UnknownObservable(
            f"unknown potential {name!r}; known: {sorted(POTENTIAL_CATALOG)}"
        ) from None


def rho_names():
    return tuple(sorted(_RHO_BUILDERS))
