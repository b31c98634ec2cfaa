"""Left/right-hand sides of the symmetry-reduced eigenvalue asymptotics.

Everything here compares a spectral sum over one shrinking energy window
[c, c + h^delta] (or a smoothed trace) against the corresponding reduced
phase-space integral, and fits empirical convergence rates over h-sweeps.
Dimensional bookkeeping is specialized to surfaces of revolution: surface
dimension 2, orbit dimension 1, so every prefactor carries (2*pi)^1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSpectrum
from .modespec import observable_expectation
from .peterweyl import Character, CharacterFamily, SpectrumTable, family_at

#: surface dimension minus orbit dimension (n - kappa)
CODIM = 1

KAPPA = 1


def theorem_delta_bound(kappa: int = KAPPA) -> float:
    """Largest admissible window exponent, 1/(2*kappa + 4)."""
    return 1.0 / (2 * kappa + 4)


def theorem_theta_bound(delta: float, kappa: int = KAPPA) -> float:
    """Largest admissible family growth rate for a window exponent delta."""
    return (1.0 - (2 * kappa + 4) * delta) / (2 * kappa + 3)


def predicted_remainder_exponent(delta: float, theta: float = 0.0, kappa: int = KAPPA) -> float:
    """Smaller of the two remainder exponents, min(delta, (1-(2k+3)theta)/(2k+4) - delta)."""
    return min(delta, (1.0 - (2 * kappa + 3) * theta) / (2 * kappa + 4) - delta)


@dataclass(frozen=True)
class SpectralWindow:
    """Energy window [c, c + h^delta] around a regular value c."""

    c: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("window exponent delta must be positive")

    def interval(self, h: float) -> tuple[float, float]:
        return self.c, self.c + h**self.delta

    def is_theorem_mode(self, kappa: int = KAPPA) -> bool:
        return 0.0 < self.delta < theorem_delta_bound(kappa)


def _coverage_guard(table: SpectrumTable, needed: float, h: float, what: str) -> None:
    if table.coverage is None:
        raise InsufficientSpectrum(
            f"{what}: spectrum table carries no coverage bound; "
            "build it with an explicit coverage energy"
        )
    if table.coverage < needed:
        raise InsufficientSpectrum(
            f"{what}: window needs spectrum through E = {needed:.6g} at h = {h:.3e} "
            f"but the table only covers E <= {table.coverage:.6g}"
        )


def required_coverage(window: SpectralWindow, h: float, theta: float = 0.0) -> float:
    """Window top plus the mollifier-shoulder safety margin 3 h^lambda h^delta."""
    lam = max(predicted_remainder_exponent(window.delta, theta), 0.05)
    return window.c + h**window.delta * (1.0 + 3.0 * h**lam)


def window_observable_sum(table: SpectrumTable, ks, window: SpectralWindow, h: float,
                          b0=None, beta=None):
    """Sum of per-eigenfunction expectations over the window, for modes in ks.

    Returns (total, count); records are visited in deterministic (k, index)
    order so float accumulation is reproducible.
    """
    lo, hi = window.interval(h)
    ks = set(ks)
    total = 0.0
    count = 0
    for rec in sorted(table.records, key=lambda r: (r.k, r.index)):
        if rec.k in ks and lo <= rec.energy <= hi:
            total += observable_expectation(rec, b0, beta)
            count += 1
    return total, count


def weyl_lhs_single(table: SpectrumTable, char: Character, window: SpectralWindow,
                    h: float, b0=None, beta=None) -> float:
    """Windowed expectation sum of one isotypic mode, semiclassically normalized.

    (2 pi) h^(1 - delta) * sum over eigenfunctions of mode k with energy in
    the window, divided by dim * isotropy multiplicity of the character.
    """
    _coverage_guard(table, required_coverage(window, h), h, "single-mode window sum")
    total, _ = window_observable_sum(table, (char.k,), window, h, b0, beta)
    pref = (2.0 * math.pi) ** CODIM * h ** (CODIM - window.delta)
    return pref * total / (char.dim * char.isotropy_mult)


def weyl_lhs_family(table: SpectrumTable, fam: CharacterFamily, window: SpectralWindow,
                    h: float, b0=None, beta=None) -> float:
    """Family-averaged windowed expectation sum.

    Same normalization as the single-mode form with an extra 1/#W_h average;
    a one-element fixed family reproduces the single-mode value bitwise.
    """
    chars = family_at(fam, h)
    _coverage_guard(table, required_coverage(window, h, fam.theta), h, "family window sum")
    pref = (2.0 * math.pi) ** CODIM * h ** (CODIM - window.delta)
    total = 0.0
    for char in chars:
        part, _ = window_observable_sum(table, (char.k,), window, h, b0, beta)
        total += part / (char.dim * char.isotropy_mult)
    return pref * total / len(chars)


def counting_lhs(table: SpectrumTable, fam: CharacterFamily, window: SpectralWindow,
                 h: float) -> float:
    """Multiplicity-form window count from the clustered eigenspace index.

    Under the repeated-eigenvalue convention the sum of mult/dim over
    repeated eigenvalues telescopes to the plain multiplicity sum, so this
    equals the identity-observable expectation form exactly.
    """
    chars = family_at(fam, h)
    _coverage_guard(table, required_coverage(window, h, fam.theta), h, "counting window sum")
    lo, hi = window.interval(h)
    pref = (2.0 * math.pi) ** CODIM * h ** (CODIM - window.delta)
    by_k = {c.k: c for c in chars}
    total = 0.0
    for cluster in table.clusters:
        if lo <= cluster.energy <= hi:
            for k in sorted(cluster.mult):
                char = by_k.get(k)
                if char is not None:
                    total += cluster.mult[k] / (char.dim * char.isotropy_mult)
    return pref * total / len(chars)


def trace_lhs(table: SpectrumTable, fam: CharacterFamily, rho, h: float,
              b0=None, beta=None) -> float:
    """Smoothed spectral trace (2 pi h) / #W_h * sum rho(E_j) <B u_j, u_j> / (dim * iso).

    ``rho`` must be supported inside the table's spectral coverage.
    """
    chars = family_at(fam, h)
    if table.coverage is None or rho.support[1] > table.coverage:
        raise InsufficientSpectrum(
            f"trace needs spectrum through E = {rho.support[1]:.6g}, "
            f"table covers {table.coverage!r}"
        )
    total = 0.0
    for char in chars:
        part = 0.0
        for rec in sorted((r for r in table.records if r.k == char.k),
                          key=lambda r: r.index):
            weight = float(rho(rec.energy))
            if weight != 0.0:
                part += weight * observable_expectation(rec, b0, beta)
        total += part / (char.dim * char.isotropy_mult)
    return (2.0 * math.pi * h) ** CODIM * total / len(chars)


@dataclass(frozen=True)
class WeylReport:
    """Per-h comparison of a spectral sum against its leading term, with rate fits."""

    theorem: str
    model: str
    rows: tuple          # (h, lhs, leading, abs_error) tuples, h strictly decreasing
    slope: float
    slope_stderr: float
    slope_logcorrected: float | None
    predicted_exponent: float | None
    passed: bool
    params: dict = field(default_factory=dict)

    @property
    def final_abs_error(self) -> float:
        return self.rows[-1][3]

    @property
    def final_rel_error(self) -> float:
        lead = self.rows[-1][2]
        return self.rows[-1][3] / abs(lead) if lead else math.inf


def _fit_slope(hs, errs):
    x = np.log(hs)
    y = np.log(errs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(hs) - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if sxx > 0 else math.inf
    return float(slope), float(stderr)


def compare_and_fit(
    h_list,
    lhs_list,
    leading: float,
    *,
    theorem: str = "",
    model: str = "",
    delta: float | None = None,
    theta: float = 0.0,
    kappa: int = KAPPA,
    chain_length: int = 1,
    final_rel_tol: float | None = None,
) -> WeylReport:
    """Fit log|error| against log h and assemble a WeylReport.

    Needs at least 4 h-values spanning two decades.  With chain_length 2 the
    remainder carries a log factor, so a log-corrected slope (errors divided
    by log(1/h)^(chain_length-1) before fitting) is reported alongside the
    raw one; acceptance keys on the raw slope sign, since log factors are
    indistinguishable from small slope shifts over a few decades.
    Exact agreement (a zero error) reports the +inf sentinel slope.
    """
    hs = np.asarray(list(h_list), dtype=float)
    lhs = np.asarray(list(lhs_list), dtype=float)
    if hs.size < 4 or hs[0] / hs[-1] < 99.0:
        raise ValueError("rate fits need >= 4 h-values spanning >= 2 decades")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("h values must be strictly decreasing")
    errs = np.abs(lhs - leading)
    pred = predicted_remainder_exponent(delta, theta, kappa) if delta is not None else None
    if np.any(errs <= 0.0):
        slope, stderr, slope_log = math.inf, 0.0, math.inf
    else:
        slope, stderr = _fit_slope(hs, errs)
        if chain_length > 1:
            corrected = errs / np.log(1.0 / hs) ** (chain_length - 1)
            slope_log, _ = _fit_slope(hs, corrected)
        else:
            slope_log = None
    rows = tuple((float(h), float(v), float(leading), float(e)) for h, v, e in zip(hs, lhs, errs))
    passed = slope > 0.0
    if final_rel_tol is not None and leading != 0.0:
        passed = passed and (errs[-1] / abs(leading) <= final_rel_tol)
    return WeylReport(
        theorem=theorem,
        model=model,
        rows=rows,
        slope=slope,
        slope_stderr=stderr,
        slope_logcorrected=slope_log,
        predicted_exponent=pred,
        passed=bool(passed),
        params={"delta": delta, "theta": theta, "kappa": kappa, "chain_length": chain_length},
    )
