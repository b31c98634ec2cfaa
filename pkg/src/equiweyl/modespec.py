"""Per-mode spectra of P(h) = -h^2*Laplacian + V on surfaces of revolution.

Separation of variables in the symmetry angle turns the operator, restricted
to the Fourier mode e^{i k phi}, into the radial Sturm-Liouville problem

    -h^2 (a u')'/a + (h^2 k^2 / a^2 + V) u = E u      on (0, L),

discretized here by conservative flux differencing on a grid adapted to the
boundary type and symmetrized by the similarity weight sqrt(a).  Exact
backends (round sphere, flat torus) provide closed-form spectra and
eigenfunctions for oracle tests and fast asymptotic sweeps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import cyclic
from .errors import (
    GridTooCoarse,
    MissingEigenvector,
    NoExactBackend,
    SpectrumCapExceeded,
)
from .geometry import TWO_PI, Boundary, RevolutionSurface

#: absolute bisection tolerance for eigenvalues
EIG_TOL = 1e-12

#: default grid size for eigenvectors of exact backends
EXACT_GRID_N = 2048


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Radial grid adapted to the boundary type.

    Pole models use the midpoint-shifted grid s_i = (i - 1/2) * spacing,
    i = 1..N, which keeps every node strictly interior and lets the flux
    coefficient a(0) = a(L) = 0 absorb the boundary condition.  Periodic
    models use s_i = i * spacing with cyclic wraparound.  ``measure`` holds
    the quadrature weights 2*pi*a(s_i)*spacing of the surface measure.
    """

    boundary: Boundary
    length: float
    count: int
    spacing: float
    nodes: np.ndarray
    measure: np.ndarray

    @classmethod
    def for_model(cls, model: RevolutionSurface, n: int) -> "ModeGrid":
        if n < 16:
            raise ValueError("mode grids need at least 16 interior points")
        dx = model.length / n
        if model.boundary is Boundary.POLES:
            nodes = (np.arange(1, n + 1) - 0.5) * dx
        else:
            nodes = np.arange(1, n + 1) * dx
        a = np.asarray(model.profile(nodes), dtype=float)
        return cls(model.boundary, model.length, n, dx, nodes, TWO_PI * a * dx)


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Symmetrized radial operator for one (k, h) mode.

    ``diag``/``offdiag`` hold the symmetric tridiagonal entries after the
    sqrt(a) similarity transform; ``corner`` is the cyclic coupling for
    periodic grids (None for pole models).  ``a_nodes`` keeps the profile
    samples needed to undo the similarity transform on eigenvectors.
    """

    k: int
    h: float
    diag: np.ndarray
    offdiag: np.ndarray
    corner: float | None
    grid: ModeGrid
    a_nodes: np.ndarray
    notes: tuple[str, ...] = ()

    def gershgorin_lower(self) -> float:
        radius = np.zeros_like(self.diag)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        if self.corner is not None:
            radius[0] += abs(self.corner)
            radius[-1] += abs(self.corner)
        return float(np.min(self.diag - radius))


@dataclass(frozen=True, eq=False)
class EigenRecord:
    """One eigenpair of a mode operator.

    ``vector`` samples the radial eigenfunction on ``grid.nodes`` and is
    normalized so that sum(|u|^2 * grid.measure) = 1; it may be None for
    counting-only records.  ``index`` is the position within the mode,
    ascending in energy.
    """

    energy: float
    k: int
    h: float
    index: int
    provenance: str            # "exact" | "fd"
    vector: np.ndarray | None
    grid: ModeGrid | None


def assemble_mode_operator(
    model: RevolutionSurface,
    k: int,
    h: float,
    grid: ModeGrid,
    e_max_hint: float | None = None,
) -> ModeOperator:
    """Discretize the radial operator of mode k at semiclassical parameter h.

    The second-order flux form -(a u')'/a evaluates a at the midpoints
    between nodes; the sqrt(a) similarity transform then yields an exactly
    symmetric matrix whose kinetic part is positive semidefinite, so the
    spectrum is bounded below by min V up to O(h^2) curvature terms.
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    if grid.boundary is not model.boundary:
        raise ValueError("grid boundary type does not match the model")
    n, dx = grid.count, grid.spacing
    s = grid.nodes
    a = np.asarray(model.profile(s), dtype=float)
    v = np.asarray(model.potential(s), dtype=float)
    scale = h * h / (dx * dx)
    if model.boundary is Boundary.POLES:
        # midpoints i*dx, i = 0..N; the end values vanish at the poles
        amid = np.asarray(model.profile(np.arange(n + 1) * dx), dtype=float)
        amid[0] = 0.0
        amid[-1] = 0.0
        diag = scale * (amid[1:] + amid[:-1]) / a + (h * k / a) ** 2 + v
        off = -scale * amid[1:n] / np.sqrt(a[:-1] * a[1:])
        corner = None
    else:
        # midpoints above each node, wrapped into [0, L) by periodicity
        mids = np.mod((np.arange(1, n + 1) + 0.5) * dx, model.length)
        amid = np.asarray(model.profile(mids), dtype=float)
        alo = np.roll(amid, 1)  # midpoint below node i is midpoint above node i-1
        diag = scale * (amid + alo) / a + (h * k / a) ** 2 + v
        off = -scale * amid[:-1] / np.sqrt(a[:-1] * a[1:])
        corner = float(-scale * amid[-1] / np.sqrt(a[-1] * a[0]))
    notes = ()
    if k != 0 and model.boundary is Boundary.POLES:
        barrier = (h * k / a) ** 2 + v
        e_ref = e_max_hint if e_max_hint is not None else float(np.min(barrier))
        allowed = np.nonzero(barrier <= e_ref + 1e-12)[0]
        if allowed.size:
            # the allowed node closest to either pole
            idx = allowed[0] if allowed[0] <= n - 1 - allowed[-1] else allowed[-1]
            if dx > a[idx] / (4.0 * abs(k)):
                msg = (
                    f"grid too coarse for the k={k} centrifugal barrier: "
                    f"spacing {dx:.3e} > a/(4|k|) = {a[idx] / (4 * abs(k)):.3e} "
                    f"at the innermost allowed node"
                )
                warnings.warn(msg, GridTooCoarse, stacklevel=2)
                notes = (msg,)
    return ModeOperator(int(k), float(h), diag, off, corner, grid, a, notes)


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(u)))
    return -u if u[i] < 0 else u


def _record_from_vector(op: ModeOperator, energy: float, w: np.ndarray, j: int) -> EigenRecord:
    u = w / np.sqrt(op.a_nodes)
    u = u / math.sqrt(float(np.sum(u * u * op.grid.measure)))
    return EigenRecord(float(energy), op.k, op.h, j, "fd", _canonical_sign(u), op.grid)


def solve_modes(op: ModeOperator, e_max: float, cap: int = 200_000,
                with_vectors: bool = True) -> list[EigenRecord]:
    """All eigenpairs of the mode operator with energy <= e_max, ascending.

    Pole modes delegate to LAPACK's Sturm-sequence bisection plus inverse
    iteration (stebz/stein); periodic modes use the cyclic bisection solver
    from :mod:`equiweyl.cyclic`.  Eigenvectors are mapped back through the
    similarity transform and normalized against the surface measure.
    """
    if not math.isfinite(e_max):
        raise ValueError("e_max must be finite")
    lo = op.gershgorin_lower() - 1.0
    if e_max < lo:
        return []
    if op.corner is None:
        if with_vectors:
            w, vec = eigh_tridiagonal(
                op.diag, op.offdiag, select="v", select_range=(lo, e_max), tol=EIG_TOL
            )
        else:
            w = eigh_tridiagonal(
                op.diag, op.offdiag, select="v", select_range=(lo, e_max),
                tol=EIG_TOL, eigvals_only=True,
            )
            vec = None
    else:
        w = cyclic.eigvals_below(op.diag, op.offdiag, op.corner, e_max, tol=EIG_TOL)
        if w.size > cap:
            raise SpectrumCapExceeded(f"{w.size} eigenvalues requested, cap is {cap}")
        vec = (
            cyclic.eigvecs(op.diag, op.offdiag, op.corner, w, seed=op.k & 0x7FFF)
            if with_vectors and w.size
            else None
        )
    if w.size > cap:
        raise SpectrumCapExceeded(f"{w.size} eigenvalues requested, cap is {cap}")
    order = list(np.argsort(w, kind="stable"))
    if with_vectors:
        # exact ties ordered by ascending node count of the eigenvector
        order.sort(key=lambda i: (w[i], _node_count(vec[:, i])))
    records = []
    for j, idx in enumerate(order):
        if with_vectors:
            records.append(_record_from_vector(op, w[idx], vec[:, idx], j))
        else:
            records.append(EigenRecord(float(w[idx]), op.k, op.h, j, "fd", None, op.grid))
    return records


def _node_count(u: np.ndarray) -> int:
    signs = np.sign(u[np.abs(u) > 1e-9 * np.max(np.abs(u))])
    return int(np.count_nonzero(np.diff(signs)))


# ---------------------------------------------------------------------------
# exact backends
# ---------------------------------------------------------------------------

def legendre_normalized(l_max: int, m: int, x: np.ndarray) -> np.ndarray:
    """Fully normalized associated Legendre functions, rows l = m..l_max.

    Upward three-term recurrence in l at fixed order m >= 0, which is the
    numerically stable direction; the normalization keeps all values O(1)
    so the sweep is safe up to very large degrees.
    """
    x = np.asarray(x, dtype=float)
    rows = l_max - m + 1
    out = np.empty((rows, x.size))
    pmm = np.full(x.shape, 1.0 / math.sqrt(4.0 * math.pi))
    sx = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    for mm in range(1, m + 1):
        pmm = -math.sqrt((2.0 * mm + 1.0) / (2.0 * mm)) * sx * pmm
    out[0] = pmm
    if rows > 1:
        out[1] = math.sqrt(2.0 * m + 3.0) * x * pmm
    for l in range(m + 2, l_max + 1):
        c1 = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        c2 = math.sqrt(
            ((2.0 * l + 1.0) * (l - 1.0 - m) * (l - 1.0 + m))
            / ((2.0 * l - 3.0) * (l * l - m * m))
        )
        out[l - m] = c1 * x * out[l - m - 1] - c2 * out[l - m - 2]
    return out


def sphere_level_range(h: float, e_lo: float, e_hi: float, l_min: int = 0):
    """Integer range [l_lo, l_hi] with h^2*l*(l+1) in [e_lo, e_hi] and l >= l_min."""
    if e_hi < e_lo:
        return 0, -1
    t = e_hi / (h * h)
    l_hi = int(math.floor((-1.0 + math.sqrt(1.0 + 4.0 * t)) / 2.0)) + 1
    while l_hi >= 0 and l_hi * (l_hi + 1.0) * h * h > e_hi:
        l_hi -= 1
    t = max(e_lo, 0.0) / (h * h)
    l_lo = max(int(math.floor((-1.0 + math.sqrt(1.0 + 4.0 * t)) / 2.0)) - 1, 0)
    while l_lo * (l_lo + 1.0) * h * h < e_lo:
        l_lo += 1
    return max(l_lo, l_min), l_hi


def sphere_cos2_expectation(l, k):
    """Closed-form expectation of cos^2(s) in the (l, k) spherical mode.

    Follows from cos^2 = (1 + 2 P_2(cos))/3 and the standard P_2 moment of
    the normalized modes; cross-checked against grid quadrature in tests.
    """
    l = np.asarray(l, dtype=float)
    return 1.0 / 3.0 + (2.0 / 3.0) * (l * (l + 1.0) - 3.0 * float(k) ** 2) / (
        (2.0 * l - 1.0) * (2.0 * l + 3.0)
    )


def flat_torus_modes(k: int, h: float, e_max: float, e_min: float | None = None):
    """Mode labels m and energies h^2(k^2+m^2) of the flat torus, ascending.

    Labels follow the convention m > 0 for the cosine branch and m < 0 for
    the sine branch of the doubly degenerate levels.
    """
    rem = e_max / (h * h) - k * k
    if rem < 0.0:
        return np.zeros(0, dtype=int), np.zeros(0)
    m_hi = int(math.floor(math.sqrt(rem)))
    while (k * k + m_hi * m_hi) * h * h > e_max:
        m_hi -= 1
    ms = np.arange(-m_hi, m_hi + 1) if m_hi >= 0 else np.zeros(0, dtype=int)
    energies = (k * k + ms.astype(float) ** 2) * h * h
    if e_min is not None:
        keep = energies >= e_min
        ms, energies = ms[keep], energies[keep]
    order = np.lexsort((ms, energies))
    return ms[order], energies[order]


def exact_spectrum(
    model: RevolutionSurface,
    k: int,
    h: float,
    e_max: float,
    grid: ModeGrid | None = None,
    with_vectors: bool = True,
    e_min: float | None = None,
) -> list[EigenRecord]:
    """Closed-form eigenpairs of mode k with energy <= e_max (>= e_min if given).

    Sphere: E = h^2*l*(l+1) for l >= |k| with normalized-Legendre radial
    profiles.  Flat torus: E = h^2*(k^2 + m^2) with Fourier profiles, one
    record per integer label m.
    """
    if model.exact_backend is None:
        raise NoExactBackend(f"model {model.name!r} has no exact backend")
    if grid is None and with_vectors:
        grid = ModeGrid.for_model(model, EXACT_GRID_N)
    records: list[EigenRecord] = []
    if model.exact_backend == "sphere":
        l_lo, l_hi = sphere_level_range(h, 0.0 if e_min is None else e_min, e_max, abs(k))
        if l_hi < l_lo:
            return []
        if with_vectors:
            x = np.cos(grid.nodes)
            bars = legendre_normalized(l_hi, abs(k), x)
        for j, l in enumerate(range(l_lo, l_hi + 1)):
            energy = h * h * l * (l + 1.0)
            vector = None
            if with_vectors:
                u = bars[l - abs(k)]
                u = u / math.sqrt(float(np.sum(u * u * grid.measure)))
                vector = _canonical_sign(u)
            records.append(EigenRecord(energy, k, h, j, "exact", vector, grid if with_vectors else None))
    elif model.exact_backend == "flat_torus":
        ms, energies = flat_torus_modes(k, h, e_max, e_min)
        for j, (m, energy) in enumerate(zip(ms, energies)):
            vector = None
            if with_vectors:
                if m == 0:
                    u = np.ones_like(grid.nodes)
                elif m > 0:
                    u = np.cos(m * grid.nodes)
                else:
                    u = np.sin(-m * grid.nodes)
                u = u / math.sqrt(float(np.sum(u * u * grid.measure)))
                vector = _canonical_sign(u)
            records.append(EigenRecord(float(energy), k, h, j, "exact", vector, grid if with_vectors else None))
    else:
        raise NoExactBackend(f"unhandled exact backend {model.exact_backend!r}")
    return records


def observable_expectation(rec: EigenRecord, b0=None, beta=None) -> float:
    """Expectation beta(E) * sum(b0(s_i) |u_i|^2 measure_i) in one eigenstate.

    ``b0=None`` means the identity multiplier (no eigenvector needed);
    ``beta=None`` means the constant 1 energy filter.
    """
    factor = 1.0 if beta is None else float(beta(rec.energy))
    if b0 is None:
        return factor
    if rec.vector is None or rec.grid is None:
        raise MissingEigenvector(
            f"record (k={rec.k}, j={rec.index}) has no eigenvector for a non-identity observable"
        )
    u2 = rec.vector * rec.vector
    return factor * float(np.sum(np.asarray(b0(rec.grid.nodes), dtype=float) * u2 * rec.grid.measure))
