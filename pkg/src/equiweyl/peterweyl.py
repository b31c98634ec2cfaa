"""Character bookkeeping for the circle group acting on model surfaces.

Irreducible characters are indexed by integers k; an h-dependent family of
characters selects which Fourier modes enter a symmetry-resolved eigenvalue
count, and its growth rate controls how fast the selection may widen as the
semiclassical parameter shrinks.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import MixedParameters
from .modespec import EigenRecord

#: default relative clustering gap for exact backends
EXACT_CLUSTER_TOL = 1e-9


@dataclass(frozen=True)
class Character:
    """Circle character e^{i phi} -> e^{i k phi}; dim and isotropy data kept explicit."""

    k: int
    dim: int = 1
    isotropy_mult: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.isotropy_mult < 1:
            raise ValueError("characters occurring in L^2 have dim >= 1 and isotropy_mult >= 1")


@dataclass(frozen=True)
class CharacterFamily:
    """Either a fixed set of characters or the power-law window |k| <= h^(-theta).

    Fixed families have growth rate 0 by convention; power-law families carry
    their declared rate ``theta``.
    """

    fixed: tuple[int, ...] | None
    theta: float

    @classmethod
    def fixed_set(cls, ks) -> "CharacterFamily":
        ks = tuple(sorted(set(int(k) for k in ks)))
        if not ks:
            raise ValueError("fixed character families must be nonempty")
        return cls(ks, 0.0)

    @classmethod
    def power_law(cls, theta: float) -> "CharacterFamily":
        if theta < 0:
            raise ValueError("growth rate must be nonnegative")
        return cls(None, float(theta))

    @property
    def kind(self) -> str:
        return "fixed" if self.fixed is not None else "power_law"


def family_at(fam: CharacterFamily, h: float) -> tuple[Character, ...]:
    """Characters selected at parameter h, ordered by k.

    The power-law window is inclusive, |k| <= floor(h^(-theta)); the floor is
    nudged by one part in 2^50 so representable integer boundaries stay
    inclusive under float rounding.  The window always contains k = 0.
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    if fam.fixed is not None:
        return tuple(Character(k) for k in fam.fixed)
    cut = h ** (-fam.theta)
    kmax = int(math.floor(cut * (1.0 + 2.0**-50)))
    return tuple(Character(k) for k in range(-kmax, kmax + 1))


def growth_rate_estimate(fam: CharacterFamily, order: int, h_list) -> np.ndarray:
    """Empirical derivative-growth ratios r(h) for the family.

    For the circle the order-N derivative sup of a character is |k|^N, so
    r(h) = h^(theta*N) * mean over the window of |k|^N / isotropy_mult.
    Boundedness of r over an h-sweep certifies the declared growth rate.
    """
    if order > 6:
        raise ValueError("derivative order capped at 6")
    out = []
    for h in h_list:
        chars = family_at(fam, h)
        mean = float(np.mean([abs(c.k) ** order / c.isotropy_mult for c in chars]))
        out.append(h ** (fam.theta * order) * mean)
    return np.asarray(out)


@dataclass(frozen=True, eq=False)
class EigenCluster:
    energy: float              # representative (lowest) energy in the cluster
    dim: int                   # number of eigenfunctions in the cluster
    mult: dict                 # character index k -> multiplicity


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """Eigenrecords of one h across modes, with the clustered eigenspace index.

    ``coverage`` is the energy up to which the spectrum is complete; window
    sums refuse to run past it.
    """

    h: float
    records: tuple[EigenRecord, ...]
    clusters: tuple[EigenCluster, ...]
    coverage: float | None = None


def multiplicity_table(
    records,
    eps_cluster: float = EXACT_CLUSTER_TOL,
    coverage: float | None = None,
) -> SpectrumTable:
    """Cluster eigenrecords of one h into eigenspaces and tabulate multiplicities.

    Neighbors merge when their gap is below eps_cluster * max(1, |E|), which
    re-joins degeneracies split by discretization error.  Sum over k of the
    per-character multiplicities equals the cluster dimension by construction.
    """
    records = tuple(records)
    if not records:
        return SpectrumTable(float("nan"), (), (), coverage)
    hs = {r.h for r in records}
    if len(hs) != 1:
        raise MixedParameters(f"records mix h values: {sorted(hs)}")
    (h,) = hs
    order = sorted(range(len(records)), key=lambda i: (records[i].energy, records[i].k))
    clusters: list[EigenCluster] = []
    current: list[EigenRecord] = []

    def flush():
        if not current:
            return
        mult: dict[int, int] = {}
        for r in current:
            mult[r.k] = mult.get(r.k, 0) + 1
        clusters.append(EigenCluster(current[0].energy, len(current), mult))

    prev_e = None
    for i in order:
        r = records[i]
        if prev_e is not None:
            gap = r.energy - prev_e
            if gap > eps_cluster * max(1.0, abs(r.energy), abs(prev_e)):
                flush()
                current = []
        current.append(r)
        prev_e = r.energy
    flush()
    return SpectrumTable(h, records, tuple(clusters), coverage)


def multiplicity_csv(table: SpectrumTable) -> str:
    """CSV export with one row per (cluster, character): E, dim, k, mult."""
    buf = io.StringIO()
    buf.write("E,dim,k,mult\n")
    for cl in table.clusters:
        for k in sorted(cl.mult):
            buf.write(f"{cl.energy:.17g},{cl.dim},{k},{cl.mult[k]}\n")
    return buf.getvalue()
