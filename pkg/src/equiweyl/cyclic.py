"""Eigenpairs of symmetric tridiagonal-plus-corner (cyclic) matrices.

Periodic mode operators couple the first and last grid nodes, so the matrix
is tridiagonal except for one symmetric corner entry.  Eigenvalue counts
below a shift come from the inertia of a bordered LDL^T factorization whose
fill stays in the last row, so one count costs O(n); bisection on the counts
then brackets each eigenvalue to absolute tolerance, and eigenvectors follow
by inverse iteration with a rank-one (Sherman-Morrison) cyclic solve.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import EigvecFailure

_TINY = 1e-290


def count_below(diag, off, corner, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift, batched over shifts."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    n = diag.size
    count = np.zeros(shifts.size, dtype=np.int64)
    p = diag[0] - shifts
    p = np.where(np.abs(p) < _TINY, -_TINY, p)
    fill = np.full(shifts.size, float(corner))
    schur = np.zeros(shifts.size)
    for i in range(n - 2):
        count += p < 0
        mult = fill / p
        schur += fill * mult
        fill_next = -mult * off[i]
        if i + 1 == n - 2:
            fill_next = fill_next + off[n - 2]
        p = (diag[i + 1] - shifts) - off[i] ** 2 / p
        p = np.where(np.abs(p) < _TINY, -_TINY, p)
        fill = fill_next
    count += p < 0
    schur += fill * fill / p
    p_last = (diag[n - 1] - shifts) - schur
    count += p_last < 0
    return count


def gershgorin_bounds(diag, off, corner):
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    radius = np.zeros_like(diag)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    radius[0] += abs(corner)
    radius[-1] += abs(corner)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def eigvals_below(diag, off, corner, e_max, tol=1e-12) -> np.ndarray:
    """All eigenvalues <= e_max, ascending, by batched inertia bisection."""
    lo, _ = gershgorin_bounds(diag, off, corner)
    lo -= 1.0
    m = int(count_below(diag, off, corner, [np.nextafter(e_max, np.inf)])[0])
    if m == 0:
        return np.zeros(0)
    lower = np.full(m, lo)
    upper = np.full(m, float(e_max))
    target = np.arange(1, m + 1)
    while np.max(upper - lower) > tol:
        mid = 0.5 * (lower + upper)
        have = count_below(diag, off, corner, mid) >= target
        upper = np.where(have, mid, upper)
        lower = np.where(have, lower, mid)
    return 0.5 * (lower + upper)


def _solve_cyclic(diag, off, corner, rhs):
    # Sherman-Morrison: fold the corner into a rank-one update of a tridiagonal
    n = diag.size
    gamma = -diag[0] if diag[0] != 0 else 1.0
    dd = diag.copy()
    dd[0] -= gamma
    dd[-1] -= corner * corner / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = dd
    ab[2, :-1] = off
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner
    v = np.zeros(n)
    v[0] = 1.0
    v[-1] = corner / gamma
    y = solve_banded((1, 1), ab, rhs)
    z = solve_banded((1, 1), ab, u)
    return y - z * (v @ y) / (1.0 + v @ z)


def _apply(diag, off, corner, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    y[0] += corner * x[-1]
    y[-1] += corner * x[0]
    return y


def eigvecs(diag, off, corner, eigvals, max_iter=50, seed=0) -> np.ndarray:
    """Inverse-iteration eigenvectors (columns) for precomputed eigenvalues.

    Shifts inside near-degenerate clusters are perturbed by 1e-10 times the
    spectral spread and the vectors re-orthogonalized within the cluster.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    eigvals = np.asarray(eigvals, dtype=float)
    n = diag.size
    m = eigvals.size
    scale = float(np.max(np.abs(diag)) + 2 * np.max(np.abs(off), initial=0.0) + abs(corner))
    spread = float(eigvals[-1] - eigvals[0]) if m > 1 else 1.0
    spread = spread if spread > 0 else 1.0
    cluster_gap = max(1e-8 * scale, 1e-12)
    rng = np.random.default_rng(seed)
    vecs = np.empty((n, m))
    cluster_start = 0
    for j in range(m):
        if j > 0 and eigvals[j] - eigvals[j - 1] > cluster_gap:
            cluster_start = j
        shift = eigvals[j] + (j - cluster_start) * 1e-10 * spread + 1e-13 * scale
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        ok = False
        for _ in range(max_iter):
            x = _solve_cyclic(diag - shift, off, corner, x)
            for i in range(cluster_start, j):
                x -= (vecs[:, i] @ x) * vecs[:, i]
            nrm = np.linalg.norm(x)
            if nrm == 0.0:
                x = rng.standard_normal(n)
                nrm = np.linalg.norm(x)
            x /= nrm
            resid = np.linalg.norm(_apply(diag, off, corner, x) - eigvals[j] * x)
            if resid <= 1e-10 * scale:
                ok = True
                break
        if not ok:
            raise EigvecFailure(j, f"residual {resid:.3e} after {max_iter} iterations")
        vecs[:, j] = x
    return vecs
