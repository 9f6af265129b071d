"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np
from scipy import integrate, special

from cogradar.array import steering


def quad_marcum_q1(a: float, b: float) -> float:
    """Q_1(a, b) from its defining integral by adaptive quadrature."""
    f = lambda x: x * math.exp(-((x - a) ** 2) / 2) * special.i0e(a * x)
    val, _ = integrate.quad(f, b, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All points of the probability simplex in R^dim with coordinates on a 1/steps lattice."""
    if dim == 1:
        return np.ones((1, 1))
    out = []
    for k in range(steps + 1):
        tail = simplex_grid(dim - 1, steps - k) * (steps - k) / steps if k < steps else np.zeros((1, dim - 1))
        out.append(np.hstack([np.full((tail.shape[0], 1), k / steps), tail]))
    return np.vstack(out)


def maxmin_dual_bound(targets, n_tx: int, power: float, steps: int) -> float:
    """Upper bound on max_W min_j f_j(W) by brute force over the dual simplex.

    With square W, WW^H is any PSD matrix of trace P, and the max-min value
    equals P * min over simplex weights of the top eigenvalue of
    sum_j lam_j conj(a_j) a_j^T.  Evaluated on a lattice, this upper-bounds
    the optimum and is tight to lattice resolution.
    """
    a = steering(np.asarray(targets, dtype=float), n_tx)
    mats = np.einsum("ji,jk->jik", a.conj(), a)
    lams = simplex_grid(len(targets), steps)
    combos = np.einsum("gj,jik->gik", lams, mats)
    return power * float(np.min(np.linalg.eigvalsh(combos)[:, -1]))


def random_search_lower_bound(targets, n_tx: int, power: float, rng, draws: int = 20000, rank: int = 2) -> float:
    """Best min-pattern over random rank-limited beamformers scaled to the budget."""
    a = steering(np.asarray(targets, dtype=float), n_tx)
    w = rng.standard_normal((draws, n_tx, rank)) + 1j * rng.standard_normal((draws, n_tx, rank))
    w *= np.sqrt(power / np.sum(np.abs(w) ** 2, axis=(1, 2)))[:, None, None]
    f = np.sum(np.abs(np.einsum("ji,dir->djr", a, w)) ** 2, axis=2)
    return float(np.max(np.min(f, axis=1)))
