"""Robust Wald-type detector with CFAR threshold and asymptotic P_D estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ncx2, rice

from .disturbance import BandedCovariance, banded_form, default_lag

CLAMP_FACTOR = 1e-12
# 1 - Q_1(a, b) <= b^2 / 2, which rounds away below this
_TINY_B = 1e-8


@dataclass(frozen=True)
class CellDecision:
    """Detector output for one angle bin."""

    statistic: float
    flag: int
    alpha_hat: complex
    zeta_hat: float
    pd_hat: float


def threshold(p_fa: float) -> float:
    """CFAR threshold: the chi-square(2) quantile at ``1 - p_fa``, i.e. ``-2 ln p_fa``."""
    if not 0.0 < p_fa <= 1.0:
        raise ValueError(f"p_fa must lie in (0, 1], got {p_fa}")
    return -2.0 * math.log(p_fa) + 0.0


def marcum_q1(a, b):
    """First-order Marcum Q function ``Q_1(a, b)``.

    ``Q_1(a, b)`` is the survival function at ``b^2`` of a noncentral
    chi-square with 2 degrees of freedom and noncentrality ``a^2``.
    Accepts scalars or arrays.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise ValueError("Marcum Q arguments must be nonnegative")
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    out = np.ones(a_arr.shape)
    # the chi-square series stalls for b << a; the Rice tail cancels for b > a
    body = (b_arr >= _TINY_B) & (b_arr < a_arr)
    tail = b_arr >= np.maximum(a_arr, _TINY_B)
    out[body] = rice.sf(b_arr[body], a_arr[body])
    out[tail] = ncx2.sf(b_arr[tail] ** 2, 2, a_arr[tail] ** 2)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def alpha_hat(h, y) -> complex:
    """Least-squares amplitude ``h^H y / ||h||^2``."""
    h = np.asarray(h)
    norm2 = float(np.vdot(h, h).real)
    if norm2 == 0.0:
        raise ValueError("amplitude estimate undefined for an all-zero channel")
    return complex(np.vdot(h, y) / norm2)


def _denominator(h, gamma) -> float:
    if isinstance(gamma, BandedCovariance):
        den = float(banded_form(h, gamma.residual, gamma.lag))
        floor = CLAMP_FACTOR * float(np.vdot(h, h).real) * float(np.vdot(gamma.residual, gamma.residual).real)
        return max(den, floor)
    gamma = np.asarray(gamma)
    if gamma.shape != (h.size, h.size):
        raise ValueError(f"covariance shape {gamma.shape} does not match channel length {h.size}")
    return float(np.vdot(h, gamma @ h).real)


def wald_statistic(h, y, gamma) -> float:
    """``2 |h^H y|^2 / (h^H Γ h)`` for a banded estimate or a known dense covariance."""
    h = np.asarray(h)
    y = np.asarray(y)
    if h.shape != y.shape or h.ndim != 1:
        raise ValueError(f"channel {h.shape} and observation {y.shape} must be equal-length vectors")
    den = _denominator(h, gamma)
    if den <= 0.0:
        return 0.0
    return 2.0 * abs(np.vdot(h, y)) ** 2 / den


def residual(h, y) -> np.ndarray:
    """Disturbance estimate ``y - alpha_hat h``."""
    return np.asarray(y) - alpha_hat(h, y) * np.asarray(h)


def decide(h, y, gamma=None, lam: float = threshold(1e-2), lag: int | None = None) -> CellDecision:
    """Full per-bin decision. Without ``gamma`` the banded estimate is built from the residual."""
    h = np.asarray(h)
    y = np.asarray(y)
    a = alpha_hat(h, y)
    if gamma is None:
        gamma = BandedCovariance(y - a * h, default_lag(h.size) if lag is None else lag)
    stat = wald_statistic(h, y, gamma)
    norm2 = float(np.vdot(h, h).real)
    zeta = 2.0 * abs(a) ** 2 * norm2**2 / _denominator(h, gamma)
    return CellDecision(
        statistic=stat,
        flag=int(stat > lam),
        alpha_hat=a,
        zeta_hat=zeta,
        pd_hat=marcum_q1(math.sqrt(zeta), math.sqrt(lam)),
    )


@dataclass
class BinDecisions:
    """Per-bin detector outputs for one pulse, as parallel arrays."""

    statistic: np.ndarray
    flag: np.ndarray
    alpha_hat: np.ndarray
    zeta_hat: np.ndarray
    pd_hat: np.ndarray

    def __len__(self):
        return self.statistic.size

    def cell(self, l: int) -> CellDecision:
        return CellDecision(
            statistic=float(self.statistic[l]),
            flag=int(self.flag[l]),
            alpha_hat=complex(self.alpha_hat[l]),
            zeta_hat=float(self.zeta_hat[l]),
            pd_hat=float(self.pd_hat[l]),
        )

    def cells(self) -> list[CellDecision]:
        return [self.cell(l) for l in range(len(self))]


def detect_bins(h: np.ndarray, y: np.ndarray, lam: float, lag: int | None = None,
                shared_covariance: bool = False, with_pd: bool = True,
                covariance: np.ndarray | None = None) -> BinDecisions:
    """Vectorized :func:`decide` over the rows of ``h`` and ``y`` (one row per bin).

    With ``shared_covariance`` every bin is tested against the average of the
    per-bin banded estimates instead of its own.  A known dense
    ``covariance`` replaces the estimate altogether.
    """
    h = np.atleast_2d(h)
    y = np.atleast_2d(y)
    if h.shape != y.shape:
        raise ValueError(f"channel {h.shape} and observation {y.shape} shapes differ")
    n = h.shape[1]
    lag = default_lag(n) if lag is None else lag
    if not 0 <= lag < n:
        raise ValueError(f"lag must satisfy 0 <= lag < {n}")
    norm2 = np.sum(np.abs(h) ** 2, axis=1)
    if np.any(norm2 == 0):
        raise ValueError("amplitude estimate undefined for an all-zero channel")
    proj = np.sum(np.conj(h) * y, axis=1)
    a = proj / norm2
    res = y - a[:, None] * h
    res_norm2 = np.sum(np.abs(res) ** 2, axis=1)
    if covariance is not None:
        covariance = np.asarray(covariance)
        if covariance.shape != (n, n):
            raise ValueError(f"covariance shape {covariance.shape} does not match channel length {n}")
        # broadcast (stride-0) rows would push the product off the BLAS path
        den = np.sum(np.conj(h) * (np.ascontiguousarray(h) @ covariance.T), axis=1).real
        floor = np.zeros_like(den)
    elif shared_covariance:
        # den[l] = mean_b banded_form(h_l, res_b)
        den = np.array([np.mean(banded_form(h[l][None, :], res, lag)) for l in range(h.shape[0])])
        floor = CLAMP_FACTOR * norm2 * np.mean(res_norm2)
    else:
        den = banded_form(h, res, lag)
        floor = CLAMP_FACTOR * norm2 * res_norm2
    den = np.maximum(den, floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.where(den > 0, 2.0 * np.abs(proj) ** 2 / den, 0.0)
        zeta = np.where(den > 0, 2.0 * np.abs(a) ** 2 * norm2**2 / den, 0.0)
    pd = marcum_q1(np.sqrt(zeta), math.sqrt(lam)) if with_pd else np.full(zeta.shape, np.nan)
    return BinDecisions(statistic=stat, flag=(stat > lam).astype(int), alpha_hat=a, zeta_hat=zeta, pd_hat=pd)
