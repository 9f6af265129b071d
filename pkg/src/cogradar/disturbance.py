"""Correlated heavy-tailed clutter: AR(p) process driven by complex t innovations.

The process is ``c_n = sum_i rho_i c_{n-i} + w_n``.  The innovations have the
density

    p(w) = (mu / (pi sigma2)) (mu/xi)^mu (mu/xi + |w|^2/sigma2)^-(mu+1),
    xi = mu / (sigma2 (mu - 1)),

which is sampled as a compound Gaussian: a circular Gaussian speckle scaled
by an inverse-gamma power texture.  ``shape = inf`` gives the Gaussian limit.

Also here: the single-snapshot banded covariance estimate used by the robust
detector and its O(N l) quadratic form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

DEFAULT_BURN_IN = 1000
_UNIT_ROOT_TOL = 1e-9


@dataclass(frozen=True)
class DisturbanceSpec:
    """AR coefficients ``rho`` plus t-innovation shape ``mu`` and ``sigma2``."""

    coeffs: tuple[complex, ...] = ()
    shape: float = 2.0
    sigma2: float = 1.0

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not self.shape > 1:
            raise ValueError(f"shape parameter μ must satisfy μ ∈ (1,∞), got {self.shape}")
        if not self.sigma2 > 0 or not math.isfinite(self.sigma2):
            raise ValueError(f"sigma2 must be a positive finite number, got {self.sigma2}")
        if coeffs:
            radius = float(np.max(np.abs(self.poles)))
            # unit roots come back from root finding as 1 +- round-off
            if radius >= 1.0 - _UNIT_ROOT_TOL:
                raise ValueError(
                    f"AR coefficients are not stationary: largest root modulus {radius:.6g} >= 1"
                )

    @classmethod
    def from_poles(cls, poles, shape: float = 2.0, sigma2: float = 1.0) -> "DisturbanceSpec":
        """Build the AR model whose characteristic roots are ``poles``."""
        poles = np.atleast_1d(np.asarray(poles, dtype=complex))
        a = np.poly(poles) if poles.size else np.array([1.0])
        return cls(coeffs=tuple((-a[1:]).tolist()), shape=shape, sigma2=sigma2)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def denominator(self) -> np.ndarray:
        """Filter polynomial ``[1, -rho_1, ..., -rho_p]``."""
        return np.concatenate(([1.0 + 0j], -np.asarray(self.coeffs, dtype=complex)))

    @property
    def poles(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros(0, dtype=complex)
        return np.roots(self.denominator)

    @property
    def gaussian(self) -> bool:
        return math.isinf(self.shape)

    @property
    def scale(self) -> float:
        """Scale parameter ``xi = mu / (sigma2 (mu - 1))`` (``1/sigma2`` in the Gaussian limit)."""
        if self.gaussian:
            return 1.0 / self.sigma2
        return self.shape / (self.sigma2 * (self.shape - 1.0))

    @property
    def innovation_power(self) -> float:
        """Second moment ``E|w|^2 = sigma2 (mu/xi) / (mu - 1)``."""
        if self.gaussian:
            return self.sigma2**2
        return self.sigma2 * (self.shape / self.scale) / (self.shape - 1.0)

    def innovation_pdf(self, w) -> np.ndarray:
        """Density of a complex innovation with respect to ``d Re(w) d Im(w)``."""
        u = np.abs(np.asarray(w)) ** 2 / self.sigma2
        if self.gaussian:
            return np.exp(-u / self.sigma2) / (np.pi * self.sigma2**2)
        mu = self.shape
        b = mu / self.scale
        return (mu / (np.pi * self.sigma2)) * b**mu * (b + u) ** (-(mu + 1.0))


def sample_innovations(spec: DisturbanceSpec, rng: np.random.Generator, size=None) -> np.ndarray:
    """Circular complex t draws via the Gaussian scale mixture."""
    shape = () if size is None else size
    speckle = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)
    if spec.gaussian:
        return spec.sigma2 * speckle
    # |w|^2 / sigma2 is Lomax(mu, mu/xi): texture sigma2 * (mu/xi) / Gamma(mu, 1)
    texture = spec.sigma2 * (spec.shape / spec.scale) / rng.standard_gamma(spec.shape, size=shape)
    return np.sqrt(texture) * speckle


def sample_innovation(spec: DisturbanceSpec, rng: np.random.Generator) -> complex:
    return complex(sample_innovations(spec, rng))


def generate(
    spec: DisturbanceSpec,
    n: int,
    rng: np.random.Generator,
    burn_in: int = DEFAULT_BURN_IN,
    batch: int | None = None,
) -> np.ndarray:
    """``n`` consecutive samples of the stationary AR process.

    With ``batch`` set, returns ``batch`` independent realizations as rows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if burn_in < 10 * spec.order:
        raise ValueError(f"burn_in must be at least 10 * order = {10 * spec.order}")
    shape = (n + burn_in,) if batch is None else (batch, n + burn_in)
    w = sample_innovations(spec, rng, shape)
    if spec.order:
        w = lfilter([1.0], spec.denominator, w, axis=-1)
    return w[..., burn_in:]


def transfer(spec: DisturbanceSpec, nu) -> np.ndarray:
    """``1 - sum_n rho_n e^{-j 2π ν n}`` evaluated on ``nu``."""
    nu = np.asarray(nu, dtype=float)
    if not spec.order:
        return np.ones_like(nu, dtype=complex)
    lags = np.arange(1, spec.order + 1)
    return 1.0 - np.exp(-2j * np.pi * nu[..., None] * lags) @ np.asarray(spec.coeffs)


def psd(spec: DisturbanceSpec, nu) -> np.ndarray | float:
    """Normalized spectral density ``S(ν) = sigma2 |1 - sum rho_n e^{-j2πνn}|^-2``."""
    out = spec.sigma2 / np.abs(transfer(spec, nu)) ** 2
    return float(out) if np.ndim(out) == 0 else out


def autocovariance(spec: DisturbanceSpec, max_lag: int, tol: float = 1e-15) -> np.ndarray:
    """``r[m] = E{c_n c_{n-m}^*}`` for ``m = 0..max_lag`` from the impulse response."""
    radius = float(np.max(np.abs(spec.poles))) if spec.order else 0.0
    # impulse response decays like radius^k
    extra = 0 if radius == 0 else int(math.ceil(math.log(tol) / math.log(radius))) + 1
    length = max_lag + spec.order + extra + 1
    impulse = np.zeros(length, dtype=complex)
    impulse[0] = 1.0
    g = lfilter([1.0], spec.denominator, impulse) if spec.order else impulse
    r = np.array([np.vdot(g[: length - m], g[m:]) for m in range(max_lag + 1)])
    return spec.innovation_power * r


def marginal_power(spec: DisturbanceSpec) -> float:
    """``E|c_n|^2`` of the stationary process."""
    return float(autocovariance(spec, 0)[0].real)


def covariance_matrix(spec: DisturbanceSpec, n: int) -> np.ndarray:
    """True ``n x n`` covariance ``Γ[i, j] = r[i - j]`` of consecutive samples."""
    r = autocovariance(spec, n - 1)
    idx = np.arange(n)
    lag = idx[:, None] - idx[None, :]
    return np.where(lag >= 0, r[np.abs(lag)], np.conj(r[np.abs(lag)]))


def six_pole_clutter(shape: float = 2.0, sigma2: float = 1.0) -> DisturbanceSpec:
    """Multi-peak clutter used by the reference scenarios.

    Six poles with radii ``(0.5, 0.6, 0.7, 0.4, 0.5, 0.6)`` placed so that the
    spectral peaks fall at ``ν = (0.4, 0.2, 0.0, 0.1, 0.3, 0.35)``.
    """
    radii = np.array([0.5, 0.6, 0.7, 0.4, 0.5, 0.6])
    peaks = np.array([0.4, 0.2, 0.0, 0.1, 0.3, 0.35])
    return DisturbanceSpec.from_poles(radii * np.exp(2j * np.pi * peaks), shape=shape, sigma2=sigma2)


def default_lag(n: int) -> int:
    """Truncation lag ``ceil(N^(1/3))``, capped to ``N - 1``."""
    lag = int(math.ceil(round(n ** (1.0 / 3.0), 12)))
    return min(lag, n - 1)


class BandedCovariance:
    """Banded single-snapshot estimate ``[Γ]_{ij} = c_i c_j^*`` for ``|i-j| <= lag``.

    Only the residual is stored; the dense matrix is built on demand.
    """

    def __init__(self, residual, lag: int):
        residual = np.asarray(residual, dtype=complex)
        if residual.ndim != 1:
            raise ValueError("residual must be a vector")
        if not 0 <= lag < residual.size:
            raise ValueError(f"lag must satisfy 0 <= lag < {residual.size}, got {lag}")
        self.residual = residual
        self.lag = int(lag)

    @property
    def dim(self) -> int:
        return self.residual.size

    def dense(self) -> np.ndarray:
        c = self.residual
        idx = np.arange(self.dim)
        offset = idx[None, :] - idx[:, None]
        upper = np.where((offset > 0) & (offset <= self.lag), np.outer(c, c.conj()), 0.0)
        # mirror the strict upper band so conjugate symmetry is exact
        return upper + upper.conj().T + np.diag(np.abs(c) ** 2).astype(complex)


def estimate_banded_cov(residual, lag: int) -> BandedCovariance:
    return BandedCovariance(residual, lag)


def banded_form(h: np.ndarray, residual: np.ndarray, lag: int) -> np.ndarray:
    """``Re{h^H Γ h}`` for banded estimates, batched over leading axes.

    With ``z_i = h_i^* c_i`` the form is ``sum_{|i-j|<=l} z_i z_j^*``.
    """
    z = np.conj(h) * residual
    total = np.sum(np.abs(z) ** 2, axis=-1)
    for m in range(1, lag + 1):
        total = total + 2.0 * np.sum(z[..., :-m] * np.conj(z[..., m:]), axis=-1).real
    return total


def quadratic_form(gamma: BandedCovariance, h) -> float:
    h = np.asarray(h)
    if h.shape != (gamma.dim,):
        raise ValueError(f"channel length {h.shape} does not match covariance dimension {gamma.dim}")
    return float(banded_form(h, gamma.residual, gamma.lag))
