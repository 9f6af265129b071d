"""Uniform linear array model.

Steering vectors, transmit beampattern and the Kronecker-structured virtual
channel ``h = (W^T a_T) kron a_R`` seen by a colocated MIMO radar after
matched filtering.  Angles are expressed throughout as spatial frequencies
``nu = (d / lambda) sin(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_ATOL = 1e-9


@dataclass(frozen=True)
class ArrayConfig:
    """Colocated transmit/receive ULA pair and the angle-bin grid.

    Parameters
    ----------
    n_tx, n_rx : int
        Number of transmit and receive elements.
    grid : tuple of float
        Spatial frequencies of the angle bins, strictly increasing in [-0.5, 0.5).
    spacing_wavelengths : float
        Element spacing in wavelengths. Only half-wavelength arrays are supported.
    """

    n_tx: int
    n_rx: int
    grid: tuple[float, ...]
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise ValueError(f"n_tx must be a positive integer, got {self.n_tx!r}")
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise ValueError(f"n_rx must be a positive integer, got {self.n_rx!r}")
        if self.spacing_wavelengths != 0.5:
            raise ValueError("only half-wavelength element spacing is supported")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ValueError("grid must contain at least one spatial frequency")
        if any(g < -0.5 or g >= 0.5 for g in grid):
            raise ValueError("grid values must lie in [-0.5, 0.5)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid values must be strictly increasing")
        object.__setattr__(self, "grid", grid)

    @classmethod
    def uniform(cls, n_tx: int, n_rx: int, n_bins: int = 20, lo: float = -0.5, hi: float = 0.45):
        """Array with ``n_bins`` equally spaced bins covering ``[lo, hi]``."""
        grid = np.round(np.linspace(lo, hi, n_bins), 12) + 0.0  # +0.0 drops -0.0
        return cls(n_tx=n_tx, n_rx=n_rx, grid=tuple(grid.tolist()))

    @property
    def n_bins(self) -> int:
        return len(self.grid)

    @property
    def n_virtual(self) -> int:
        return self.n_tx * self.n_rx

    def bin_index(self, nu: float) -> int:
        """Index of the grid bin equal to ``nu``; raises if ``nu`` is off-grid."""
        grid = np.asarray(self.grid)
        idx = int(np.argmin(np.abs(grid - nu)))
        if abs(grid[idx] - nu) > GRID_ATOL:
            raise ValueError(f"spatial frequency {nu} is not on the angle grid")
        return idx


def steering(nu, n: int) -> np.ndarray:
    """ULA steering vector ``[1, e^{j2πν}, ..., e^{j2π(n-1)ν}]``.

    ``nu`` may be an array, in which case one row per frequency is returned.
    """
    if n < 1:
        raise ValueError(f"element count must be >= 1, got {n}")
    nu = np.asarray(nu, dtype=float)
    return np.exp(2j * np.pi * nu[..., None] * np.arange(n))


def omni_weights(n_tx: int, total_power: float = 1.0) -> np.ndarray:
    """Orthogonal equal-power transmission ``sqrt(P_T / N_T) I``."""
    return np.sqrt(total_power / n_tx) * np.eye(n_tx, dtype=complex)


def transmit_power(w: np.ndarray) -> float:
    """``tr(W W^H)``."""
    return float(np.vdot(w, w).real)


def scale_to_power(w: np.ndarray, total_power: float) -> np.ndarray:
    """Rescale ``w`` so that ``tr(W W^H) = total_power``."""
    p = transmit_power(w)
    if p <= 0:
        raise ValueError("cannot rescale an all-zero beamforming matrix")
    return w * np.sqrt(total_power / p)


def _check_weights(w: np.ndarray, n_tx: int | None = None) -> np.ndarray:
    w = np.asarray(w)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"beamforming matrix must be square, got shape {w.shape}")
    if n_tx is not None and w.shape[0] != n_tx:
        raise ValueError(f"beamforming matrix is {w.shape[0]}x{w.shape[0]}, array has {n_tx} tx elements")
    return w


def virtual_channel(w: np.ndarray, nu, cfg: ArrayConfig) -> np.ndarray:
    """Virtual channel ``(W^T a_T(ν)) ⊗ a_R(ν)`` of length ``n_tx * n_rx``.

    Vectorized over ``nu``: an array of frequencies yields one channel per row.
    """
    w = _check_weights(w, cfg.n_tx)
    a_t = steering(nu, cfg.n_tx)
    a_r = steering(nu, cfg.n_rx)
    g = a_t @ w  # rows are (W^T a_T)^T
    return (g[..., :, None] * a_r[..., None, :]).reshape(*g.shape[:-1], cfg.n_virtual)


def beampattern(w: np.ndarray, nu) -> np.ndarray | float:
    """Transmit beampattern ``B(ν) = a_T^T W W^H a_T^*``, i.e. ``||a_T^T W||²``."""
    w = _check_weights(w)
    g = steering(nu, w.shape[0]) @ w
    out = np.sum(np.abs(g) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out
