"""Max-min transmit beampattern synthesis by iterative inner convex approximation.

Each pattern ``f_j(W) = ||a_T(ν_j)^T W||^2`` is convex in ``W``, so its
first-order expansion around ``W~`` is a global under-estimator.  Replacing
every ``f_j`` by that expansion gives a convex subproblem

    max ζ  s.t.  Re<G_j, W> - f_j(W~) >= ζ,  ||W||_F^2 <= P_T,

whose solution lies in the real span of the gradients ``G_j``.  Writing
``W = sum_j mu_j G_j`` turns it into a problem in ``i`` real unknowns with
Gram matrix ``K_jk = Re<G_j, G_k>``.  The dual is

    min_{λ ∈ simplex}  sqrt(P_T λ^T K λ) - f(W~)^T λ,

which certifies every subproblem solution through its duality gap.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .array import ArrayConfig, beampattern, omni_weights, steering, transmit_power

DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITERS = 100
POWER_RTOL = 1e-6
# exhaustive active-set search is only attempted up to this many targets
_ENUMERATION_LIMIT = 6
_BISECTION_STEPS = 200
# duality gaps below this are round-off
_INNER_TOL_FLOOR = 1e-12


class ConvergenceError(RuntimeError):
    """A subproblem solver ran out of iterations; ``diagnostics`` holds its last state."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class BeamProblem:
    """Targets (spatial frequencies on the grid), power budget and array."""

    targets: tuple[float, ...]
    total_power: float
    cfg: ArrayConfig

    def __post_init__(self):
        targets = tuple(float(t) for t in np.atleast_1d(self.targets))
        if not targets:
            raise ValueError("a beam problem needs at least one target")
        if len(targets) > self.cfg.n_bins:
            raise ValueError(f"{len(targets)} targets exceed the {self.cfg.n_bins} grid bins")
        for t in targets:
            self.cfg.bin_index(t)
        if len(set(targets)) != len(targets):
            raise ValueError("targets must be distinct")
        if not self.total_power > 0:
            raise ValueError(f"total_power must be positive, got {self.total_power}")
        object.__setattr__(self, "targets", targets)

    @property
    def steering_rows(self) -> np.ndarray:
        return steering(np.asarray(self.targets), self.cfg.n_tx)


@dataclass
class IcaState:
    """Outcome of :func:`synthesize`.

    ``history[m]`` is the min-pattern of the ``m``-th iterate (``history[0]``
    belongs to the starting point).
    """

    w_current: np.ndarray
    zeta: float
    iteration: int
    history: list[float] = field(default_factory=list)
    zeta_history: list[float] = field(default_factory=list)
    kkt_history: list[float] = field(default_factory=list)
    converged: bool = False
    kkt_residual: float = math.nan

    @property
    def min_pattern(self) -> float:
        return self.history[-1]

    def write_diagnostics(self, path) -> None:
        """Per-iteration table: iteration, subproblem ζ, min-pattern, KKT residual."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "zeta", "min_pattern", "kkt_residual"])
            for m, pattern in enumerate(self.history):
                zeta = self.zeta_history[m - 1] if m else math.nan
                kkt = self.kkt_history[m - 1] if m else math.nan
                writer.writerow([m, f"{zeta:.9g}", f"{pattern:.9g}", f"{kkt:.9g}"])


def pattern_value(w: np.ndarray, nu) -> np.ndarray | float:
    """``f_j(W)``; same as :func:`cogradar.array.beampattern`."""
    return beampattern(w, nu)


@dataclass(frozen=True)
class Linearization:
    """Affine under-estimator ``W -> f(W~) + Re<G, W - W~>`` of one pattern."""

    point: np.ndarray
    value: float
    gradient: np.ndarray

    def __call__(self, w: np.ndarray) -> float:
        w = np.asarray(w)
        return self.value + float(np.vdot(self.gradient, w - self.point).real)


def pattern_gradient(w_tilde: np.ndarray, nu: float) -> np.ndarray:
    """``2 a_T^* a_T^T W~``, the gradient under ``<A, B> = Re tr(A^H B)``."""
    a = steering(nu, np.asarray(w_tilde).shape[0])
    return 2.0 * np.outer(a.conj(), a @ w_tilde)


def linearize(w_tilde: np.ndarray, nu: float) -> Linearization:
    w_tilde = np.asarray(w_tilde, dtype=complex)
    if not np.all(np.isfinite(w_tilde)):
        raise ValueError("linearization point must be finite")
    return Linearization(point=w_tilde, value=float(pattern_value(w_tilde, nu)),
                         gradient=pattern_gradient(w_tilde, nu))


# ----------------------------------------------------------------- subproblem

@dataclass(frozen=True)
class SubproblemResult:
    w: np.ndarray
    zeta: float
    multipliers: np.ndarray  # dual weights on the simplex
    gap: float
    method: str


class _Reduced:
    """Subproblem data in gradient-span coordinates.

    With ``g_j = W~^T a_j`` (row ``a_j^T W~``) the gradients are
    ``G_j = 2 conj(a_j) g_j^T`` and ``<G_j, G_k> = 4 (a_j^T conj(a_k)) (g_j^H g_k)``.
    """

    def __init__(self, rows: np.ndarray, w_tilde: np.ndarray, total_power: float):
        self.rows = rows
        self.g = rows @ w_tilde
        self.c = np.sum(np.abs(self.g) ** 2, axis=1)  # f_j(W~)
        s_a = rows @ rows.conj().T
        s_g = self.g.conj() @ self.g.T
        self.gram = 4.0 * (s_a * s_g).real
        self.gram = 0.5 * (self.gram + self.gram.T)
        self.power = total_power
        self.scale = max(float(np.max(np.diag(self.gram))), 1e-300)

    def weights(self, mu: np.ndarray) -> np.ndarray:
        return 2.0 * self.rows.conj().T @ (mu[:, None] * self.g)

    def primal(self, mu: np.ndarray) -> tuple[np.ndarray, float]:
        """Rescale ``mu`` onto the power sphere and return it with its ζ."""
        norm2 = float(mu @ self.gram @ mu)
        if norm2 <= 0:
            return mu, -math.inf
        mu = mu * math.sqrt(self.power / norm2)
        return mu, float(np.min(self.gram @ mu - self.c))

    def dual(self, lam: np.ndarray) -> float:
        q = max(float(lam @ self.gram @ lam), 0.0)
        return math.sqrt(self.power * q) - float(self.c @ lam)

    def certify(self, mu: np.ndarray) -> tuple[np.ndarray, float, np.ndarray, float]:
        mu, zeta = self.primal(mu)
        lam = np.clip(mu, 0.0, None)
        total = lam.sum()
        lam = lam / total if total > 0 else np.full(mu.size, 1.0 / mu.size)
        return mu, zeta, lam, self.dual(lam) - zeta


def _active_set_candidate(red: _Reduced, active: np.ndarray) -> np.ndarray | None:
    """``mu`` supported on ``active`` with equal active slacks and full power."""
    k = red.gram[np.ix_(active, active)]
    try:
        k_inv_1 = np.linalg.solve(k, np.ones(active.size))
        k_inv_c = np.linalg.solve(k, red.c[active])
    except np.linalg.LinAlgError:
        return None
    # (c + ζ1)^T K^-1 (c + ζ1) = P  ->  a ζ² + 2 b ζ + (d - P) = 0
    a = float(np.sum(k_inv_1))
    b = float(np.sum(k_inv_c))
    d = float(red.c[active] @ k_inv_c)
    if not a > 0:
        return None
    disc = b * b - a * (d - red.power)
    if disc < 0:
        return None
    zeta = (-b + math.sqrt(disc)) / a
    mu_active = k_inv_c + zeta * k_inv_1
    if np.any(mu_active < -1e-12 * np.max(np.abs(mu_active))):
        return None
    mu = np.zeros(red.c.size)
    mu[active] = np.clip(mu_active, 0.0, None)
    return mu


def _min_norm(red: _Reduced, basis: np.ndarray, zeta: float) -> tuple[float, np.ndarray | None]:
    """Least-distance program ``min ||z||^2 s.t. B z >= c + ζ`` via NNLS.

    Returns the squared norm (``inf`` if infeasible) and the NNLS weights,
    which are proportional to the optimal dual multipliers.
    """
    rhs = red.c + zeta
    e = np.vstack([basis.T, rhs[None, :]])
    f = np.zeros(e.shape[0])
    f[-1] = 1.0
    u, _ = nnls(e, f, maxiter=50 * e.shape[1])
    r = e @ u - f
    if abs(r[-1]) < 1e-14:
        return math.inf, None
    z = -r[:-1] / r[-1]
    return float(z @ z), u


def _bisection(red: _Reduced, tol: float, lower: float) -> np.ndarray:
    # real basis B with B B^T = K, so that ||W||^2 = ||z||^2 for W = B^T z
    evals, evecs = np.linalg.eigh(red.gram)
    keep = evals > 1e-12 * max(evals.max(), 1e-300)
    basis = evecs[:, keep] * np.sqrt(evals[keep])
    upper = math.sqrt(red.power * red.scale) - float(red.c.min())
    lo, hi = lower, max(upper, lower)
    best_u = None
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        norm2, u = _min_norm(red, basis, mid)
        if norm2 <= red.power:
            lo, best_u = mid, u
        else:
            hi = mid
        if hi - lo <= 0.1 * tol * max(1.0, abs(lo)):
            break
    if best_u is None:
        _, best_u = _min_norm(red, basis, lo)
    # mu from the dual weights: active-set solve on their support
    support = np.flatnonzero(best_u[: red.c.size] > 0) if best_u is not None else np.arange(red.c.size)
    if support.size:
        mu = _active_set_candidate(red, support)
        if mu is not None:
            return mu
    lam = np.clip(best_u, 0.0, None) if best_u is not None else np.ones(red.c.size)
    return lam


def solve_subproblem(problem: BeamProblem, w_tilde: np.ndarray, tol: float = DEFAULT_TOL) -> SubproblemResult:
    """Solve the linearized max-min program around ``w_tilde`` to duality gap ``tol``.

    The gap is measured relative to ``max(1, |ζ|)``.  Tries the all-active
    set first, then small active sets, then bisection on ζ with a
    least-distance feasibility oracle.
    """
    w_tilde = np.asarray(w_tilde, dtype=complex)
    if w_tilde.shape != (problem.cfg.n_tx, problem.cfg.n_tx):
        raise ValueError(f"w_tilde must be {problem.cfg.n_tx}x{problem.cfg.n_tx}, got {w_tilde.shape}")
    p = transmit_power(w_tilde)
    if abs(p - problem.total_power) > POWER_RTOL * problem.total_power:
        raise ValueError(f"w_tilde has power {p:.9g}, expected {problem.total_power:.9g}")
    red = _Reduced(problem.steering_rows, w_tilde, problem.total_power)
    n = red.c.size
    budget = tol * max(1.0, float(red.c.max()))

    def done(mu, method):
        mu, zeta, lam, gap = red.certify(mu)
        if gap <= tol * max(1.0, abs(zeta)):
            return SubproblemResult(w=red.weights(mu), zeta=zeta, multipliers=lam, gap=gap, method=method)
        return None

    candidates = [np.arange(n)]
    if n <= _ENUMERATION_LIMIT:
        for size in range(n - 1, 0, -1):
            candidates.extend(np.array(s) for s in itertools.combinations(range(n), size))
    best = None
    for active in candidates:
        mu = _active_set_candidate(red, active)
        if mu is None:
            continue
        res = done(mu, "active-set")
        if res is not None:
            return res
        _, zeta = red.primal(mu)
        if best is None or zeta > best[1]:
            best = (mu, zeta)

    # W~ itself is feasible with ζ = min_j f_j(W~)
    mu = _bisection(red, tol, lower=float(red.c.min()))
    res = done(mu, "bisection")
    if res is not None:
        return res
    mu_b, zeta_b, lam, gap = red.certify(mu)
    raise ConvergenceError(
        f"subproblem solver stalled with duality gap {gap:.3g} (budget {budget:.3g})",
        {"zeta": zeta_b, "gap": gap, "multipliers": lam.tolist(), "mu": mu_b.tolist()},
    )


# ----------------------------------------------------------------- outer loop

def min_pattern(w: np.ndarray, targets) -> float:
    return float(np.min(pattern_value(w, np.asarray(targets))))


def kkt_residual(w: np.ndarray, problem: BeamProblem, multipliers: np.ndarray) -> float:
    """Stationarity + complementary-slackness residual of the max-min problem at ``w``.

    Stationarity: the multiplier-weighted pattern gradient must be parallel to
    ``W`` (the power-constraint gradient).  Slackness: weight on inactive
    patterns, relative to the min-pattern.
    """
    rows = problem.steering_rows
    g = rows @ w
    grad = 2.0 * rows.conj().T @ (multipliers[:, None] * g)
    gnorm = float(np.linalg.norm(grad))
    if gnorm == 0.0:
        return math.inf
    direction = w / math.sqrt(transmit_power(w))
    stationarity = float(np.linalg.norm(grad / gnorm - direction))
    f = np.sum(np.abs(g) ** 2, axis=1)
    fmin = float(f.min())
    slack = float(multipliers @ (f - fmin)) / fmin if fmin > 0 else math.inf
    return stationarity + slack


def synthesize(problem: BeamProblem, w0: np.ndarray | None = None,
               max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL) -> IcaState:
    """Iterate the convex subproblem from ``w0`` (default: omnidirectional).

    Stops when the min-pattern improves by less than ``tol`` (relative) or
    after ``max_iters`` subproblems; in the latter case ``converged`` is False
    and the best iterate is returned.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    n_tx = problem.cfg.n_tx
    w = omni_weights(n_tx, problem.total_power) if w0 is None else np.asarray(w0, dtype=complex)
    p = transmit_power(w)
    if abs(p - problem.total_power) > POWER_RTOL * problem.total_power:
        raise ValueError(f"initial weights have power {p:.9g}, expected {problem.total_power:.9g}")

    state = IcaState(w_current=w, zeta=min_pattern(w, problem.targets), iteration=0,
                     history=[min_pattern(w, problem.targets)])
    # the subproblem is solved more tightly than the outer stopping rule
    inner_tol = min(max(tol, _INNER_TOL_FLOOR), 1e-8)
    for m in range(1, max_iters + 1):
        sub = solve_subproblem(problem, state.w_current, inner_tol)
        w_next = sub.w * math.sqrt(problem.total_power / transmit_power(sub.w))
        value = min_pattern(w_next, problem.targets)
        previous = state.history[-1]
        if value < previous:
            # only round-off can cause this: f >= f~ >= ζ >= previous
            state.converged = True
            break
        state.w_current = w_next
        state.zeta = sub.zeta
        state.iteration = m
        state.history.append(value)
        state.zeta_history.append(sub.zeta)
        state.kkt_residual = kkt_residual(w_next, problem, sub.multipliers)
        state.kkt_history.append(state.kkt_residual)
        if value - previous <= tol * max(abs(previous), 1e-300):
            state.converged = True
            break
    return state


def matched_beam(nu: float, n_tx: int, total_power: float = 1.0) -> np.ndarray:
    """Rank-one beamformer ``sqrt(P) u e_1^T`` with ``u = conj(a_T(ν)) / sqrt(N_T)``.

    It attains the single-target optimum ``P_T N_T``.
    """
    w = np.zeros((n_tx, n_tx), dtype=complex)
    w[:, 0] = math.sqrt(total_power) * steering(nu, n_tx).conj() / math.sqrt(n_tx)
    return w
