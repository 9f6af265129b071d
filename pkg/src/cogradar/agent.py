"""Tabular SARSA agent choosing how many angle bins to illuminate.

States count flagged bins, ``s = min(sum of flags, M)``.  Action ``i``
selects the ``i`` bins with the largest Wald statistics; ``i = 0`` means
omnidirectional transmission.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np


class RewardMode(str, Enum):
    CHOSEN_SET = "chosen-set"  # positive term over the action's bin set
    STATE_COUNT = "state-count"  # positive term over the top-s bins


@dataclass(frozen=True)
class AgentConfig:
    learning_rate: float = 0.8
    discount: float = 0.8
    epsilon: float = 0.5
    max_targets: int = 10
    epsilon_decay: float = 1.0  # ε_k = ε · decay^k
    reward_mode: RewardMode = RewardMode.CHOSEN_SET

    def __post_init__(self):
        for name in ("learning_rate", "discount", "epsilon", "epsilon_decay"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if int(self.max_targets) != self.max_targets or self.max_targets < 1:
            raise ValueError(f"max_targets must be a positive integer, got {self.max_targets}")
        object.__setattr__(self, "reward_mode", RewardMode(self.reward_mode))

    def epsilon_at(self, k: int) -> float:
        return self.epsilon * self.epsilon_decay**k


class QTable:
    """``(M+1) x (M+1)`` action values, rows = states, columns = actions."""

    def __init__(self, max_targets: int, values: np.ndarray | None = None):
        size = max_targets + 1
        if values is None:
            values = np.zeros((size, size))
        values = np.array(values, dtype=float)
        if values.shape != (size, size):
            raise ValueError(f"Q table must be {size}x{size}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Q table entries must be finite")
        self.q = values

    @property
    def max_targets(self) -> int:
        return self.q.shape[0] - 1

    def copy(self) -> "QTable":
        return QTable(self.max_targets, self.q.copy())

    def write_csv(self, path) -> None:
        m = self.max_targets
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["state"] + [f"a{j}" for j in range(m + 1)])
            for s in range(m + 1):
                writer.writerow([f"s{s}"] + [f"{v:.9g}" for v in self.q[s]])


@dataclass(frozen=True)
class ActionSet:
    size: int
    bins: tuple[int, ...]


def extract_state(flags, max_targets: int) -> int:
    flags = np.asarray(flags)
    if flags.size and not np.all((flags == 0) | (flags == 1)):
        raise ValueError("flags must be binary")
    return int(min(int(flags.sum()), max_targets))


def greedy_action(q: QTable, state: int) -> int:
    return int(np.argmax(q.q[state]))  # first maximum wins


def select_action(q: QTable, state: int, epsilon: float, rng: np.random.Generator) -> int:
    """ε-greedy; the exploratory draw is uniform over the non-greedy actions."""
    if not 0 <= state <= q.max_targets:
        raise ValueError(f"state {state} outside 0..{q.max_targets}")
    best = greedy_action(q, state)
    if epsilon <= 0.0 or rng.random() >= epsilon:
        return best
    pick = int(rng.integers(q.max_targets))
    return pick + (pick >= best)


def build_action_set(statistics, size: int) -> ActionSet:
    """The ``size`` bins with the largest statistics, descending, ties to the lower index."""
    stats = np.asarray(statistics, dtype=float)
    if not 0 <= size <= stats.size:
        raise ValueError(f"action size {size} outside 0..{stats.size}")
    order = np.argsort(-stats, kind="stable")
    return ActionSet(size=size, bins=tuple(int(b) for b in order[:size]))


def reward(pd_hat, chosen) -> float:
    """Sum of ``P_D`` estimates inside ``chosen`` minus the sum over all other bins."""
    pd = np.asarray(pd_hat, dtype=float)
    bins = chosen.bins if isinstance(chosen, ActionSet) else tuple(chosen)
    mask = np.zeros(pd.size, dtype=bool)
    mask[list(bins)] = True
    return float(pd[mask].sum() - pd[~mask].sum())


def sarsa_update(q: QTable, s: int, a: int, r: float, s_next: int, a_next: int, cfg: AgentConfig) -> QTable:
    """One on-policy TD step, in place; returns ``q``."""
    target = r + cfg.discount * q.q[s_next, a_next]
    q.q[s, a] += cfg.learning_rate * (target - q.q[s, a])
    return q
