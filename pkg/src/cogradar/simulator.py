"""Closed-loop pulse simulation and Monte Carlo aggregation.

Pulses are numbered from 1.  Each pulse transmits the current weights,
draws one received vector per angle bin, runs the detector on all bins and,
depending on the policy, picks the next beam:

* ``rl``: SARSA over the number of illuminated bins, beams from the ICA optimizer;
* ``omnidirectional``: ``sqrt(P_T / N_T) I`` every pulse;
* ``adaptive``: ICA toward every bin flagged on the previous pulse, no learning.

SNR is per virtual channel: ``|alpha|^2 = 10^(snr_db/10) E|c_n|^2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from .agent import AgentConfig, QTable, RewardMode, build_action_set, extract_state, reward, sarsa_update, select_action
from .array import ArrayConfig, omni_weights, virtual_channel
from .beamformer import DEFAULT_MAX_ITERS, DEFAULT_TOL, BeamProblem, min_pattern, synthesize
from .detector import BinDecisions, detect_bins, threshold
from .disturbance import DisturbanceSpec, generate, marginal_power

Detector = Callable[[np.ndarray, np.ndarray, float], BinDecisions]
Trace = Callable[..., None]


class Policy(str, Enum):
    RL = "rl"
    OMNI = "omnidirectional"
    ADAPTIVE = "adaptive"

    @classmethod
    def parse(cls, value) -> "Policy":
        aliases = {"omni": cls.OMNI, "adaptive-no-rl": cls.ADAPTIVE}
        if isinstance(value, str) and value in aliases:
            return aliases[value]
        return cls(value)


@dataclass(frozen=True)
class TargetEvent:
    """A target present on pulses ``from_pulse..to_pulse`` (inclusive)."""

    from_pulse: int
    to_pulse: int
    nu: float
    snr_db: float

    def __post_init__(self):
        if self.from_pulse < 1 or self.to_pulse < self.from_pulse:
            raise ValueError(f"invalid pulse range {self.from_pulse}..{self.to_pulse}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")

    def active(self, k: int) -> bool:
        return self.from_pulse <= k <= self.to_pulse


@dataclass(frozen=True)
class Scenario:
    cfg: ArrayConfig
    disturbance: DisturbanceSpec
    events: tuple[TargetEvent, ...] = ()
    pulses: int = 50
    mc_runs: int = 200
    p_fa: float = 1e-2
    policy: Policy = Policy.RL
    agent: AgentConfig = field(default_factory=AgentConfig)
    seed: int = 0
    total_power: float = 1.0
    shared_disturbance: bool = False
    shared_covariance: bool = False
    lag: int | None = None
    ica_tol: float = DEFAULT_TOL
    ica_max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "policy", Policy.parse(self.policy))
        if self.pulses < 1:
            raise ValueError("pulses must be >= 1")
        if self.mc_runs < 1:
            raise ValueError("mc_runs must be >= 1")
        if not 0.0 < self.p_fa <= 1.0:
            raise ValueError(f"p_fa must lie in (0, 1], got {self.p_fa}")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")
        for ev in self.events:
            self.cfg.bin_index(ev.nu)
            if ev.to_pulse > self.pulses:
                raise ValueError(f"event ends at pulse {ev.to_pulse} beyond the {self.pulses} simulated")
        for k in range(1, self.pulses + 1):
            bins = [self.cfg.bin_index(ev.nu) for ev in self.events if ev.active(k)]
            if len(bins) != len(set(bins)):
                raise ValueError(f"two targets share one bin at pulse {k}")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def amplitudes(self, k: int, clutter_power: float) -> np.ndarray:
        """``|alpha|`` per bin on pulse ``k`` (0 where no target)."""
        amp = np.zeros(self.cfg.n_bins)
        for ev in self.events:
            if ev.active(k):
                amp[self.cfg.bin_index(ev.nu)] = math.sqrt(10.0 ** (ev.snr_db / 10.0) * clutter_power)
        return amp


@dataclass
class PulseRecord:
    k: int
    decisions: BinDecisions
    state: int  # state reached after this pulse
    action: int  # action used on this pulse (bins illuminated)
    reward: float
    chosen: tuple[int, ...]
    beam_min_pattern: float


def synthesize_return(w: np.ndarray, bin_index: int, active_targets, disturbance: DisturbanceSpec,
                      rng: np.random.Generator, cfg: ArrayConfig,
                      clutter_power: float | None = None) -> np.ndarray:
    """Received vector for one bin: ``alpha h + c`` if a target sits in it, else ``c``.

    ``active_targets`` is an iterable of ``(nu, snr_db)`` pairs.
    """
    nu = cfg.grid[bin_index]
    hits = [snr for t_nu, snr in active_targets if cfg.bin_index(t_nu) == bin_index]
    if len(hits) > 1:
        raise ValueError(f"{len(hits)} targets in bin {bin_index}")
    c = generate(disturbance, cfg.n_virtual, rng)
    if not hits:
        return c
    power = marginal_power(disturbance) if clutter_power is None else clutter_power
    alpha = math.sqrt(10.0 ** (hits[0] / 10.0) * power) * np.exp(2j * np.pi * rng.random())
    return alpha * virtual_channel(w, nu, cfg) + c


def _pulse_returns(scenario: Scenario, w: np.ndarray, amp: np.ndarray, rng: np.random.Generator):
    cfg = scenario.cfg
    h = virtual_channel(w, np.asarray(cfg.grid), cfg)
    if scenario.shared_disturbance:
        c = np.broadcast_to(generate(scenario.disturbance, cfg.n_virtual, rng), h.shape)
    else:
        c = generate(scenario.disturbance, cfg.n_virtual, rng, batch=cfg.n_bins)
    phase = np.exp(2j * np.pi * rng.random(cfg.n_bins))
    return h, (amp * phase)[:, None] * h + c


def _beam(scenario: Scenario, bins) -> tuple[np.ndarray, float]:
    cfg = scenario.cfg
    if not bins:
        w = omni_weights(cfg.n_tx, scenario.total_power)
        return w, math.nan
    targets = tuple(cfg.grid[b] for b in sorted(bins))
    state = synthesize(BeamProblem(targets, scenario.total_power, cfg),
                       max_iters=scenario.ica_max_iters, tol=scenario.ica_tol)
    return state.w_current, state.min_pattern


def run_episode(scenario: Scenario, rng: np.random.Generator, detector: Detector | None = None,
                trace: Trace | None = None) -> list[PulseRecord]:
    """One closed-loop episode of ``scenario.pulses`` pulses."""
    cfg = scenario.cfg
    lam = threshold(scenario.p_fa)
    if detector is None:
        def detector(h, y, lam_):
            return detect_bins(h, y, lam_, lag=scenario.lag, shared_covariance=scenario.shared_covariance)
    emit = trace or (lambda *args, **kw: None)
    power = marginal_power(scenario.disturbance)
    agent = scenario.agent
    limit = min(agent.max_targets, cfg.n_bins)
    q = QTable(agent.max_targets)

    w = omni_weights(cfg.n_tx, scenario.total_power)
    beam_value = math.nan
    state, action = 1, 1
    chosen: tuple[int, ...] | None = None  # bins the current beam was built for
    records = []
    for k in range(1, scenario.pulses + 1):
        emit("transmit", k=k, w=w)
        h, y = _pulse_returns(scenario, w, scenario.amplitudes(k, power), rng)
        dec = detector(h, y, lam)
        emit("detect", k=k, decisions=dec)
        s_next = extract_state(dec.flag, agent.max_targets)
        emit("state", k=k, state=s_next)

        if scenario.policy is Policy.RL:
            if chosen is None:
                # cold start: W_1 is omnidirectional, score the top-a_0 bins
                chosen = build_action_set(dec.statistic, min(action, cfg.n_bins)).bins
            if agent.reward_mode is RewardMode.STATE_COUNT:
                scored = build_action_set(dec.statistic, min(state, cfg.n_bins)).bins
            else:
                scored = chosen
            r = reward(dec.pd_hat, scored)
            emit("reward", k=k, reward=r, bins=scored)
            a_next = select_action(q, s_next, agent.epsilon_at(k), rng)
            next_bins = build_action_set(dec.statistic, min(a_next, limit)).bins
            emit("action", k=k, action=a_next, bins=next_bins)
            sarsa_update(q, state, action, r, s_next, a_next, agent)
            emit("update", k=k, q=q)
            records.append(PulseRecord(k, dec, s_next, action, r, chosen, beam_value))
            state, action = s_next, a_next
            chosen = next_bins
        elif scenario.policy is Policy.ADAPTIVE:
            used = chosen or ()
            r = reward(dec.pd_hat, used)
            records.append(PulseRecord(k, dec, s_next, len(used), r, used, beam_value))
            chosen = tuple(int(b) for b in np.flatnonzero(dec.flag))
        else:
            records.append(PulseRecord(k, dec, s_next, 0, math.nan, (), beam_value))
            chosen = ()

        if k < scenario.pulses:
            # a zero state falls back to omnidirectional transmission
            illuminate = chosen if scenario.policy is not Policy.RL or s_next != 0 else ()
            w, beam_value = _beam(scenario, illuminate)
            emit("beam", k=k, bins=chosen, w=w)
    return records


@dataclass
class Report:
    """Monte Carlo averages; arrays are indexed ``[pulse - 1, bin]``."""

    scenario: Scenario
    runs: int
    detect_freq: np.ndarray
    pd_hat_mean: np.ndarray
    reward_mean: np.ndarray
    state_mean: np.ndarray
    action_mean: np.ndarray
    rewards: np.ndarray  # [run, pulse - 1]

    def target_detection(self, nu: float, pulses: range | None = None) -> float:
        """Detection frequency of bin ``nu`` averaged over ``pulses`` (1-based)."""
        b = self.scenario.cfg.bin_index(nu)
        ks = range(1, self.scenario.pulses + 1) if pulses is None else pulses
        return float(np.mean([self.detect_freq[k - 1, b] for k in ks]))

    def false_alarm_rate(self) -> float:
        """Flag frequency over all bins and pulses that host no target."""
        mask = np.ones(self.detect_freq.shape, dtype=bool)
        cfg = self.scenario.cfg
        for ev in self.scenario.events:
            mask[ev.from_pulse - 1 : ev.to_pulse, cfg.bin_index(ev.nu)] = False
        return float(self.detect_freq[mask].mean())


def _episode_arrays(scenario: Scenario, seed_seq: np.random.SeedSequence):
    records = run_episode(scenario, np.random.default_rng(seed_seq))
    flags = np.array([r.decisions.flag for r in records], dtype=float)
    pd = np.array([r.decisions.pd_hat for r in records])
    rewards = np.array([r.reward for r in records])
    states = np.array([r.state for r in records], dtype=float)
    actions = np.array([r.action for r in records], dtype=float)
    return flags, pd, rewards, states, actions


def run_monte_carlo(scenario: Scenario, workers: int = 1) -> Report:
    """Independent episodes seeded from ``scenario.seed``, averaged per pulse and bin."""
    seeds = np.random.SeedSequence(scenario.seed).spawn(scenario.mc_runs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_episode_arrays, [scenario] * len(seeds), seeds))
    else:
        results = [_episode_arrays(scenario, s) for s in seeds]
    flags, pd, rewards, states, actions = (np.stack(x) for x in zip(*results))
    return Report(
        scenario=scenario,
        runs=scenario.mc_runs,
        detect_freq=flags.mean(axis=0),
        pd_hat_mean=pd.mean(axis=0),
        reward_mean=rewards.mean(axis=0),
        state_mean=states.mean(axis=0),
        action_mean=actions.mean(axis=0),
        rewards=rewards,
    )
