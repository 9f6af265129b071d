"""Line-oriented scenario files and the bundled presets.

A file is a sequence of ``[section]`` headers followed by ``key = value``
lines.  ``#`` starts a comment.  Sections: ``array``, ``disturbance``,
``run``, ``agent`` (each at most once) and ``target`` (repeatable, one per
target event).  See the README for every key and its default.
"""

from __future__ import annotations

import math
from dataclasses import fields
from pathlib import Path

from .agent import AgentConfig, RewardMode
from .array import ArrayConfig
from .disturbance import DisturbanceSpec, six_pole_clutter
from .simulator import Policy, Scenario, TargetEvent


class ScenarioError(Exception):
    """Base class for scenario file problems."""


class ScenarioFileNotFound(ScenarioError, FileNotFoundError):
    pass


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ScenarioValueError(ScenarioError, ValueError):
    def __init__(self, field_name: str, message: str, line: int | None = None):
        self.field = field_name
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field_name}{where}: {message}")


_SECTIONS = {
    "array": {"n_tx", "n_rx", "grid"},
    "disturbance": {"model", "coeffs", "poles", "shape", "sigma2"},
    "run": {"pulses", "mc_runs", "p_fa", "policy", "seed", "total_power", "shared_disturbance",
            "shared_covariance", "lag", "ica_tol", "ica_max_iters"},
    "agent": {f.name for f in fields(AgentConfig)},
    "target": {"nu", "snr_db", "from", "to"},
}
_SINGLE = {"array", "disturbance", "run", "agent"}


def _tokenize(text: str):
    """Yield ``(section, {key: (value, line)}, header_line)`` blocks."""
    blocks = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioSyntaxError(f"unterminated section header {raw.strip()!r}", lineno)
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ScenarioSyntaxError(f"unknown section [{name}]", lineno)
            if name in _SINGLE and any(b[0] == name for b in blocks):
                raise ScenarioSyntaxError(f"section [{name}] appears twice", lineno)
            current = (name, {}, lineno)
            blocks.append(current)
            continue
        if "=" not in line:
            raise ScenarioSyntaxError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if current is None:
            raise ScenarioSyntaxError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _SECTIONS[current[0]]:
            raise ScenarioSyntaxError(f"unknown key {key!r} in [{current[0]}]", lineno)
        if key in current[1]:
            raise ScenarioSyntaxError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ScenarioSyntaxError(f"empty value for {key!r}", lineno)
        current[1][key] = (value, lineno)
    return blocks


def _convert(kind, key, entry):
    value, line = entry
    try:
        if kind is bool:
            low = value.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(f"expected a boolean, got {value!r}")
            return low in ("true", "yes", "1")
        if kind is int:
            as_float = float(value)
            if not as_float.is_integer():
                raise ValueError(f"expected an integer, got {value!r}")
            return int(as_float)
        return kind(value)
    except ValueError as exc:
        raise ScenarioSyntaxError(f"{key}: {exc}", line) from None


def _floats(key, entry) -> tuple[float, ...]:
    value, line = entry
    try:
        return tuple(float(v) for v in value.replace(",", " ").split())
    except ValueError:
        raise ScenarioSyntaxError(f"{key}: expected a list of numbers, got {value!r}", line) from None


def _grid(entry):
    value, line = entry
    words = value.split()
    if words and words[0].lower() == "uniform":
        if len(words) != 4:
            raise ScenarioSyntaxError("grid: expected 'uniform <bins> <lo> <hi>'", line)
        try:
            bins, lo, hi = int(words[1]), float(words[2]), float(words[3])
        except ValueError:
            raise ScenarioSyntaxError(f"grid: bad uniform spec {value!r}", line) from None
        return ("uniform", bins, lo, hi)
    return _floats("grid", entry)


def _complexes(key, entry):
    value, line = entry
    try:
        return tuple(complex(v.strip()) for v in value.split(",") if v.strip())
    except ValueError:
        raise ScenarioSyntaxError(f"{key}: expected comma-separated complex numbers, got {value!r}", line) from None


def _guard(field_name, line, build):
    try:
        return build()
    except ValueError as exc:
        raise ScenarioValueError(field_name, str(exc), line) from None


def scenario_from_text(text: str) -> Scenario:
    blocks = _tokenize(text)
    sections = {name: (keys, hdr) for name, keys, hdr in blocks if name in _SINGLE}
    if "array" not in sections:
        raise ScenarioSyntaxError("missing [array] section")

    keys, hdr = sections["array"]
    for required in ("n_tx", "n_rx"):
        if required not in keys:
            raise ScenarioValueError(f"array.{required}", "required", hdr)
    n_tx = _convert(int, "n_tx", keys["n_tx"])
    n_rx = _convert(int, "n_rx", keys["n_rx"])
    grid_spec = _grid(keys["grid"]) if "grid" in keys else ("uniform", 20, -0.5, 0.45)
    grid_line = keys["grid"][1] if "grid" in keys else hdr
    if grid_spec and grid_spec[0] == "uniform":
        _, bins, lo, hi = grid_spec
        cfg = _guard("array", grid_line, lambda: ArrayConfig.uniform(n_tx, n_rx, bins, lo, hi))
    else:
        cfg = _guard("array", grid_line, lambda: ArrayConfig(n_tx, n_rx, grid_spec))

    keys, hdr = sections.get("disturbance", ({}, None))
    shape = _convert(float, "shape", keys["shape"]) if "shape" in keys else 2.0
    sigma2 = _convert(float, "sigma2", keys["sigma2"]) if "sigma2" in keys else 1.0
    shape_line = keys.get("shape", (None, hdr))[1]
    if not shape > 1:
        raise ScenarioValueError("disturbance.shape", f"shape parameter μ must satisfy μ ∈ (1,∞), got {shape}", shape_line)
    given = [k for k in ("model", "coeffs", "poles") if k in keys]
    if len(given) > 1:
        raise ScenarioValueError("disturbance", f"give only one of model/coeffs/poles, got {given}", hdr)
    if "coeffs" in keys:
        coeffs = _complexes("coeffs", keys["coeffs"])
        disturbance = _guard("disturbance.coeffs", keys["coeffs"][1],
                             lambda: DisturbanceSpec(coeffs, shape, sigma2))
    elif "poles" in keys:
        poles = _complexes("poles", keys["poles"])
        disturbance = _guard("disturbance.poles", keys["poles"][1],
                             lambda: DisturbanceSpec.from_poles(poles, shape, sigma2))
    else:
        model = keys["model"][0].lower() if "model" in keys else "six-pole"
        line = keys.get("model", (None, hdr))[1]
        if model == "six-pole":
            disturbance = _guard("disturbance", line, lambda: six_pole_clutter(shape, sigma2))
        elif model == "white":
            disturbance = _guard("disturbance", line, lambda: DisturbanceSpec((), shape, sigma2))
        else:
            raise ScenarioValueError("disturbance.model", f"unknown model {model!r} (six-pole, white)", line)

    keys, hdr = sections.get("agent", ({}, None))
    agent_kwargs = {}
    for f in fields(AgentConfig):
        if f.name in keys:
            kind = int if f.name == "max_targets" else (str if f.name == "reward_mode" else float)
            agent_kwargs[f.name] = _convert(kind, f.name, keys[f.name])
    if "reward_mode" in agent_kwargs:
        agent_kwargs["reward_mode"] = _guard("agent.reward_mode", keys["reward_mode"][1],
                                             lambda: RewardMode(agent_kwargs["reward_mode"]))
    agent = _guard("agent", hdr, lambda: AgentConfig(**agent_kwargs))

    keys, hdr = sections.get("run", ({}, None))
    run = {}
    kinds = {"pulses": int, "mc_runs": int, "p_fa": float, "policy": str, "seed": int,
             "total_power": float, "shared_disturbance": bool, "shared_covariance": bool,
             "ica_tol": float, "ica_max_iters": int}
    for key, kind in kinds.items():
        if key in keys:
            run[key] = _convert(kind, key, keys[key])
    if "policy" in run:
        run["policy"] = _guard("run.policy", keys["policy"][1], lambda: Policy.parse(run["policy"]))
    if "lag" in keys and keys["lag"][0].lower() != "auto":
        run["lag"] = _convert(int, "lag", keys["lag"])
    pulses = run.get("pulses", 50)

    events = []
    for name, tkeys, thdr in blocks:
        if name != "target":
            continue
        for required in ("nu", "snr_db"):
            if required not in tkeys:
                raise ScenarioValueError(f"target.{required}", "required", thdr)
        nu = _convert(float, "nu", tkeys["nu"])
        snr = _convert(float, "snr_db", tkeys["snr_db"])
        start = _convert(int, "from", tkeys["from"]) if "from" in tkeys else 1
        stop = _convert(int, "to", tkeys["to"]) if "to" in tkeys else pulses
        _guard("target.nu", tkeys["nu"][1], lambda: cfg.bin_index(nu))
        events.append(_guard("target", thdr, lambda: TargetEvent(start, stop, nu, snr)))

    line = hdr
    return _guard("run", line, lambda: Scenario(cfg=cfg, disturbance=disturbance, events=tuple(events),
                                                agent=agent, **run))


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioFileNotFound(f"scenario file not found: {path}") from None
    except IsADirectoryError:
        raise ScenarioFileNotFound(f"scenario path is a directory: {path}") from None
    return scenario_from_text(text)


def _num(x: float) -> str:
    return repr(float(x))


def _cnum(z: complex) -> str:
    z = complex(z)
    return repr(z).strip("()") if z.imag else f"{_num(z.real)}+0j"


def emit_scenario(scenario: Scenario) -> str:
    """Text form that :func:`scenario_from_text` reads back to an equal scenario."""
    cfg, dist, agent = scenario.cfg, scenario.disturbance, scenario.agent
    lines = [
        "[array]",
        f"n_tx = {cfg.n_tx}",
        f"n_rx = {cfg.n_rx}",
        "grid = " + ", ".join(_num(g) for g in cfg.grid),
        "",
        "[disturbance]",
    ]
    if dist.coeffs:
        lines.append("coeffs = " + ", ".join(_cnum(c) for c in dist.coeffs))
    else:
        lines.append("model = white")
    lines += [f"shape = {_num(dist.shape)}", f"sigma2 = {_num(dist.sigma2)}", "", "[run]",
              f"pulses = {scenario.pulses}", f"mc_runs = {scenario.mc_runs}", f"p_fa = {_num(scenario.p_fa)}",
              f"policy = {scenario.policy.value}", f"seed = {scenario.seed}",
              f"total_power = {_num(scenario.total_power)}",
              f"shared_disturbance = {str(scenario.shared_disturbance).lower()}",
              f"shared_covariance = {str(scenario.shared_covariance).lower()}",
              f"lag = {'auto' if scenario.lag is None else scenario.lag}",
              f"ica_tol = {_num(scenario.ica_tol)}", f"ica_max_iters = {scenario.ica_max_iters}",
              "", "[agent]",
              f"learning_rate = {_num(agent.learning_rate)}", f"discount = {_num(agent.discount)}",
              f"epsilon = {_num(agent.epsilon)}", f"max_targets = {agent.max_targets}",
              f"epsilon_decay = {_num(agent.epsilon_decay)}", f"reward_mode = {agent.reward_mode.value}"]
    for ev in scenario.events:
        lines += ["", "[target]", f"nu = {_num(ev.nu)}", f"snr_db = {_num(ev.snr_db)}",
                  f"from = {ev.from_pulse}", f"to = {ev.to_pulse}"]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- presets

STATIONARY_NU = (-0.2, 0.0, 0.2, 0.3)
STATIONARY_SNR_DB = (-5.0, -8.0, -10.0, -9.0)
SWITCHED_NU = (-0.05, 0.05, 0.25, 0.35)
ROC_PFA = (1e-5, 1e-4, 1e-3, 1e-2, 1.0)
SWEEP_N = (10, 12, 16, 21, 27, 35, 46, 59, 77, 100)


def _base(pulses: int, events, n: int = 32) -> Scenario:
    return Scenario(cfg=ArrayConfig.uniform(n, n), disturbance=six_pole_clutter(), events=tuple(events),
                    pulses=pulses, mc_runs=200, p_fa=1e-2)


def _stationary(pulses=50):
    return [TargetEvent(1, pulses, nu, s) for nu, s in zip(STATIONARY_NU, STATIONARY_SNR_DB)]


def _fading(pulses=120, period=30, step=0.2):
    events = []
    for start in range(1, pulses + 1, period):
        stop = min(start + period - 1, pulses)
        factor = max(1.0 - step * ((start - 1) // period), 1e-3)
        for nu, s in zip(STATIONARY_NU, STATIONARY_SNR_DB):
            events.append(TargetEvent(start, stop, nu, s + 10.0 * math.log10(factor)))
    return events


def _changing_count():
    intervals = [
        (1, 10, [(-0.2, -5), (0.0, -9)]),
        (11, 20, []),
        (21, 35, [(-0.2, -6), (0.0, -8), (0.15, -10), (0.25, -11), (0.3, -12)]),
        (36, 50, [(0.0, -9), (0.2, -8)]),
        (51, 60, [(-0.05, -8), (0.05, -7), (0.25, -10), (0.35, -13)]),
    ]
    return [TargetEvent(a, b, nu, s) for a, b, targets in intervals for nu, s in targets]


def preset(name: str) -> Scenario:
    """Desk-scale versions of the six reference scenarios."""
    if name in ("scenario1", "scenario2", "scenario3"):
        return _base(50, _stationary())
    if name == "scenario4":
        events = [TargetEvent(1, 50, nu, s) for nu, s in zip(STATIONARY_NU, STATIONARY_SNR_DB)]
        events += [TargetEvent(51, 100, nu, s) for nu, s in zip(SWITCHED_NU, STATIONARY_SNR_DB)]
        return _base(100, events)
    if name == "scenario5":
        return _base(120, _fading())
    if name == "scenario6":
        return _base(60, _changing_count())
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = tuple(f"scenario{i}" for i in range(1, 7))
