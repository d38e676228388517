"""Experiment configuration: a flat INI-like text format with validation.

Grammar
-------
One item per line. ``[name]`` opens a section; ``key = value`` sets a key in
the current section; blank lines and lines starting with ``#`` or ``;`` are
ignored. Lists are comma separated. Keys may appear once per section.
"""

from dataclasses import dataclass, field, fields, replace
import math

from .channel import Bounded, DeterministicUnit, PowerLaw, Rayleigh, TablePathLoss
from .geometry import Arena
from .mobility import Brownian, RandomDirection, RandomWaypoint, Static
from .queueing import Bernoulli, DeterministicRate, Indicator, Schedule, Shannon, TruncatedShannon

MODES = ("single", "interacting", "static")
MOBILITY = ("static", "rd", "rwp", "bm")
POLICIES = ("shannon", "truncated", "indicator")
PATH_LOSSES = ("bounded", "power", "table")
FADINGS = ("rayleigh", "deterministic")
PLACEMENTS = ("poisson", "fixed")
SAMPLING = ("exact", "conditional")
SWEEP_AXES = ("velocity", "model", "rate", "load")


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists ``(line, message)`` pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"line {n}: {m}" if n else m for n, m in self.violations))


def _item(section, default, kind=float, choices=None):
    return field(default=default, metadata={"section": section, "kind": kind, "choices": choices})


@dataclass(frozen=True)
class SweepSpec:
    """Grid of parameter points; axes combine as a Cartesian product."""

    axes: tuple = ()

    def points(self):
        """List of ``{axis: value}`` dicts in row-major order."""
        out = [{}]
        for name, values in self.axes:
            out = [dict(p, **{name: v}) for p in out for v in values]
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameter set of one experiment."""

    side_length: float = _item("arena", 100.0)
    placement: str = _item("arena", "poisson", str, PLACEMENTS)

    intensity: float = _item("network", 0.1)
    link_distance: float = _item("network", 0.3)
    noise: float = _item("network", 0.0)

    path_loss: str = _item("channel", "bounded", str, PATH_LOSSES)
    exponent: float = _item("channel", 4.0)
    scale: float = _item("channel", 1.0)
    table_distances: tuple = _item("channel", (), "list")
    table_gains: tuple = _item("channel", (), "list")
    signal_fading: str = _item("channel", "rayleigh", str, FADINGS)
    signal_rate: float = _item("channel", 1.0)
    interferer_fading: str = _item("channel", "rayleigh", str, FADINGS)
    interferer_rate: float = _item("channel", 1.0)
    coherence: int = _item("channel", 1, int)

    model: str = _item("mobility", "rd", str, MOBILITY)
    velocity: float = _item("mobility", 1.0)
    leg_duration: float = _item("mobility", 1.0)

    policy: str = _item("service", "truncated", str, POLICIES)
    threshold: float = _item("service", 8.0)
    sampling: str = _item("service", "exact", str, SAMPLING)

    arrivals: str = _item("arrivals", "bernoulli", str, ("bernoulli", "deterministic"))
    rate: float = _item("arrivals", 1.2)
    load: float = _item("arrivals", 0.0)

    tick: float = _item("schedule", 1e-3)
    slot: float = _item("schedule", 1e-3)
    horizon: int = _item("schedule", 100000, int)
    warmup: int = _item("schedule", -1, int)

    mode: str = _item("run", "single", str, MODES)
    replications: int = _item("run", 1, int)
    seed: int = _item("run", 0, int)
    snapshots: int = _item("run", 10000, int)
    lag: float = _item("run", 1.0)

    sweep: SweepSpec = field(default_factory=SweepSpec, metadata={"section": "sweep"})

    # derived objects --------------------------------------------------

    @property
    def arena(self):
        return Arena(self.side_length)

    @property
    def path_loss_law(self):
        if self.path_loss == "bounded":
            return Bounded(self.exponent)
        if self.path_loss == "power":
            return PowerLaw(self.scale, self.exponent, 1e-6 * self.link_distance)
        return TablePathLoss(self.table_distances, self.table_gains)

    def _fading(self, kind, rate):
        if kind == "rayleigh":
            return Rayleigh(rate, self.coherence)
        return DeterministicUnit(self.coherence)

    @property
    def signal_fade(self):
        return self._fading(self.signal_fading, self.signal_rate)

    @property
    def interferer_fade(self):
        return self._fading(self.interferer_fading, self.interferer_rate)

    @property
    def mobility(self):
        v = self.velocity
        if self.mode == "static" or self.model == "static":
            return Static()
        if self.model == "rd":
            return RandomDirection(v)
        if self.model == "rwp":
            return RandomWaypoint(v, self.leg_duration)
        return Brownian.from_velocity(v, self.tick)

    @property
    def service_policy(self):
        if self.policy == "shannon":
            return Shannon()
        if self.policy == "truncated":
            return TruncatedShannon(self.threshold)
        return Indicator(self.threshold)

    @property
    def arrival_process(self):
        if self.arrivals == "bernoulli":
            return Bernoulli(self.rate)
        return DeterministicRate(self.rate)

    @property
    def schedule(self):
        warm = None if self.warmup < 0 else self.warmup
        return Schedule(self.tick, self.slot, self.horizon, warm)

    @property
    def point_count(self):
        """Interferer count under fixed placement."""
        return int(round(self.intensity * self.side_length ** 2))

    def with_values(self, **changes):
        return replace(self, **changes)


_FIELDS = [f for f in fields(ExperimentConfig) if f.name != "sweep"]
_BY_KEY = {(f.metadata["section"], f.name): f for f in _FIELDS}
SECTIONS = tuple(dict.fromkeys(f.metadata["section"] for f in _FIELDS)) + ("sweep",)


def _convert(f, raw):
    kind = f.metadata["kind"]
    if kind == "list":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if kind is int:
        value = float(raw)
        if value != int(value):
            raise ValueError(f"{raw!r} is not a whole number")
        return int(value)
    if kind is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(f"{raw!r} is not finite")
        return value
    value = raw.strip().lower()
    if f.metadata["choices"] and value not in f.metadata["choices"]:
        raise ValueError(f"{raw!r} is not one of {', '.join(f.metadata['choices'])}")
    return value


def _convert_axis(name, raw):
    items = [x.strip() for x in raw.split(",") if x.strip()]
    if name == "model":
        bad = [x for x in items if x not in MOBILITY]
        if bad:
            raise ValueError(f"unknown mobility model {bad[0]!r}")
        return tuple(items)
    return tuple(float(x) for x in items)


def parse_config(text):
    """Parse and validate configuration text.

    Raises
    ------
    ConfigError
        Listing every violation found, each with its line number.
    """
    values, lines, problems = {}, {}, []
    axes = []
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            if section not in SECTIONS:
                problems.append((n, f"unknown section [{section}]"))
            continue
        if "=" not in s:
            problems.append((n, f"expected 'key = value', got {s!r}"))
            continue
        key, raw = (p.strip() for p in s.split("=", 1))
        key = key.lower()
        if section is None:
            problems.append((n, f"key {key!r} outside any section"))
            continue
        if section == "sweep":
            if key not in SWEEP_AXES:
                problems.append((n, f"unknown sweep axis {key!r}"))
                continue
            try:
                axes.append((key, _convert_axis(key, raw), n))
            except ValueError as exc:
                problems.append((n, f"{key}: {exc}"))
            continue
        f = _BY_KEY.get((section, key))
        if f is None:
            if section in SECTIONS:
                problems.append((n, f"unknown key {key!r} in [{section}]"))
            continue
        if key in values:
            problems.append((n, f"duplicate key {key!r}"))
            continue
        try:
            values[key] = _convert(f, raw)
            lines[key] = n
        except ValueError as exc:
            problems.append((n, f"{key}: {exc}"))
    sweep = SweepSpec(tuple((k, v) for k, v, _ in axes))
    config = ExperimentConfig(**values, sweep=sweep)
    problems += [(lines.get(k, 0), m) for k, m in validate(config)]
    problems += [(n, m) for k, vals, n in axes for m in _check_axis(k, vals)]
    if problems:
        raise ConfigError(sorted(problems, key=lambda p: p[0]))
    return config


def _check_axis(name, values):
    if not values:
        return ["sweep axis has no values"]
    if name == "velocity":
        if list(values) != sorted(values):
            return ["velocity sweep must be sorted ascending"]
        base = values[0]
        if base <= 0:
            return ["velocity sweep values must be positive"]
        if any(abs(v / base - round(v / base)) > 1e-9 for v in values):
            return ["velocities must be integer multiples of the smallest one"]
    return []


def validate(c):
    """Return ``(key, message)`` pairs for every violated invariant."""
    out = []

    def need(cond, key, msg):
        if not cond:
            out.append((key, msg))

    need(c.side_length > 0, "side_length", "side_length must be positive")
    need(c.intensity >= 0, "intensity", "intensity must be nonnegative")
    need(c.link_distance > 0, "link_distance", "link_distance must be positive")
    need(c.noise >= 0, "noise", "noise must be nonnegative")
    need(c.exponent > 2, "exponent", "path-loss exponent must exceed 2")
    need(c.scale > 0, "scale", "scale must be positive")
    if c.path_loss == "table":
        try:
            TablePathLoss(c.table_distances, c.table_gains)
        except ValueError as exc:
            out.append(("table_gains", str(exc)))
    need(c.signal_rate > 0, "signal_rate", "signal_rate must be positive")
    need(c.interferer_rate > 0, "interferer_rate", "interferer_rate must be positive")
    need(c.coherence >= 1, "coherence", "coherence must be at least one tick")
    need(c.velocity >= 0, "velocity", "velocity must be nonnegative")
    need(c.leg_duration > 0, "leg_duration", "leg_duration must be positive")
    need(c.threshold > 0, "threshold", "threshold must be positive")
    need(c.rate >= 0, "rate", "arrival rate must be nonnegative")
    need(0 <= c.load < 1, "load", "load must lie in [0, 1)")
    if c.load > 0:
        need(c.policy == "indicator", "load", "load targets need the indicator policy")
    need(c.tick > 0, "tick", "tick must be positive")
    need(c.slot > 0, "slot", "slot must be positive")
    if c.tick > 0 and c.slot > 0:
        k = c.slot / c.tick
        need(abs(k - round(k)) < 1e-9 and round(k) >= 1, "slot", "slot must be a whole number of ticks")
    if c.arrivals == "bernoulli" and c.load == 0:
        need(c.rate * c.slot <= 1, "rate", "Bernoulli probability out of range")
    need(c.horizon >= 1, "horizon", "horizon must be at least one slot")
    need(c.warmup < c.horizon, "warmup", "warmup must be shorter than horizon")
    need(c.replications >= 1, "replications", "replications must be at least 1")
    need(c.snapshots >= 1, "snapshots", "snapshots must be at least 1")
    need(c.lag > 0, "lag", "lag must be positive")
    if c.sampling == "conditional":
        need(c.policy == "indicator" and c.signal_fading == "rayleigh" and c.coherence == 1,
             "sampling", "conditional sampling needs the indicator policy, Rayleigh signal fading and coherence 1")
    if c.mode == "interacting":
        need(c.arrivals == "bernoulli", "arrivals", "interacting mode needs Bernoulli arrivals")
    return out


def _format(value):
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(config):
    """Canonical text for ``config``; ``parse_config`` inverts it."""
    out, section = [], None
    for f in _FIELDS:
        sec = f.metadata["section"]
        if sec != section:
            out.append(f"{'' if section is None else chr(10)}[{sec}]")
            section = sec
        out.append(f"{f.name} = {_format(getattr(config, f.name))}")
    if config.sweep.axes:
        out.append("\n[sweep]")
        out += [f"{name} = {_format(tuple(vals))}" for name, vals in config.sweep.axes]
    return "\n".join(out) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
