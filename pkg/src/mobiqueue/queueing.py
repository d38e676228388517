"""Service maps, arrivals, the Lindley workload recursion and packet delays."""

from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ParameterError

SHANNON, TRUNCATED, INDICATOR = 0, 1, 2


@dataclass(frozen=True)
class Shannon:
    """Rate ``log2(1 + sinr)``."""

    code = SHANNON
    threshold = 0.0


@dataclass(frozen=True)
class TruncatedShannon:
    """Rate ``log2(1 + sinr)`` when ``sinr > threshold``, else zero."""

    threshold: float
    code = TRUNCATED

    def __post_init__(self):
        if not self.threshold > 0:
            raise ParameterError("threshold must be positive")


@dataclass(frozen=True)
class Indicator:
    """Unit rate when ``sinr > threshold``, else zero."""

    threshold: float
    code = INDICATOR

    def __post_init__(self):
        if not self.threshold > 0:
            raise ParameterError("threshold must be positive")


def service_rate(policy, sinr):
    """Service rate (work per unit time) at the given SINR.

    ``sinr`` may contain ``inf`` (no interference and no noise).
    """
    x = np.asarray(sinr, dtype=float)
    if np.any(x < 0):
        raise ParameterError("sinr must be nonnegative")
    if policy.code == INDICATOR:
        out = (x > policy.threshold).astype(float)
    else:
        out = np.log2(1.0 + x)
        if policy.code == TRUNCATED:
            out = np.where(x > policy.threshold, out, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Bernoulli:
    """One unit packet per slot with probability ``rate * slot``."""

    rate: float

    def sample(self, n_slots, slot, rng, size=None):
        p = self.rate * slot
        if not 0 <= p <= 1:
            raise ParameterError("Bernoulli probability out of range")
        shape = n_slots if size is None else (n_slots, size)
        return (rng.random(shape) < p).astype(float)


@dataclass(frozen=True)
class DeterministicRate:
    """Exactly ``rate * slot`` units of work per slot."""

    rate: float

    def sample(self, n_slots, slot, rng=None, size=None):
        shape = n_slots if size is None else (n_slots, size)
        return np.full(shape, self.rate * slot)


@dataclass(frozen=True)
class Schedule:
    """Tick and slot lengths, horizon and warmup, both in slots."""

    tick: float
    slot: float
    horizon: int
    warmup: int | None = None

    def __post_init__(self):
        if not (self.tick > 0 and self.slot > 0):
            raise ParameterError("tick and slot must be positive")
        k = self.slot / self.tick
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ParameterError("slot must be a whole number of ticks")
        if self.horizon < 1:
            raise ParameterError("horizon must be at least one slot")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 5)
        if not 0 <= self.warmup < self.horizon:
            raise ParameterError("warmup must be shorter than horizon")

    @property
    def ticks_per_slot(self):
        return int(round(self.slot / self.tick))


def slot_service(tick_rates, tick):
    """Work offered in one slot: left-endpoint sum of tick rates times ``tick``."""
    return float(np.sum(np.asarray(tick_rates, dtype=float)) * tick)


def lindley_step(W, A, V):
    """One workload update ``max(W + A - V, 0)``."""
    if W < 0 or A < 0 or V < 0:
        raise ParameterError("workload, arrivals and service must be nonnegative")
    return max(W + A - V, 0.0)


def lindley_path(arrivals, services, w0=0.0):
    """Workload after each slot, starting from ``w0``; length ``n + 1``."""
    a = np.asarray(arrivals, dtype=float)
    v = np.asarray(services, dtype=float)
    out = np.empty(a.size + 1)
    out[0] = w = float(w0)
    for n in range(a.size):
        w = w + a[n] - v[n]
        if w < 0.0:
            w = 0.0
        out[n + 1] = w
    return out


@dataclass
class QueueState:
    """Workload with the cumulative work counters behind it.

    Unit packets wait in ``pending`` (arrival slots, FIFO).
    """

    workload: float = 0.0
    cumulative_arrived: float = 0.0
    cumulative_departed: float = 0.0
    pending: deque = field(default_factory=deque)

    def step(self, slot, arrived, offered):
        """Apply one slot and return the departure records it produced.

        Returns
        -------
        list of (arrival_slot, departure_slot)
        """
        for _ in range(int(round(arrived))):
            self.pending.append(slot)
        new = lindley_step(self.workload, arrived, offered)
        self.cumulative_arrived += arrived
        self.cumulative_departed += self.workload + arrived - new
        self.workload = new
        done = []
        served = int(math.floor(self.cumulative_departed + 1e-9))
        first = int(round(self.cumulative_arrived)) - len(self.pending)
        while self.pending and first < served:
            done.append((self.pending.popleft(), slot + 1))
            first += 1
        return done


@dataclass(frozen=True)
class PacketDelays:
    """Per-packet delays in slots; censored packets are counted, not listed."""

    packet_id: np.ndarray
    arrival_slot: np.ndarray
    departure_slot: np.ndarray
    censored: int

    @property
    def delay(self):
        return self.departure_slot - self.arrival_slot

    def __len__(self):
        return self.packet_id.size


def packet_delays(arrivals, services, w0=0.0):
    """FIFO delays of unit packets.

    Packet ``k`` (counted from one) leaves at the end of the first slot ``m``
    by which cumulative departed work reaches ``k``; its delay is
    ``m + 1 - arrival_slot``, so a packet served within its arrival slot has
    delay one. Initial workload ``w0`` is served first and is not a packet.
    """
    a = np.asarray(arrivals, dtype=float)
    w = lindley_path(a, services, w0)
    departed = np.cumsum(w[:-1] + a - w[1:]) - w0
    counts = np.rint(a).astype(np.int64)
    arrival_slot = np.repeat(np.arange(a.size), counts)
    k = np.arange(1, arrival_slot.size + 1)
    m = np.searchsorted(departed, k - 1e-9, side="left")
    done = m < a.size
    return PacketDelays(k[done] - 1, arrival_slot[done], m[done] + 1, int((~done).sum()))


def run_single_queue(config, replication=0, record_series=False):
    """Simulate one queue; see ``mobiqueue.simulate.run_single_queue``."""
    from .simulate import run_single_queue as run
    return run(config, replication, record_series)


def run_interacting(config, replication=0):
    """Simulate the interacting system; see ``mobiqueue.simulate.run_interacting``."""
    from .simulate import run_interacting as run
    return run(config, replication)
