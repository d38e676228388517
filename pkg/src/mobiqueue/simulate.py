"""Tick-level simulation drivers for the single queue and the interacting system."""

from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .channel import DeterministicUnit
from .errors import ParameterError
from .geometry import sample_ppp, sample_uniform
from .mobility import Brownian, RandomDirection, RandomWaypoint
from .queueing import packet_delays
from .rng import stream

CHUNK_TICKS = 4096
MODEL_CODES = {RandomDirection: 1, RandomWaypoint: 2, Brownian: 3}


def initial_configuration(config, replication=0):
    """Interferer positions at time zero for one replication."""
    rng = stream(config.seed, "placement", replication)
    if config.placement == "fixed":
        return sample_uniform(config.point_count, config.arena, rng)
    return sample_ppp(config.intensity, config.arena, rng)


def resolve_rate(config):
    """Arrival rate, derived from the target load when one is set.

    With a load target ``rho`` the per-slot work offered is ``rho`` times the
    exact mean slot service of the configured (finite, wrapped) arena.
    """
    if config.load <= 0:
        return config.rate
    from .analytics import SystemParams, prob_level_crossing, arena_spec
    p = prob_level_crossing(SystemParams.from_config(config), arena_spec(config)).value
    return config.load * p


@dataclass(frozen=True)
class _Motion:
    code: int
    speed: float
    leg: float
    sigma: float


def _motion(config):
    m = config.mobility
    code = MODEL_CODES.get(type(m), 0)
    if code == 3:
        return _Motion(3, 0.0, 1.0, m.sigma)
    if code == 0 or m.velocity == 0:
        return _Motion(0, 0.0, 1.0, 0.0)
    leg = m.leg_duration if code == 2 else 1.0
    return _Motion(code, m.velocity, leg, 0.0)


def _link(config):
    lp = config.path_loss_law
    code, par = lp.kernel_spec()
    l_signal = float(lp(config.link_distance))
    s_cond = config.signal_rate * config.threshold / l_signal
    det = isinstance(config.interferer_fade, DeterministicUnit)
    return code, par, l_signal, s_cond, det


@dataclass
class QueueRun:
    """Output of one single-queue run.

    ``workload[n]`` is the workload after ``n`` slots; ``arrivals[n]`` and
    ``service[n]`` are the work arriving and offered in slot ``n``.
    """

    config: object
    replication: int
    workload: np.ndarray
    arrivals: np.ndarray
    service: np.ndarray
    interference: np.ndarray | None = None
    sinr: np.ndarray | None = None
    n_points: int = 0

    @property
    def warmup(self):
        return self.config.schedule.warmup

    def steady_workload(self):
        return self.workload[self.warmup + 1:]

    def delays(self):
        return packet_delays(self.arrivals, self.service)


def run_single_queue(config, replication=0, record_series=False, n_slots=None):
    """Simulate the queue at the origin.

    Parameters
    ----------
    config : ExperimentConfig
    replication : int
        Selects the random sub-streams.
    record_series : bool
        Keep per-tick interference and SINR.
    n_slots : int, optional
        Override the configured horizon.

    Returns
    -------
    QueueRun
    """
    horizon = config.horizon if n_slots is None else int(n_slots)
    if horizon < 1:
        raise ParameterError("horizon must be at least one slot")
    sched = config.schedule
    tps, tick = sched.ticks_per_slot, config.tick
    rate = resolve_rate(config)
    arrivals_proc = type(config.arrival_process)(rate)
    r_arr = stream(config.seed, "arrivals", replication)
    r_head = stream(config.seed, "headings", replication)
    r_fade = stream(config.seed, "fades", replication)
    r_move = stream(config.seed, "motion", replication)
    r_serv = stream(config.seed, "service", replication)

    conf = initial_configuration(config, replication)
    n = len(conf)
    px = conf.points[:, 0].copy()
    py = conf.points[:, 1].copy()
    mo = _motion(config)
    head = r_head.uniform(0.0, 2 * math.pi, n)
    pl_code, pl_par, l_signal, s_cond, det = _link(config)
    conditional = config.sampling == "conditional"
    coherence = config.coherence
    policy = config.service_policy
    sig_model, int_model = config.signal_fade, config.interferer_fade

    W = np.zeros(horizon + 1)
    V = np.empty(horizon)
    A = np.empty(horizon)
    I_rec = np.empty(horizon * tps if record_series else 0)
    S_rec = np.empty(horizon * tps if record_series else 0)
    state = np.array([0.0, mo.leg, 0.0, -1.0, 0.0])
    # chunks start on fade-block boundaries so each chunk draws whole blocks
    block = math.lcm(tps, coherence)
    slots_per_chunk = block // tps * max(1, CHUNK_TICKS // block)
    empty2 = np.zeros((1, 1))
    empty3 = np.zeros((1, 1, 2))
    for start in range(0, horizon, slots_per_chunk):
        m = min(slots_per_chunk, horizon - start)
        K = m * tps
        rows = -(-K // coherence)
        A[start:start + m] = arrivals_proc.sample(m, config.slot, r_arr)
        if conditional:
            sig, intf = np.zeros(1), empty2
            unif = r_serv.random(K)
        else:
            sig = _fades(sig_model, rows, r_fade)
            intf = empty2 if det else _fades(int_model, (rows, n), r_fade)
            unif = np.zeros(1)
        state[3] = -1.0
        if mo.code == 2:
            n_bound = int(K * tick / mo.leg) + 2
            angles = r_head.uniform(0.0, 2 * math.pi, (n_bound, n))
            state[4] = 0.0
        else:
            angles = empty2
        steps = r_move.normal(0.0, mo.sigma * math.sqrt(tick), (K, n, 2)) if mo.code == 3 else empty3
        sl = slice(start * tps, (start + m) * tps)
        _kernels.single_chunk(
            px, py, head, state, config.side_length, mo.code, mo.speed, mo.leg, angles, steps,
            pl_code, pl_par, l_signal, config.noise, policy.code, policy.threshold, conditional,
            s_cond, getattr(int_model, "rate", 1.0), coherence, det, sig, intf, unif,
            tick, tps, A[start:start + m], W[start + 1:start + 1 + m], V[start:start + m],
            I_rec[sl] if record_series else I_rec, S_rec[sl] if record_series else S_rec,
            record_series)
    if not record_series:
        I_rec = S_rec = None
    return QueueRun(config, replication, W, A, V, I_rec, S_rec, n)


def _fades(model, shape, rng):
    if isinstance(model, DeterministicUnit):
        return np.ones(shape)
    return rng.exponential(model.mean, shape)


@dataclass
class InteractingRun:
    """Output of one interacting-system run.

    ``workloads[n, q]`` is queue ``q`` after ``n`` slots; queue 0 is the
    static pair whose receiver sits at the origin.
    """

    config: object
    replication: int
    workloads: np.ndarray
    service: np.ndarray

    @property
    def warmup(self):
        return self.config.schedule.warmup

    @property
    def mean_workload(self):
        """Network-average workload per slot."""
        return self.workloads.mean(axis=1)

    @property
    def tagged_workload(self):
        return self.workloads[:, 0]


def run_interacting(config, replication=0, n_slots=None):
    """Simulate every interferer as a queue with its own receiver.

    Each pair has its receiver at distance ``link_distance`` in a uniform
    direction from its transmitter and moves rigidly. A transmitter is active
    during a tick iff its queue holds work at the start of that tick.
    """
    horizon = config.horizon if n_slots is None else int(n_slots)
    if horizon < 1:
        raise ParameterError("horizon must be at least one slot")
    sched = config.schedule
    tps, tick = sched.ticks_per_slot, config.tick
    r_arr = stream(config.seed, "arrivals", replication)
    r_place = stream(config.seed, "placement", replication)
    r_head = stream(config.seed, "headings", replication)
    r_fade = stream(config.seed, "fades", replication)
    r_move = stream(config.seed, "motion", replication)
    r_serv = stream(config.seed, "service", replication)

    conf = initial_configuration(config, replication)
    R, L = config.link_distance, config.side_length
    # pair 0 is the tagged link: receiver at the origin
    phi = r_place.uniform(0.0, 2 * math.pi, len(conf) + 1)
    tx = np.concatenate([[R * math.cos(phi[0])], conf.points[:, 0]]) % L
    ty = np.concatenate([[R * math.sin(phi[0])], conf.points[:, 1]]) % L
    rx = np.concatenate([[0.0], conf.points[:, 0] + R * np.cos(phi[1:])]) % L
    ry = np.concatenate([[0.0], conf.points[:, 1] + R * np.sin(phi[1:])]) % L
    n = tx.size
    moving = np.ones(n, dtype=np.int64)
    moving[0] = 0
    mo = _motion(config)
    head = r_head.uniform(0.0, 2 * math.pi, n)
    pl_code, pl_par, l_signal, s_cond, det = _link(config)
    conditional = config.sampling == "conditional"
    policy = config.service_policy
    if config.coherence != 1:
        raise ParameterError("interacting mode redraws fades every tick")

    arrivals = config.arrival_process
    W = np.zeros((horizon + 1, n))
    Vs = np.empty((horizon, n))
    state = np.array([mo.leg, 0.0])
    empty2 = np.zeros((1, 1))
    empty3 = np.zeros((1, 1, 1))
    remaining = np.zeros(n)
    for slot in range(horizon):
        remaining += arrivals.sample(1, config.slot, r_arr, n)[0]
        if conditional:
            sig, intf = empty2, empty3
            unif = r_serv.random((tps, n))
        else:
            sig = _fades(config.signal_fade, (tps, n), r_fade)
            intf = empty3 if det else _fades(config.interferer_fade, (tps, n, n), r_fade)
            unif = empty2
        if mo.code == 2:
            angles = r_head.uniform(0.0, 2 * math.pi, (int(tps * tick / mo.leg) + 2, n))
            state[1] = 0.0
        else:
            angles = empty2
        steps = r_move.normal(0.0, mo.sigma * math.sqrt(tick), (tps, n, 2)) if mo.code == 3 else np.zeros((1, 1, 2))
        _kernels.interacting_slot(
            tx, ty, rx, ry, moving, head, state, L, mo.code, mo.speed, mo.leg, angles, steps,
            pl_code, pl_par, l_signal, config.noise, policy.code, policy.threshold, conditional,
            s_cond, det, getattr(config.interferer_fade, "rate", 1.0), sig, intf, unif, tick, tps,
            remaining, Vs[slot])
        W[slot + 1] = remaining
    return InteractingRun(config, replication, W, Vs)


def interference_series(config, n_ticks=None, replication=0):
    """Per-tick interference and SINR at the origin.

    Returns
    -------
    dict of numpy.ndarray
        Keys ``tick_index``, ``time``, ``interference``, ``sinr``.
    """
    if config.sampling == "conditional":
        config = config.with_values(sampling="exact")
    tps = config.schedule.ticks_per_slot
    n_ticks = config.horizon * tps if n_ticks is None else int(n_ticks)
    run = run_single_queue(config.with_values(rate=0.0, load=0.0), replication,
                           record_series=True, n_slots=-(-n_ticks // tps))
    idx = np.arange(n_ticks)
    return {"tick_index": idx, "time": idx * config.tick,
            "interference": run.interference[:n_ticks], "sinr": run.sinr[:n_ticks]}
