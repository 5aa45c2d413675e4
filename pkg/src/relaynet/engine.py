"""Episode loop: act, move, measure, broadcast throughput, learn."""
from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agent import RelayAgent
from .config import ExperimentConfig, validate_config
from .metrics import StepMetrics, step_metrics
from .network import (Network, RandomWalk, UniformRedraw, build_graph, generate_episode,
                      observe_all, relocate)
from .qnet import Ddqn

log = logging.getLogger(__name__)


def derive_streams(master_seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(seed, purpose, index)``.

    Purpose tags are hashed with CRC32 into the SeedSequence spawn key, so a
    stream never depends on how many other streams exist.
    """
    key = (zlib.crc32(purpose.encode()), int(index))
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))


def episode_seed(master_seed: int, episode: int) -> int:
    return int(derive_streams(master_seed, "episode", episode).integers(2**63))


@dataclass
class EpisodeTrace:
    metrics: list[StepMetrics]
    radii: np.ndarray            # (T, N_V) relay radii after each step's actions
    losses: np.ndarray           # (T, N_V), NaN where no update happened
    relay_ids: np.ndarray
    max_radius: float
    seed: int
    positions: Optional[np.ndarray] = None   # (T, N, 2) when snapshots are recorded
    all_radii: Optional[np.ndarray] = None   # (T, N)
    template: Optional[Network] = None

    @property
    def horizon(self) -> int:
        return len(self.metrics)

    @property
    def n_relays(self) -> int:
        return len(self.relay_ids)

    @property
    def final_radii(self) -> np.ndarray:
        return self.radii[-1]

    @property
    def start_radii(self) -> np.ndarray:
        """(T, N_V) radius in effect when each step begins; first row is zero."""
        return np.vstack([np.zeros((1, self.n_relays)), self.radii[:-1]])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.metrics], dtype=float)

    def network_at(self, step: int) -> Network:
        if self.positions is None:
            raise ValueError("snapshots were not recorded for this episode")
        if not 1 <= step <= self.horizon:
            raise IndexError(f"step {step} outside 1..{self.horizon}")
        net = self.template.copy()
        net.positions = self.positions[step - 1].copy()
        net.radii = self.all_radii[step - 1].copy()
        return net


@dataclass
class AggregateReport:
    connectivity: float
    goodput: float
    power_dbm: float
    per_step: dict[str, np.ndarray] = field(default_factory=dict)
    window: tuple[int, int] = (100, 150)
    n_episodes: int = 0

    def as_dict(self) -> dict:
        return {"connectivity_ratio": self.connectivity, "goodput_mbps": self.goodput,
                "mean_power_dbm": self.power_dbm, "window": list(self.window),
                "episodes": self.n_episodes}


def _mobility(cfg: ExperimentConfig):
    if cfg.mobility == "uniform":
        return UniformRedraw()
    return RandomWalk(cfg.walk_sigma * cfg.width)


def _make_agents(cfg: ExperimentConfig, seed: int, relay_ids) -> list[RelayAgent]:
    agents = []
    for i in relay_ids:
        ddqn = Ddqn.create(derive_streams(seed, "agent-init", i), hidden=cfg.hidden,
                           sync_interval=cfg.sync_interval, lr=cfg.lr,
                           decay=cfg.rms_decay, epsilon_stab=cfg.rms_eps)
        agents.append(RelayAgent(int(i), ddqn, derive_streams(seed, "agent-explore", i),
                                 cfg.reward_params, cfg.state_divisor))
    return agents


def run_episode(config: ExperimentConfig, seed: int) -> EpisodeTrace:
    cfg = validate_config(config)
    net = generate_episode(cfg, derive_streams(seed, "placement"))
    move_rng = derive_streams(seed, "mobility")
    mobility = _mobility(cfg)
    relays = net.relay_ids
    agents = _make_agents(cfg, seed, relays)
    eps = cfg.epsilon_schedule
    learn = cfg.policy != "always_max"
    pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 and len(agents) else None

    def each(fn, *columns):
        if pool is None:
            return [fn(*args) for args in zip(*columns)]
        return list(pool.map(fn, *columns))

    T, n_v = cfg.horizon, len(relays)
    radii_log = np.zeros((T, n_v))
    loss_log = np.full((T, n_v), np.nan)
    pos_log = np.zeros((T, net.n_nodes, 2)) if cfg.record_snapshots else None
    rad_log = np.zeros((T, net.n_nodes)) if cfg.record_snapshots else None
    metrics: list[StepMetrics] = []
    states = np.ones(n_v, dtype=int)
    phi = [0.0]  # broadcast throughput history, starting at phi_0 = 0

    try:
        for tau in range(1, T + 1):
            if cfg.step_order == "move_act":
                net = relocate(net, mobility, move_rng)
            if cfg.policy == "always_max":
                net.radii[relays] = cfg.max_radius
            else:
                e = eps(tau)
                net.radii[relays] = each(lambda a, s: a.act(int(s), e, cfg.max_radius), agents, states)
            if cfg.step_order == "act_move":
                net = relocate(net, mobility, move_rng)

            snap = build_graph(net, tau)
            m = step_metrics(snap, net, cfg.link_throughput)
            metrics.append(m)
            phi.append(m.goodput if cfg.reward_signal == "goodput" else m.phi)

            # Barrier: phi_tau is published before any node learns from it.
            states = observe_all(net)
            if learn:
                phi_prev, phi_prev2 = phi[-1], phi[-2]
                loss_log[tau - 1] = each(
                    lambda a, s: a.update(int(s), phi_prev, phi_prev2, cfg.gamma), agents, states)
            radii_log[tau - 1] = net.radii[relays]
            if pos_log is not None:
                pos_log[tau - 1] = net.positions
                rad_log[tau - 1] = net.radii
    finally:
        if pool is not None:
            pool.shutdown()

    return EpisodeTrace(metrics, radii_log, loss_log, relays, cfg.max_radius, seed,
                        pos_log, rad_log, net.copy() if pos_log is not None else None)


def window_means(trace: EpisodeTrace, start: int, end: int) -> dict[str, float]:
    """Mean of the step metrics over the inclusive 1-based window [start, end].

    Power is averaged in milliwatts before converting back to dBm.
    """
    sl = slice(start - 1, end)
    mw = np.array([np.mean(m.per_node_power_mw) if m.per_node_power_mw.size else 0.0
                   for m in trace.metrics[sl]])
    mean_mw = float(mw.mean())
    return {
        "connectivity_ratio": float(trace.series("connectivity_ratio")[sl].mean()),
        "goodput_mbps": float(trace.series("goodput")[sl].mean()),
        "mean_power_dbm": 10 * np.log10(mean_mw) if mean_mw > 0 else -np.inf,
    }


def aggregate(traces: list[EpisodeTrace], window: tuple[int, int]) -> AggregateReport:
    per_ep = [window_means(t, *window) for t in traces]
    mw = [10 ** (p["mean_power_dbm"] / 10) for p in per_ep]
    per_step = {name: np.mean([t.series(name) for t in traces], axis=0)
                for name in ("goodput", "phi", "connectivity_ratio")}
    return AggregateReport(
        connectivity=float(np.mean([p["connectivity_ratio"] for p in per_ep])),
        goodput=float(np.mean([p["goodput_mbps"] for p in per_ep])),
        power_dbm=float(10 * np.log10(np.mean(mw))) if np.mean(mw) > 0 else -np.inf,
        per_step=per_step,
        window=window,
        n_episodes=len(traces),
    )


def run_experiment(config: ExperimentConfig) -> tuple[AggregateReport, list[EpisodeTrace]]:
    cfg = validate_config(config)
    traces = []
    for e in range(cfg.episodes):
        trace = run_episode(cfg, episode_seed(cfg.seed, e))
        log.info("episode %d: %d relays, final connectivity %.2f", e, trace.n_relays,
                 trace.metrics[-1].connectivity_ratio)
        traces.append(trace)
    return aggregate(traces, (cfg.window_start, cfg.window_end)), traces
