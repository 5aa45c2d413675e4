"""Per-step network performance: hop counts, goodput, connectivity, power."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import Network, TopologySnapshot

LINK_THROUGHPUT_MBPS = 910.0
PATHLOSS_ETA = 1.0
PATHLOSS_ALPHA = 2.0


@dataclass(frozen=True)
class FlowResult:
    source_id: int
    terminal_id: int
    hop_count: Optional[int]  # None means unreachable

    @property
    def reachable(self) -> bool:
        return self.hop_count is not None


@dataclass
class StepMetrics:
    goodput: float
    phi: float
    connectivity_ratio: float
    mean_power_dbm: float
    per_node_power_mw: np.ndarray


def _bfs(topology: TopologySnapshot, source: int) -> np.ndarray:
    """Parent array of a BFS tree rooted at ``source`` (-1 = unvisited)."""
    n = topology.adjacency.shape[0]
    parent = np.full(n, -1)
    parent[source] = source
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in topology.successors(u):
            if parent[v] < 0:
                parent[v] = u
                queue.append(v)
    return parent


def shortest_path(topology: TopologySnapshot, source: int, target: int) -> Optional[list[int]]:
    parent = _bfs(topology, source)
    if parent[target] < 0:
        return None
    path = [target]
    while path[-1] != source:
        path.append(int(parent[path[-1]]))
    return path[::-1]


def flow_hop_counts(topology: TopologySnapshot, network: Network) -> list[FlowResult]:
    out = []
    for h, terminals in network.terminal_map.items():
        parent = _bfs(topology, h)
        for t in terminals:
            hops = None
            if parent[t] >= 0:
                hops, v = 0, t
                while v != h:
                    v = parent[v]
                    hops += 1
            out.append(FlowResult(h, t, hops))
    return out


def system_goodput(flows: list[FlowResult], link_throughput: float = LINK_THROUGHPUT_MBPS) -> float:
    """Store-and-forward goodput: each reachable flow delivers ``link_throughput / hops``."""
    if link_throughput <= 0:
        raise ValueError("link throughput must be positive")
    return float(sum(link_throughput / f.hop_count for f in flows if f.reachable))


def connectivity_ratio(flows: list[FlowResult]) -> float:
    if not flows:
        raise ValueError("no flows defined")
    return sum(f.reachable for f in flows) / len(flows)


def tx_power_mw(radius, eta: float = PATHLOSS_ETA, alpha: float = PATHLOSS_ALPHA):
    """Transmit power needed to cover ``radius``, path loss ``eta * d**alpha``."""
    return eta * np.power(radius, alpha)


def mean_power_dbm(radii) -> float:
    """dBm of the arithmetic mean of per-relay milliwatt power; -inf if all silent."""
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("need at least one relay")
    mw = float(np.mean(tx_power_mw(radii)))
    return -math.inf if mw == 0.0 else 10.0 * math.log10(mw)


def step_metrics(topology: TopologySnapshot, network: Network,
                 link_throughput: float = LINK_THROUGHPUT_MBPS) -> StepMetrics:
    flows = flow_hop_counts(topology, network)
    goodput = system_goodput(flows, link_throughput)
    relay_radii = network.radii[network.relay_ids]
    power = tx_power_mw(relay_radii)
    return StepMetrics(
        goodput=goodput,
        phi=goodput / (len(flows) * link_throughput),
        connectivity_ratio=connectivity_ratio(flows),
        mean_power_dbm=mean_power_dbm(relay_radii) if relay_radii.size else -math.inf,
        per_node_power_mw=power,
    )
