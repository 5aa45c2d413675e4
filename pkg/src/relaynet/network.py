"""Node populations, mobility and disk-model connectivity."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np


class NodeKind(enum.IntEnum):
    SOURCE = 0
    RELAY = 1
    TERMINAL = 2

    @property
    def label(self) -> str:
        return self.name.lower()


_SENDERS = (NodeKind.SOURCE, NodeKind.RELAY)
_RECEIVERS = (NodeKind.RELAY, NodeKind.TERMINAL)


@dataclass(frozen=True)
class RegionSpec:
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"region must have positive extent, got {self.width} x {self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return ((xy[..., 0] >= 0) & (xy[..., 0] <= self.width)
                & (xy[..., 1] >= 0) & (xy[..., 1] <= self.height))


class Node(NamedTuple):
    id: int
    kind: NodeKind
    x: float
    y: float
    radius: float


@dataclass
class Network:
    """Episode population stored column-wise.

    ``positions`` is (N, 2), ``kinds`` and ``radii`` are length N. Node ids
    are row indices; sources come first, then terminals, then relays, so
    relay ids are stable when relays are appended.
    """

    region: RegionSpec
    positions: np.ndarray
    kinds: np.ndarray
    radii: np.ndarray
    max_radius: float
    terminal_map: dict[int, list[int]] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.kinds)

    @property
    def source_ids(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == NodeKind.SOURCE)

    @property
    def relay_ids(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == NodeKind.RELAY)

    @property
    def terminal_ids(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == NodeKind.TERMINAL)

    @property
    def flows(self) -> list[tuple[int, int]]:
        return [(h, t) for h, ts in self.terminal_map.items() for t in ts]

    def node(self, i: int) -> Node:
        x, y = self.positions[i]
        return Node(int(i), NodeKind(int(self.kinds[i])), float(x), float(y), float(self.radii[i]))

    def copy(self) -> "Network":
        return replace(
            self,
            positions=self.positions.copy(),
            kinds=self.kinds.copy(),
            radii=self.radii.copy(),
            terminal_map={h: list(ts) for h, ts in self.terminal_map.items()},
        )


@dataclass
class TopologySnapshot:
    adjacency: np.ndarray  # bool (N, N), adjacency[i, j] means i -> j
    step: int = 0

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> list[tuple[int, int]]:
        src, dst = np.nonzero(self.adjacency)
        return list(zip(src.tolist(), dst.tolist()))

    def successors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])


def fixed_positions(region: RegionSpec, n_sources: int, terminals_per_source: int,
                    source_x: float = 0.05, terminal_x: float = 0.95):
    """Sources on the left, terminals on the right, evenly spaced in y.

    ``source_x`` and ``terminal_x`` are fractions of the region width.
    """
    n_terms = n_sources * terminals_per_source
    ys = region.height * np.arange(1, n_sources + 1) / (n_sources + 1)
    src = np.column_stack([np.full(n_sources, source_x * region.width), ys])
    ys = region.height * np.arange(1, n_terms + 1) / (n_terms + 1)
    term = np.column_stack([np.full(n_terms, terminal_x * region.width), ys])
    return src, term


def generate_episode(config, rng: np.random.Generator) -> Network:
    """Sample a fresh population: Poisson relay count, uniform relay positions.

    ``config`` needs ``width``, ``height``, ``density``, ``n_sources``,
    ``terminals_per_source``, ``max_radius``, ``source_x`` and ``terminal_x``.
    """
    region = RegionSpec(config.width, config.height)
    if config.density < 0:
        raise ValueError("density must be non-negative")
    if config.n_sources < 1 or config.terminals_per_source < 1:
        raise ValueError("need at least one source and one terminal per source")
    src, term = fixed_positions(region, config.n_sources, config.terminals_per_source,
                                config.source_x, config.terminal_x)
    fixed = np.vstack([src, term])
    if not region.contains(fixed).all():
        raise ValueError("fixed source/terminal positions fall outside the region")

    k = int(rng.poisson(config.density * region.area))
    relays = rng.uniform((0.0, 0.0), (region.width, region.height), size=(k, 2))

    n_h, n_t = len(src), len(term)
    kinds = np.concatenate([
        np.full(n_h, NodeKind.SOURCE),
        np.full(n_t, NodeKind.TERMINAL),
        np.full(k, NodeKind.RELAY),
    ]).astype(np.int8)
    radii = np.zeros(n_h + n_t + k)
    # Sources transmit at full range for the whole episode; relays start silent.
    radii[:n_h] = config.max_radius
    tps = config.terminals_per_source
    terminal_map = {h: [n_h + h * tps + j for j in range(tps)] for h in range(n_h)}
    return Network(region, np.vstack([fixed, relays]), kinds, radii,
                   float(config.max_radius), terminal_map)


class UniformRedraw:
    """Every relay is redrawn uniformly over the region each step."""

    def move(self, positions: np.ndarray, region: RegionSpec, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform((0.0, 0.0), (region.width, region.height), size=positions.shape)


class RandomWalk:
    """Gaussian displacement with reflection at the region boundary."""

    def __init__(self, sigma: float):
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        self.sigma = sigma

    def move(self, positions: np.ndarray, region: RegionSpec, rng: np.random.Generator) -> np.ndarray:
        step = rng.normal(0.0, 1.0, size=positions.shape) * self.sigma
        return _reflect(positions + step, np.array([region.width, region.height]))


def _reflect(xy: np.ndarray, upper: np.ndarray) -> np.ndarray:
    # fold onto [0, 2u) then mirror the upper half; handles steps longer than the region
    period = 2.0 * upper
    xy = np.mod(xy, period)
    return np.where(xy > upper, period - xy, xy)


def relocate(network: Network, mobility, rng: np.random.Generator) -> Network:
    """Return a copy with relays moved; sources and terminals are static."""
    out = network.copy()
    relays = out.relay_ids
    if len(relays):
        out.positions[relays] = mobility.move(out.positions[relays], out.region, rng)
    return out


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def build_graph(network: Network, step: int = 0) -> TopologySnapshot:
    kinds = network.kinds
    dist = pairwise_distances(network.positions)
    can_send = np.isin(kinds, _SENDERS)
    can_recv = np.isin(kinds, _RECEIVERS)
    adj = (dist <= network.radii[:, None]) & can_send[:, None] & can_recv[None, :]
    np.fill_diagonal(adj, False)
    return TopologySnapshot(adj, step)


def observe_state(node_id: int, network: Network) -> int:
    """Number of relays/terminals within range, counting the node itself."""
    if network.kinds[node_id] != NodeKind.RELAY:
        raise ValueError(f"node {node_id} is not a relay")
    d = np.sqrt(((network.positions - network.positions[node_id]) ** 2).sum(axis=1))
    inside = (d <= network.radii[node_id]) & np.isin(network.kinds, _RECEIVERS)
    inside[node_id] = False
    return 1 + int(inside.sum())


def observe_all(network: Network) -> np.ndarray:
    """``observe_state`` for every relay, in ``relay_ids`` order."""
    relays = network.relay_ids
    if not len(relays):
        return np.zeros(0, dtype=int)
    dist = pairwise_distances(network.positions)[relays]
    inside = (dist <= network.radii[relays, None]) & np.isin(network.kinds, _RECEIVERS)[None, :]
    inside[np.arange(len(relays)), relays] = False
    return 1 + inside.sum(axis=1)


def apply_action(radius: float, action: float, max_radius: float) -> float:
    # actions live on a 0.1 grid; rounding stops float drift from piling up over an episode
    return min(max(round(radius + action, 9), 0.0), max_radius)
