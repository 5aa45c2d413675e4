import numpy as np
import pytest

from relaynet.network import Network, NodeKind, RegionSpec


def make_network(positions, kinds, radii, max_radius=3.0, terminal_map=None, size=(20.0, 20.0)):
    kinds = np.asarray(kinds, dtype=np.int8)
    if terminal_map is None:
        sources = np.flatnonzero(kinds == NodeKind.SOURCE).tolist()
        terms = np.flatnonzero(kinds == NodeKind.TERMINAL).tolist()
        terminal_map = {h: [t] for h, t in zip(sources, terms)}
    return Network(RegionSpec(*size), np.asarray(positions, dtype=float), kinds,
                   np.asarray(radii, dtype=float), max_radius, terminal_map)


def random_network(rng, n, size=10.0, max_radius=3.0, n_sources=2):
    """Random population: ``n_sources`` sources, as many terminals, rest relays."""
    kinds = np.full(n, NodeKind.RELAY, dtype=np.int8)
    kinds[:n_sources] = NodeKind.SOURCE
    kinds[n_sources:2 * n_sources] = NodeKind.TERMINAL
    pos = rng.uniform(0, size, size=(n, 2))
    radii = rng.uniform(0, max_radius, size=n)
    radii[kinds == NodeKind.TERMINAL] = 0.0
    return make_network(pos, kinds, radii, max_radius, size=(size, size))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
