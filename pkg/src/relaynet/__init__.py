"""Multi-hop relay networks whose nodes learn their transmission range with double DQN."""

__version__ = "0.1.0"

from .config import ExperimentConfig, from_profile  # noqa: E402
from .engine import AggregateReport, EpisodeTrace, run_episode, run_experiment  # noqa: E402
from .estimator import RelayActivationSimulator  # noqa: E402

__all__ = [
    "AggregateReport",
    "EpisodeTrace",
    "ExperimentConfig",
    "RelayActivationSimulator",
    "from_profile",
    "run_episode",
    "run_experiment",
]
