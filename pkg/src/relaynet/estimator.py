"""scikit-learn style front end for running experiments."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import resolve
from .engine import run_experiment


class RelayActivationSimulator(BaseEstimator):
    """Run independent DDQN relays and keep the aggregate report.

    ``fit`` ignores ``X``/``y``; the "data" is the simulated network. Any
    parameter left as ``None`` falls back to the profile default, and
    ``config`` may carry extra ``ExperimentConfig`` fields.

    Examples
    --------
    >>> sim = RelayActivationSimulator(episodes=1, horizon=20).fit()
    >>> 0.0 <= sim.report_.connectivity <= 1.0
    True
    """

    def __init__(self, profile="default", policy="learned", episodes=None, horizon=None,
                 max_radius=None, reward_signal=None, gamma=None, omega=None, eta=None,
                 lr=None, random_state=0, n_jobs=1, config=None):
        self.profile = profile
        self.policy = policy
        self.episodes = episodes
        self.horizon = horizon
        self.max_radius = max_radius
        self.reward_signal = reward_signal
        self.gamma = gamma
        self.omega = omega
        self.eta = eta
        self.lr = lr
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.config = config

    def _resolve_config(self):
        direct = {k: v for k, v in self.get_params().items()
                  if k not in ("config", "random_state") and v is not None}
        seed = 0 if self.random_state is None else int(self.random_state)
        return resolve(None, {**(self.config or {}), **direct, "seed": seed})

    def fit(self, X=None, y=None):
        self.config_ = self._resolve_config()
        self.report_, self.traces_ = run_experiment(self.config_)
        self.n_relays_ = np.array([t.n_relays for t in self.traces_])
        return self

    def final_radii(self) -> list[np.ndarray]:
        check_is_fitted(self, "traces_")
        return [t.final_radii for t in self.traces_]

    def activation_ratio(self, tol: float = 0.1) -> float:
        """Fraction of final relay radii within ``tol * max_radius`` of 0 or the maximum."""
        check_is_fitted(self, "traces_")
        d = self.config_.max_radius
        fr = [np.mean((r <= tol * d) | (r >= (1 - tol) * d)) for r in self.final_radii() if r.size]
        return float(np.mean(fr)) if fr else float("nan")

    def score(self, X=None, y=None) -> float:
        """Mean windowed system goodput in Mbps."""
        check_is_fitted(self, "report_")
        return self.report_.goodput
