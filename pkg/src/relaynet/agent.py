"""A relay node's decision loop: epsilon-greedy actions, reward, DDQN update."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import apply_action
from .qnet import Ddqn, forward, greedy_action

# -1.0, -0.9, ..., +1.0
ACTIONS = np.round(np.arange(-10, 11) / 10.0, 1)


def action_index(delta: float) -> int:
    idx = int(round(delta * 10)) + 10
    if not 0 <= idx < len(ACTIONS) or ACTIONS[idx] != round(delta, 1):
        raise ValueError(f"{delta} is not in the action set")
    return idx


@dataclass(frozen=True)
class RewardParams:
    u: float = 5.0
    omega: float = 0.8
    eta: float = 20.0
    reward_divisor: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.01
    decay_steps: int = 100

    def __call__(self, step: int) -> float:
        """Exploration rate at 1-based ``step``; linear decay, floored at ``end``."""
        frac = (step - 1) / self.decay_steps
        if frac >= 1.0:
            return self.end
        return max(self.end, self.start - (self.start - self.end) * frac)


def compute_reward(params: RewardParams, phi_prev: float, phi_prev2: float,
                   prev_action: float) -> tuple[float, float]:
    """Return ``(raw, scaled)`` reward for the last action.

    raw = u + omega * eta * (phi_prev - phi_prev2) - (1 - omega) * prev_action
    """
    raw = (params.u + params.omega * params.eta * (phi_prev - phi_prev2)
           - (1.0 - params.omega) * prev_action)
    return raw, raw / params.reward_divisor


class RelayAgent:
    """One relay's local state. Only its own observation and the broadcast
    throughput values ever reach ``update``."""

    def __init__(self, node_id: int, ddqn: Ddqn, rng: np.random.Generator,
                 reward: RewardParams = RewardParams(), state_divisor: float = 100.0):
        self.node_id = node_id
        self.ddqn = ddqn
        self.rng = rng
        self.reward = reward
        self.state_divisor = state_divisor
        self.radius = 0.0
        self.prev_state = 1
        self.prev_action: Optional[float] = None
        self.last_loss = float("nan")

    def get_action(self, state: int, epsilon: float) -> float:
        if self.rng.uniform() < epsilon:
            idx = int(self.rng.integers(len(ACTIONS)))
        else:
            idx = greedy_action(forward(self.ddqn.online, state / self.state_divisor))
        self.prev_state = state
        self.prev_action = float(ACTIONS[idx])
        return self.prev_action

    def act(self, state: int, epsilon: float, max_radius: float) -> float:
        """Pick an action and move the radius; returns the new radius."""
        self.radius = apply_action(self.radius, self.get_action(state, epsilon), max_radius)
        return self.radius

    def update(self, new_state: int, phi_prev: float, phi_prev2: float, gamma: float) -> float:
        if self.prev_action is None:
            raise RuntimeError("update called before any action was taken")
        _, r = compute_reward(self.reward, phi_prev, phi_prev2, self.prev_action)
        loss = self.ddqn.train_step(
            self.prev_state / self.state_divisor, action_index(self.prev_action), r,
            new_state / self.state_divisor, gamma,
        )
        self.prev_state = new_state
        self.last_loss = loss
        return loss
