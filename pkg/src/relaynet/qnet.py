"""Two-layer ReLU Q-network with RMSProp and double-DQN targets, in numpy."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2")


class DivergenceError(FloatingPointError):
    """Loss or gradient became non-finite."""


@dataclass
class QNetParams:
    W1: np.ndarray  # (hidden, in)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (out, hidden)
    b2: np.ndarray  # (out,)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.W1, self.b1, self.W2, self.b2)

    def copy(self) -> "QNetParams":
        return QNetParams(*(a.copy() for a in self.arrays()))

    def equals(self, other: "QNetParams") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    @classmethod
    def zeros(cls, n_in: int = 1, hidden: int = 32, n_out: int = 21) -> "QNetParams":
        return cls(np.zeros((hidden, n_in)), np.zeros(hidden),
                   np.zeros((n_out, hidden)), np.zeros(n_out))


def init_params(rng: np.random.Generator, n_in: int = 1, hidden: int = 32, n_out: int = 21) -> QNetParams:
    """Glorot-uniform weights, zero biases."""
    def glorot(fan_out, fan_in):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_out, fan_in))

    W1 = glorot(hidden, n_in)
    W2 = glorot(n_out, hidden)
    return QNetParams(W1, np.zeros(hidden), W2, np.zeros(n_out))


def _as_input(state) -> np.ndarray:
    return np.atleast_1d(np.asarray(state, dtype=float))


def forward(params: QNetParams, scaled_state) -> np.ndarray:
    h = np.maximum(params.W1 @ _as_input(scaled_state) + params.b1, 0.0)
    return params.W2 @ h + params.b2


def greedy_action(q: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return int(np.argmax(q))


def output_gradient(params: QNetParams, scaled_state, action: int, dq: float) -> QNetParams:
    """Gradient of ``dq * Q(s, action)`` w.r.t. every parameter."""
    x = _as_input(scaled_state)
    pre = params.W1 @ x + params.b1
    h = np.maximum(pre, 0.0)
    gW2 = np.zeros_like(params.W2)
    gW2[action] = dq * h
    gb2 = np.zeros_like(params.b2)
    gb2[action] = dq
    dh = dq * params.W2[action] * (pre > 0)
    return QNetParams(np.outer(dh, x), dh, gW2, gb2)


@dataclass
class RmsPropState:
    lr: float = 0.01
    decay: float = 0.9
    epsilon_stab: float = 1e-8
    accumulators: list[np.ndarray] = field(default_factory=list)

    def step(self, params: QNetParams, grads: QNetParams) -> None:
        if not self.accumulators:
            self.accumulators = [np.zeros_like(a) for a in params.arrays()]
        for p, g, v in zip(params.arrays(), grads.arrays(), self.accumulators):
            v *= self.decay
            v += (1.0 - self.decay) * g * g
            p -= self.lr * g / (np.sqrt(v) + self.epsilon_stab)


class Ddqn:
    """Online/target network pair trained one transition at a time."""

    def __init__(self, online: QNetParams, sync_interval: int = 100, lr: float = 0.01,
                 decay: float = 0.9, epsilon_stab: float = 1e-8):
        if sync_interval < 1:
            raise ValueError("sync_interval must be >= 1")
        self.online = online
        self.target = online.copy()
        self.optimizer = RmsPropState(lr, decay, epsilon_stab)
        self.update_count = 0
        self.sync_interval = sync_interval

    @classmethod
    def create(cls, rng: np.random.Generator, hidden: int = 32, n_actions: int = 21, **kwargs) -> "Ddqn":
        return cls(init_params(rng, 1, hidden, n_actions), **kwargs)

    def q_values(self, scaled_state) -> np.ndarray:
        return forward(self.online, scaled_state)

    def td_target(self, reward_scaled: float, gamma: float, next_scaled_state) -> float:
        return td_target(reward_scaled, gamma, next_scaled_state, self)

    def train_step(self, scaled_state, action_index: int, reward_scaled: float,
                   next_scaled_state, gamma: float) -> float:
        return train_step(self, scaled_state, action_index, reward_scaled, next_scaled_state, gamma)

    def to_bytes(self) -> bytes:
        return dump_params(self.online, self.target)


def td_target(reward_scaled: float, gamma: float, next_scaled_state, ddqn: Ddqn) -> float:
    """r + gamma * Q_target(s', argmax_a Q_online(s', a))."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    best = greedy_action(forward(ddqn.online, next_scaled_state))
    return float(reward_scaled + gamma * forward(ddqn.target, next_scaled_state)[best])


def train_step(ddqn: Ddqn, scaled_state, action_index: int, reward_scaled: float,
               next_scaled_state, gamma: float) -> float:
    """One RMSProp step on the squared TD error of a single transition.

    Returns the loss evaluated before the update. The target network is
    refreshed from the online one whenever the update count hits a multiple
    of ``sync_interval``.
    """
    n_out = ddqn.online.b2.shape[0]
    if not 0 <= action_index < n_out:
        raise IndexError(f"action index {action_index} outside [0, {n_out})")
    y = td_target(reward_scaled, gamma, next_scaled_state, ddqn)
    q = forward(ddqn.online, scaled_state)[action_index]
    residual = y - q
    loss = residual * residual
    with np.errstate(invalid="ignore", over="ignore"):
        grads = output_gradient(ddqn.online, scaled_state, action_index, -2.0 * residual)
    if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.arrays()):
        raise DivergenceError(f"non-finite loss/gradient after {ddqn.update_count} updates")
    ddqn.optimizer.step(ddqn.online, grads)
    ddqn.update_count += 1
    if ddqn.update_count % ddqn.sync_interval == 0:
        ddqn.target = ddqn.online.copy()
    return float(loss)


# Checkpoint format: numpy .npz archive holding online_W1 ... target_b2 as
# float64 arrays; shapes travel in the npy headers, values round-trip bit-exactly.

def dump_params(online: QNetParams, target: QNetParams | None = None) -> bytes:
    arrays = {f"online_{n}": a for n, a in zip(PARAM_NAMES, online.arrays())}
    if target is not None:
        arrays.update({f"target_{n}": a for n, a in zip(PARAM_NAMES, target.arrays())})
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    return buf.getvalue()


def load_params(blob: bytes) -> tuple[QNetParams, QNetParams | None]:
    with np.load(io.BytesIO(blob)) as z:
        online = QNetParams(*(z[f"online_{n}"] for n in PARAM_NAMES))
        target = None
        if "target_W1" in z.files:
            target = QNetParams(*(z[f"target_{n}"] for n in PARAM_NAMES))
    return online, target
