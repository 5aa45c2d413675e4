import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaynet.qnet import (Ddqn, DivergenceError, QNetParams, RmsPropState, dump_params, forward,
                           greedy_action, init_params, load_params, output_gradient, td_target,
                           train_step)


def random_params(rng, hidden=None, n_out=None):
    hidden = hidden or int(rng.integers(1, 9))
    n_out = n_out or int(rng.integers(2, 22))
    return QNetParams(rng.normal(size=(hidden, 1)), rng.normal(size=hidden),
                      rng.normal(size=(n_out, hidden)), rng.normal(size=n_out))


def loss_fn(params, s, a, y):
    return (y - forward(params, s)[a]) ** 2


def finite_difference(params, s, a, y, h=1e-5):
    grads = []
    for arr in params.arrays():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = loss_fn(params, s, a, y)
            arr[idx] = old - h
            down = loss_fn(params, s, a, y)
            arr[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric, floor=1e-6):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        err = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(err.max()))
    return worst


def test_forward_zero_params():
    assert np.array_equal(forward(QNetParams.zeros(), 0.37), np.zeros(21))


def test_forward_bias_only():
    p = QNetParams.zeros()
    p.b2[:] = 2.5
    p.W2[:] = np.random.default_rng(0).normal(size=p.W2.shape)
    assert np.array_equal(forward(p, 0.9), np.full(21, 2.5))


def test_forward_hand_network():
    p = QNetParams(np.array([[2.0]]), np.array([-1.0]), np.array([[3.0]]), np.array([0.5]))
    assert forward(p, 1.0)[0] == 3.5


def test_forward_is_deterministic(rng):
    p = init_params(rng)
    assert np.array_equal(forward(p, 0.42), forward(p, 0.42))


def test_argmax_invariant_under_output_shift(rng):
    for _ in range(20):
        p = init_params(rng)
        s = rng.uniform(0, 1)
        a = greedy_action(forward(p, s))
        p.b2 += rng.normal() * 10
        assert greedy_action(forward(p, s)) == a


def test_greedy_ties_go_to_lowest_index():
    q = np.zeros(21)
    q[4] = q[9] = 1.0
    assert greedy_action(q) == 4


def test_init_params(rng):
    p = init_params(np.random.default_rng(5))
    q = init_params(np.random.default_rng(5))
    assert p.equals(q)
    assert not np.any(p.b1) and not np.any(p.b2)
    assert p.W1.shape == (32, 1) and p.W2.shape == (21, 32)
    assert np.abs(p.W1).max() <= np.sqrt(6 / 33)
    assert np.abs(p.W2).max() <= np.sqrt(6 / 53)
    assert not p.equals(init_params(np.random.default_rng(6)))


def test_td_target_gamma_zero(rng):
    d = Ddqn(init_params(rng))
    assert td_target(0.37, 0.0, 0.5, d) == 0.37


def test_td_target_identical_networks_is_dqn(rng):
    d = Ddqn(init_params(rng))
    d.online.b2[:] = rng.normal(size=21)
    d.target = d.online.copy()
    q = forward(d.online, 0.2)
    assert td_target(0.5, 0.7, 0.2, d) == 0.5 + 0.7 * q.max()


def test_td_target_uses_online_argmax_target_value():
    online, target = QNetParams.zeros(), QNetParams.zeros()
    online.b2[3] = 1.0      # online prefers action 3
    target.b2[7] = 5.0      # target's own maximum is action 7
    target.b2[3] = 0.2
    d = Ddqn(online)
    d.target = target
    assert td_target(0.5, 0.7, 0.4, d) == 0.5 + 0.7 * 0.2


def test_td_target_rejects_gamma_one(rng):
    with pytest.raises(ValueError):
        td_target(0.0, 1.0, 0.1, Ddqn(init_params(rng)))


def test_gradient_matches_finite_difference(rng):
    for _ in range(30):
        p = random_params(rng)
        s = float(rng.uniform(-1, 1))
        a = int(rng.integers(p.b2.size))
        y = float(rng.normal())
        q = forward(p, s)[a]
        g = output_gradient(p, s, a, -2 * (y - q))
        assert max_rel_error(g.arrays(), finite_difference(p, s, a, y)) <= 1e-4


def test_zero_residual_leaves_params(rng):
    d = Ddqn(init_params(rng), sync_interval=100)
    before = d.online.copy()
    s, a = 0.3, 5
    # make the TD target equal the current Q: gamma 0 and reward = Q(s, a)
    r = float(forward(d.online, s)[a])
    loss = train_step(d, s, a, r, 0.6, 0.0)
    assert loss == 0.0
    assert d.online.equals(before)
    assert all(np.all(v == 0) for v in d.optimizer.accumulators)


def test_rmsprop_zero_grad_is_noop(rng):
    p = init_params(rng)
    before = p.copy()
    opt = RmsPropState(lr=0.01, decay=0.9)
    opt.step(p, init_params(rng))
    mid = p.copy()
    opt.step(p, QNetParams(*(np.zeros_like(a) for a in p.arrays())))
    assert p.equals(mid) and not p.equals(before)


def test_target_sync_at_interval(rng):
    d = Ddqn(init_params(rng), sync_interval=100)
    initial = d.target.copy()
    for k in range(1, 250):
        train_step(d, rng.uniform(), int(rng.integers(21)), rng.uniform(), rng.uniform(), 0.7)
        if k % 100 == 0:
            assert d.target.equals(d.online)
            synced = d.target.copy()
        elif k < 100:
            assert d.target.equals(initial)
        else:
            assert d.target.equals(synced)
    assert d.update_count == 249


def test_update_99_to_100_syncs(rng):
    d = Ddqn(init_params(rng), sync_interval=100)
    d.update_count = 99
    train_step(d, 0.1, 20, 0.5, 0.2, 0.7)
    assert d.update_count == 100
    assert d.target.equals(d.online)


def test_nonfinite_raises(rng):
    d = Ddqn(init_params(rng))
    with pytest.raises(DivergenceError):
        train_step(d, 0.1, 0, float("inf"), 0.2, 0.7)


def test_bad_action_index(rng):
    with pytest.raises(IndexError):
        train_step(Ddqn(init_params(rng)), 0.1, 21, 0.5, 0.2, 0.7)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_checkpoint_roundtrip(seed):
    rng = np.random.default_rng(seed)
    d = Ddqn(init_params(rng))
    for _ in range(5):
        d.train_step(rng.uniform(), int(rng.integers(21)), rng.normal(), rng.uniform(), 0.7)
    online, target = load_params(d.to_bytes())
    assert online.equals(d.online) and target.equals(d.target)
    only, none = load_params(dump_params(d.online))
    assert only.equals(d.online) and none is None
