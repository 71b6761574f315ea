import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikedyn.errors import DomainError
from spikedyn.simulate import SimConfig, ensemble, gd_step, init_vectors, simulate_run
from spikedyn.theory import noiseless_q


def test_init_vectors():
    t0, ts = init_vectors(50, 0.3)
    assert t0 @ ts / 50 == pytest.approx(0.3, abs=1e-15)
    assert t0 @ t0 == pytest.approx(50) and ts @ ts == pytest.approx(50)
    a, b = init_vectors(10, 1.0)
    assert np.allclose(a, b)
    a, b = init_vectors(10, 0.0)
    assert a @ b == 0
    with pytest.raises(DomainError):
        init_vectors(10, 1.2)


def test_step_projection_and_zero_gradient():
    n = 30
    t0, _ = init_vectors(n, 0.4)
    rng = np.random.default_rng(0)
    A = rng.standard_normal((n, n))
    out = gd_step(t0, lambda th: A @ th, n, 0.1)
    assert np.linalg.norm(out) == pytest.approx(math.sqrt(n), abs=1e-12)
    assert np.array_equal(gd_step(t0, lambda th: 0 * th, n, 0.1), t0)


def test_noiseless_dynamics():
    n, alpha, dt = 200, 0.2, 0.01
    theta, star = init_vectors(n, alpha)
    apply = lambda th: (star @ th / n) * star
    for _ in range(300):
        theta = gd_step(theta, apply, n, dt)
    assert theta @ star / n == pytest.approx(noiseless_q(alpha, 3.0), abs=5e-3)


def test_single_run_super_critical():
    tr = simulate_run(SimConfig(n=1000, lam=10, alpha=0.1, dt=0.1, steps=100, runs=1), 0)
    assert tr.q[0] == 0.1
    assert abs(tr.q[-1] - math.sqrt(0.9)) <= 0.1
    assert tr.norm_drift <= 1e-9
    assert np.all(np.abs(tr.q) <= 1)


def test_cost_vanishes_at_the_signal():
    cfg = SimConfig(n=100, lam=3, alpha=1.0, dt=0.1, steps=0, runs=1)
    tr = simulate_run(cfg, 0)
    assert tr.cost[0] == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(20, 120), st.floats(-1, 1), st.floats(0.2, 20), st.integers(0, 50))
def test_mse_identity(n, alpha, lam, seed):
    tr = simulate_run(SimConfig(n=n, lam=lam, alpha=alpha, dt=0.05, steps=40, runs=1,
                                base_seed=seed), 0)
    assert np.max(np.abs(tr.mse - 2 * (1 - tr.q))) <= 1e-12
    assert tr.norm_drift <= 1e-9


def test_first_order_in_dt():
    base = dict(n=400, lam=2, alpha=0.3, runs=1, base_seed=5)
    q = [simulate_run(SimConfig(dt=dt, steps=int(round(5 / dt)), **base), 0).q[-1]
         for dt in (0.1, 0.05, 0.025)]
    ratio = (q[0] - q[1]) / (q[1] - q[2])
    assert 1.5 <= ratio <= 3


def test_ensemble_quantiles_and_thread_invariance():
    cfg = SimConfig(n=100, lam=2, alpha=0.2, dt=0.1, steps=20, runs=8)
    a = ensemble(cfg, threads=1)
    b = ensemble(cfg, threads=4)
    for qa, qb in zip(a.q_quantiles, b.q_quantiles):
        assert np.array_equal(qa, qb)
    p10, p50, p90 = a.q_quantiles
    assert np.all(p10 <= p50) and np.all(p50 <= p90)


def test_sub_critical_similarity_overtakes():
    cfg = SimConfig(n=1000, lam=0.5, alpha=0.5, dt=0.1, steps=100, runs=5)
    st_ = ensemble(cfg)
    q50 = st_.q_quantiles[1]
    p50 = st_.p1_quantiles[1]
    assert q50[-1] < q50[0]
    assert p50[-1] > p50[0] and p50[-1] > q50[-1]


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(alpha=2.0)
    with pytest.raises(DomainError):
        ensemble(SimConfig(runs=1))
