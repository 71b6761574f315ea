import math

import numpy as np
import pytest

from spikedyn.errors import DomainError, SingularSystemError
from spikedyn.ide import ContourGrid
from spikedyn.matrices import (NoiseInstance, ResolventProbe, concentration_sweep, ks_distance,
                               resolvent_element, sample_wigner, semicircle_cdf,
                               spectrum_in_interval)
from spikedyn.semicircle import g_sc


def unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def zero_instance(n):
    return NoiseInstance(n, "gaussian_goe", 0, np.zeros((n, n)))


def test_determinism_and_symmetry():
    a = sample_wigner(50, "gaussian_goe", 7).matrix
    b = sample_wigner(50, "gaussian_goe", 7).matrix
    assert np.array_equal(a, b)
    assert np.array_equal(a, a.T)
    assert not np.array_equal(a, sample_wigner(50, "gaussian_goe", 8).matrix)


def test_entry_variances():
    n = 400
    H = sample_wigner(n, "gaussian_goe", 1).matrix * math.sqrt(n)
    off = H[np.triu_indices(n, 1)]
    assert np.var(off) == pytest.approx(1.0, rel=0.02)
    assert np.var(np.diag(H)) == pytest.approx(2.0, rel=0.2)
    R = sample_wigner(n, "rademacher", 1).matrix * math.sqrt(n)
    assert set(np.unique(R[np.triu_indices(n, 1)])) == {-1.0, 1.0}
    assert np.allclose(np.abs(np.diag(R)), math.sqrt(2))


def test_cdf_endpoints():
    assert semicircle_cdf(-2) == pytest.approx(0.0, abs=1e-15)
    assert semicircle_cdf(2) == pytest.approx(1.0, abs=1e-15)
    assert semicircle_cdf(0) == pytest.approx(0.5)


def test_semicircle_law_gaussian():
    assert ks_distance(sample_wigner(2000, "gaussian_goe", 3).eigvals) <= 0.05


def test_semicircle_law_rademacher():
    assert ks_distance(sample_wigner(1000, "rademacher", 3).eigvals) <= 0.05


def test_spectrum_interval():
    assert all(spectrum_in_interval(sample_wigner(500, "gaussian_goe", s), 0.4) for s in range(20))
    assert spectrum_in_interval(zero_instance(10), 0.4)
    with pytest.raises(DomainError):
        spectrum_in_interval(zero_instance(10), -1.0)


def test_resolvent_trivial_cases():
    H0 = zero_instance(5)
    e0, e1 = unit(5, 0), unit(5, 1)
    assert resolvent_element(H0, ResolventProbe(e0, e0, 3.0)) == pytest.approx(-1 / 3)
    assert resolvent_element(H0, ResolventProbe(e0, e1, 1.0 + 1j)) == 0
    with pytest.raises(SingularSystemError):
        resolvent_element(H0, ResolventProbe(e0, e0, 0.0))
    with pytest.raises(DomainError):
        ResolventProbe(2 * e0, e0, 3.0)


def test_resolvent_local_law_moderate_n():
    noise = sample_wigner(800, "gaussian_goe", 2)
    e = unit(800, 0)
    val = resolvent_element(noise, ResolventProbe(e, e, 2.5))
    assert abs(val - g_sc(2.5)) <= 0.1
    assert g_sc(2.5) == pytest.approx(-0.5)


def test_resolvent_symmetry_and_conjugation():
    noise = sample_wigner(60, "gaussian_goe", 4)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(60)
    v = rng.standard_normal(60)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    z = 0.3 + 0.7j
    a = resolvent_element(noise, ResolventProbe(u, v, z))
    b = resolvent_element(noise, ResolventProbe(v, u, z))
    c = resolvent_element(noise, ResolventProbe(u, v, np.conj(z)))
    assert abs(a - b) <= 1e-12
    assert abs(c - np.conj(a)) <= 1e-12


def test_concentration_trend_and_rate():
    rep = concentration_sweep([100, 1600], 20, ContourGrid(2.5, 0.4, 64))
    ratio = rep.median(100) / rep.median(1600)
    assert rep.median(1600) < rep.median(100)
    assert 2 <= ratio <= 8
    for q in rep.quantiles:
        assert q[0] <= q[1] <= q[2]


def test_concentration_orthogonal_pair():
    rep = concentration_sweep([400], 5, pair_kind="uv_orthogonal")
    assert all(np.all(s >= 0) for s in rep.sup_errors)
    assert rep.median(400) < 0.1


def test_concentration_schedule_invariance():
    from concurrent.futures import ThreadPoolExecutor

    a = concentration_sweep([60, 120], 6, seed=3)
    with ThreadPoolExecutor(3) as pool:
        b = concentration_sweep([60, 120], 6, seed=3, executor=pool)
    assert all(np.array_equal(x, y) for x, y in zip(a.sup_errors, b.sup_errors))
