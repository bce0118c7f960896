import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from rescode.entropy import (
    collision_relative_entropy,
    entropy_variance,
    hypothesis_testing_relative_entropy,
    info_spectrum_relative_entropy,
    inverse_normal_cdf,
    kernel_weight,
    matrix_covariance,
    neyman_pearson_test,
    normal_cdf,
    relative_entropy,
    relative_entropy_variance,
    shannon_entropy,
    spectrum_weight,
    von_neumann_entropy,
)
from rescode.errors import MonotonicityError, SupportError
from rescode.qcore import projector, random_density_matrix, random_unitary
from rescode.twirl import bell_state


# --- oracles -----------------------------------------------------------------


def np_exhaustive(p, q, eps):
    """min sum Q_i q_i over 0<=Q<=1, sum Q_i p_i = 1-eps, trying every support set plus one fractional index."""
    target = 1 - eps
    best = math.inf
    n = len(p)
    for r in range(n + 1):
        for s in itertools.combinations(range(n), r):
            mass = sum(p[i] for i in s)
            cost = sum(q[i] for i in s)
            if mass >= target - 1e-15:
                if mass - target < 1e-15:
                    best = min(best, cost)
                continue
            for j in set(range(n)) - set(s):
                frac = (target - mass) / p[j] if p[j] > 0 else math.inf
                if frac <= 1:
                    best = min(best, cost + frac * q[j])
    return -math.log2(best)


def ds_grid(p, q, delta, points=200_001):
    logs = np.log2(p / q)
    half = float(np.max(np.abs(logs))) + 1.0
    assert 2 * half / (points - 1) <= 1e-4
    ks = np.linspace(-half, half, points)
    weight = ((p[None, :] <= 2.0 ** ks[:, None] * q[None, :]) * p[None, :]).sum(axis=1)
    return float(ks[weight <= delta].max())


def random_commuting_pair(rng, d):
    p = rng.dirichlet(np.ones(d))
    q = rng.dirichlet(np.ones(d))
    u = random_unitary(d, rng)
    return p, q, u @ np.diag(p) @ u.conj().T, u @ np.diag(q) @ u.conj().T


# --- closed forms ------------------------------------------------------------


def test_entropies_of_simple_states():
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
    assert von_neumann_entropy(projector(bell_state())) == pytest.approx(0.0, abs=1e-12)
    assert shannon_entropy([0.75, 0.25]) == pytest.approx(0.8112781244591328)
    assert entropy_variance(np.eye(3) / 3) == pytest.approx(0.0, abs=1e-12)


def test_bell_against_maximally_mixed():
    rho, sigma = projector(bell_state()), np.eye(4) / 4
    assert relative_entropy(rho, sigma) == pytest.approx(2.0, abs=1e-9)
    assert relative_entropy_variance(rho, sigma) == pytest.approx(0.0, abs=1e-9)
    assert collision_relative_entropy(rho, sigma) == pytest.approx(2.0, abs=1e-9)
    for eps in (0.05, 0.1, 0.3):
        assert hypothesis_testing_relative_entropy(rho, sigma, eps) == pytest.approx(math.log2(4 / (1 - eps)), abs=1e-9)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_commuting_pairs_match_classical_formulas(rng, d):
    p, q, rho, sigma = random_commuting_pair(rng, d)
    lr = np.log2(p / q)
    dd = float(p @ lr)
    assert relative_entropy(rho, sigma) == pytest.approx(dd, abs=1e-10)
    assert relative_entropy_variance(rho, sigma) == pytest.approx(float(p @ lr**2) - dd**2, abs=1e-10)
    assert collision_relative_entropy(rho, sigma) == pytest.approx(math.log2(np.sum(p**2 / q)), abs=1e-10)


def test_info_spectrum_step_values():
    rho, sigma = np.diag([0.75, 0.25]), np.eye(2) / 2
    assert info_spectrum_relative_entropy(rho, sigma, 0.1) == pytest.approx(-1.0, abs=2e-6)
    assert info_spectrum_relative_entropy(rho, sigma, 0.3) == pytest.approx(math.log2(1.5), abs=2e-6)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("delta", [0.05, 0.2, 0.5])
def test_info_spectrum_matches_grid_oracle(seed, delta):
    rng = np.random.default_rng(seed)
    p, q, rho, sigma = random_commuting_pair(rng, 4)
    assert abs(info_spectrum_relative_entropy(rho, sigma, delta) - ds_grid(p, q, delta)) < 1e-4


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("eps", [0.01, 0.1, 0.4])
def test_hypothesis_testing_matches_exhaustive_oracle(seed, eps):
    rng = np.random.default_rng(100 + seed)
    p, q, rho, sigma = random_commuting_pair(rng, 5)
    assert abs(hypothesis_testing_relative_entropy(rho, sigma, eps) - np_exhaustive(p, q, eps)) < 1e-8


def test_hypothesis_testing_with_degenerate_ratios():
    # ties in p/q leave the optimal test non-unique; the value is still fixed
    p = np.array([0.4, 0.2, 0.2, 0.2])
    q = np.array([0.2, 0.1, 0.1, 0.6])
    for eps in (0.1, 0.3, 0.5):
        assert hypothesis_testing_relative_entropy(np.diag(p), np.diag(q), eps) == pytest.approx(
            np_exhaustive(p, q, eps), abs=1e-8)


def test_neyman_pearson_test_is_feasible_and_beats_random_tests(rng):
    rho, sigma = random_density_matrix(4, rng), random_density_matrix(4, rng)
    eps = 0.2
    q = neyman_pearson_test(rho, sigma, eps)
    ev = np.linalg.eigvalsh(q)
    assert ev.min() > -1e-12 and ev.max() < 1 + 1e-12
    assert np.trace(q @ rho).real == pytest.approx(1 - eps, abs=1e-10)
    best = np.trace(q @ sigma).real
    for _ in range(200):
        u = random_unitary(4, rng)
        w = rng.random(4)
        t = (u * w) @ u.conj().T
        a = np.trace(t @ rho).real
        if a < 1e-9:
            continue
        t = t * min(1 / w.max(), (1 - eps) / a)
        if np.trace(t @ rho).real >= 1 - eps - 1e-12:
            assert np.trace(t @ sigma).real >= best - 1e-10


def test_support_violations():
    rho, sigma = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    d = relative_entropy(rho, sigma)
    assert d.infinite and d.quantity == "D"
    with pytest.raises(SupportError):
        relative_entropy_variance(rho, sigma)
    with pytest.raises(SupportError):
        collision_relative_entropy(rho, sigma)
    assert kernel_weight(rho, sigma) == pytest.approx(1.0)
    assert math.isinf(hypothesis_testing_relative_entropy(rho, sigma, 0.1))


def test_spectrum_weight_is_monotone_and_checked(rng):
    rho, sigma = random_density_matrix(3, rng), random_density_matrix(3, rng)
    ks = np.linspace(-6, 6, 300)
    vals = [spectrum_weight(rho, sigma, k) for k in ks]
    assert np.all(np.diff(vals) >= -1e-9)
    info_spectrum_relative_entropy(rho, sigma, 0.2, check_monotone=True)


def test_monotonicity_guard_reports_decrease(monkeypatch):
    import rescode.entropy as ent

    calls = iter(range(10**6))
    monkeypatch.setattr(ent, "spectrum_weight", lambda r, s, k: 0.5 + 0.4 * math.sin(next(calls)))
    with pytest.raises(MonotonicityError):
        ent._check_monotone(np.eye(2) / 2, np.eye(2) / 2, -1, 1)


def test_covariance_sign(rng):
    # V(rho||sigma) expands with a minus sign in front of the cross covariance
    rho, sigma = random_density_matrix(3, rng), random_density_matrix(3, rng)
    from rescode.qcore import matrix_log2

    lr, ls = matrix_log2(rho), matrix_log2(sigma)
    expected = matrix_covariance(rho, lr, lr) + matrix_covariance(rho, ls, ls) - 2 * matrix_covariance(rho, lr, ls)
    assert relative_entropy_variance(rho, sigma) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("eps", [0.001, 0.05, 0.3, 0.5, 0.9])
def test_inverse_normal_cdf_against_quadrature(eps):
    x = inverse_normal_cdf(eps)
    mass, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), -math.inf, x)
    assert mass == pytest.approx(eps, abs=1e-10)
    assert normal_cdf(x) == pytest.approx(eps, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4))
def test_divergence_ordering(seed, d):
    # D_2 >= D and D >= 0 for full-rank pairs
    rng = np.random.default_rng(seed)
    rho, sigma = random_density_matrix(d, rng), random_density_matrix(d, rng)
    dv = relative_entropy(rho, sigma)
    assert dv >= -1e-10
    assert collision_relative_entropy(rho, sigma) >= dv - 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0.02, 0.45))
def test_ds_dh_bridge(seed, eps):
    # D_H^eps <= D_s^{eps+delta} + log(1/delta)
    rng = np.random.default_rng(seed)
    rho, sigma = random_density_matrix(3, rng), random_density_matrix(3, rng)
    delta = 0.5 * min(eps, 1 - eps)
    dh = hypothesis_testing_relative_entropy(rho, sigma, eps)
    assert dh <= info_spectrum_relative_entropy(rho, sigma, eps + delta) + math.log2(1 / delta) + 1e-6
