import itertools
import json
import math

import numpy as np
import pytest

from rescode.bounds import default_delta_grid, sandwich_bounds
from rescode.codesim import (
    Codebook,
    build_pgm,
    check_privacy,
    codebook_success,
    collision_success_dense,
    encode,
    find_achievable_log_m,
    monte_carlo_achievability,
    random_codebook,
    results_to_csv,
    success_probability_direct,
    success_probability_via_collision,
)
from rescode.entropy import collision_relative_entropy, info_spectrum_relative_entropy
from rescode.errors import SizeGuardError
from rescode.qcore import projector, random_density_matrix, random_pure_state
from rescode.twirl import (
    FiniteUnitaryGroup,
    bell_state,
    dephasing_channel,
    heisenberg_weyl_group,
    local_unital_twirl,
    pauli_group_on_A,
    permutation_group,
    uniform_superposition,
    z_group,
)

PLUS = projector(uniform_superposition(2))
BELL = projector(bell_state())


def test_encode_examples():
    g = pauli_group_on_A(2, 2)
    states = encode(BELL, g, Codebook((0, 1, 2, 3)))
    overlaps = np.einsum("aij,bji->ab", states, states).real
    assert np.allclose(overlaps, np.eye(4))
    same = encode(PLUS, z_group(2), Codebook((0, 0, 0)))
    assert all(np.allclose(s, PLUS) for s in same)
    pm = encode(PLUS, z_group(2), Codebook((0, 1)))
    assert np.allclose(pm[1], projector([1 / math.sqrt(2), -1 / math.sqrt(2)]))
    with pytest.raises(IndexError):
        encode(PLUS, z_group(2), Codebook((0, 2)))


def test_pgm_examples(rng):
    dec = build_pgm(np.array([projector([1, 0]), projector([0, 1])]))
    assert np.allclose(dec.elements[0], projector([1, 0]))
    rho = projector([1, 0, 0])
    single = build_pgm(np.array([rho]))
    assert np.allclose(single.elements[0], rho)
    assert single.support_dim == 1
    mixed = random_density_matrix(3, rng, rank=2)
    twice = build_pgm(np.array([mixed, mixed]))
    ev, u = np.linalg.eigh(mixed)
    supp = u[:, ev > 1e-9]
    assert np.allclose(twice.elements[0], supp @ supp.conj().T / 2)
    assert twice.completeness_residual() < 1e-10
    for e in twice.povm:
        assert np.linalg.eigvalsh(e).min() > -1e-12


def test_success_examples():
    g = pauli_group_on_A(2, 2)
    assert codebook_success(BELL, g, Codebook((0, 1, 2, 3))) == pytest.approx(1.0, abs=1e-10)
    for m in (2, 3, 5):
        assert codebook_success(PLUS, z_group(2), Codebook((1,) * m)) == pytest.approx(1 / m)
    assert codebook_success(PLUS, z_group(2), Codebook((0, 1))) == pytest.approx(1.0)
    assert success_probability_via_collision(PLUS, z_group(2), Codebook((1,))) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(50))
def test_collision_identity_random_qubits(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(2, rng, rank=1 + seed % 2)
    g = heisenberg_weyl_group(2)
    cb = random_codebook(len(g), 1 + seed % 5, rng)
    states = encode(rho, g, cb)
    direct = success_probability_direct(states, build_pgm(states))
    assert abs(direct - success_probability_via_collision(rho, g, cb)) < 1e-8
    assert abs(direct - collision_success_dense(rho, g, cb)) < 1e-8


def test_collision_form_matches_divergence(rng):
    # (1/M) 2^{D2(tau_MQ || tau_M ⊗ tau_Q)} with tau_M uniform
    rho = random_density_matrix(3, rng)
    g = heisenberg_weyl_group(3)
    cb = Codebook((0, 4, 4, 7))
    states = encode(rho, g, cb)
    m, d = 4, 3
    tau = np.zeros((m * d, m * d), dtype=complex)
    for k, s in enumerate(states):
        tau[k * d:(k + 1) * d, k * d:(k + 1) * d] = s / m
    ref = np.kron(np.eye(m) / m, states.mean(axis=0))
    val = 2 ** collision_relative_entropy(tau, ref) / m
    assert val == pytest.approx(success_probability_via_collision(rho, g, cb), abs=1e-10)


def test_exhaustive_codebook_mean():
    # all four codebooks of |+> with the two-element z group, M = 2
    vals = [codebook_success(PLUS, z_group(2), Codebook(c)) for c in itertools.product(range(2), repeat=2)]
    assert np.mean(vals) == pytest.approx(0.75)
    res = monte_carlo_achievability(PLUS, z_group(2), 2, 1000, seed=11)
    assert abs(res.mean_success - 0.75) < 4 * res.stderr + 1e-9


def test_monte_carlo_determinism_and_threads():
    a = monte_carlo_achievability(PLUS, z_group(2), 3, 50, seed=7)
    b = monte_carlo_achievability(PLUS, z_group(2), 3, 50, seed=7, threads=4)
    assert a.per_codebook == b.per_codebook
    assert a.to_json() == b.to_json()
    c = monte_carlo_achievability(PLUS, z_group(2), 3, 50, seed=8)
    assert c.per_codebook != a.per_codebook
    assert all(-1e-9 <= p <= 1 + 1e-9 for p in a.per_codebook)
    assert json.loads(a.to_json())["M"] == 3


def test_single_message_always_decodes():
    res = monte_carlo_achievability(random_density_matrix(3, np.random.default_rng(0)), heisenberg_weyl_group(3), 1, 5)
    assert res.mean_success == pytest.approx(1.0)


def test_csv_output():
    rows = [monte_carlo_achievability(PLUS, z_group(2), m, 10, seed=1) for m in (1, 2)]
    lines = results_to_csv(rows).strip().splitlines()
    assert lines[0] == "M,mean_success,stderr" and len(lines) == 3


def test_guards():
    big = z_group(2).power(7)
    with pytest.raises(SizeGuardError):
        monte_carlo_achievability(projector(uniform_superposition(128)), big, 2, 1)
    with pytest.raises(SizeGuardError):
        monte_carlo_achievability(PLUS, z_group(2), 300, 1)


def test_find_achievable_examples():
    g = pauli_group_on_A(2, 2)
    rep = find_achievable_log_m(BELL, g, 0.01, trials=10, strategy="distinct")
    assert rep.log2_M >= 2
    free = find_achievable_log_m(np.eye(4) / 4, g, 0.3, trials=10)
    assert free.log2_M == 0
    two = projector(uniform_superposition(4))
    rep2 = find_achievable_log_m(two, z_group(2).power(2), 0.01, trials=10, strategy="distinct",
                                 twirl=dephasing_channel(4))
    assert rep2.log2_M == 2
    assert rep2.sandwich["best_lower"] <= 2 + 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_achieved_rate_respects_bounds(seed):
    rng = np.random.default_rng(seed)
    rho = projector(random_pure_state(3, rng))
    tw = dephasing_channel(3)
    eps = 0.1
    rep = find_achievable_log_m(rho, z_group(3), eps, trials=60, seed=seed, twirl=tw)
    bounds = sandwich_bounds(rho, tw, eps, default_delta_grid(eps))
    assert bounds.best_lower <= rep.log2_M + 1e-6
    assert rep.log2_M <= bounds.log2_upper + 1e-6


def test_d2_chain_inequality(rng):
    # 2^{D2(rho || (rho + (M-1) G rho)/M)} >= M (1-delta)(1 - M 2^{-D_s^delta})
    for _ in range(20):
        rho = random_density_matrix(3, rng)
        g = dephasing_channel(3)(rho)
        for m in (2, 3, 5):
            mix = (rho + (m - 1) * g) / m
            lhs = 2 ** collision_relative_entropy(rho, mix)
            for delta in (0.05, 0.2):
                ds = info_spectrum_relative_entropy(rho, g, delta)
                assert lhs >= m * (1 - delta) * (1 - m * 2 ** (-ds)) - 1e-8


def test_privacy():
    g = pauli_group_on_A(2, 2)
    cb = Codebook((0, 1, 2, 3))
    assert check_privacy(BELL, g, cb, local_unital_twirl((2, 2))) < 1e-8
    rho = random_density_matrix(3, np.random.default_rng(2))
    assert check_privacy(rho, heisenberg_weyl_group(3), Codebook(tuple(range(9))), heisenberg_weyl_group_twirl()) < 1e-8
    x_group = FiniteUnitaryGroup([np.eye(2), np.array([[0, 1], [1, 0]])])
    assert check_privacy(projector([1, 0]), x_group, Codebook((0, 1)), dephasing_channel(2)) > 0.5


def heisenberg_weyl_group_twirl():
    from rescode.twirl import finite_group_twirl

    return finite_group_twirl(heisenberg_weyl_group(3))


def test_permutation_group_codebooks():
    g = permutation_group(2, 2)
    psi = np.zeros(4)
    psi[1] = 1
    assert codebook_success(projector(psi), g, Codebook((0, 1))) == pytest.approx(1.0)
