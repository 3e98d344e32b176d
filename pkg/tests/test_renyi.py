import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rssim import linops, renyi
from oracles import sandwiched

seeds = st.integers(min_value=0, max_value=2**31 - 1)
alphas = st.floats(min_value=1.01, max_value=2.0)


def classical_q(p, q, a):
    return float(np.sum(p**a * q ** (1 - a)))


def test_q_alpha_examples():
    rho = linops.random_density(3, np.random.default_rng(0))
    assert renyi.q_alpha(rho, rho, 1.7) == pytest.approx(1.0, abs=1e-12)
    assert renyi.q_alpha(np.diag([1.0, 0.0]), np.eye(2) / 2, 2.0) == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("alpha", [1.1, 1.5, 2.0, 3.0])
def test_commuting_pair_matches_classical(alpha):
    rng = np.random.default_rng(1)
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    u = linops.random_unitary(4, rng)
    x, y = u @ np.diag(p) @ u.conj().T, u @ np.diag(q) @ u.conj().T
    assert renyi.q_alpha(x, y, alpha) == pytest.approx(classical_q(p, q, alpha), rel=1e-10)
    expected = math.log2(classical_q(p, q, alpha)) / (alpha - 1)
    assert renyi.d_alpha(x, y, alpha) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0, 10.0])
def test_d_alpha_pure_vs_maximally_mixed(alpha):
    assert renyi.d_alpha(np.diag([1.0, 0.0]), np.eye(2) / 2, alpha) == pytest.approx(1.0, abs=1e-12)


def test_d_alpha_self_and_support():
    rho = linops.random_density(2, np.random.default_rng(2))
    assert abs(renyi.d_alpha(rho, rho, 1.5)) <= 1e-12
    assert renyi.d_alpha(np.eye(2) / 2, np.diag([1.0, 0.0]), 1.5) == math.inf
    assert renyi.support_violation(np.eye(2) / 2, np.diag([1.0, 0.0])) == pytest.approx(0.5)
    # α < 1 tolerates the support mismatch
    assert math.isfinite(renyi.d_alpha(np.eye(2) / 2, np.diag([1.0, 0.0]), 0.7))


def test_d_alpha_one_routes_to_umegaki():
    rng = np.random.default_rng(3)
    r, s = linops.random_density(2, rng), linops.random_density(2, rng)
    assert renyi.d_alpha(r, s, 1.0) == renyi.umegaki(r, s)


def test_d_alpha_large_order_is_stable():
    rng = np.random.default_rng(4)
    r, s = linops.random_density(2, rng), linops.random_density(2, rng)
    val = renyi.d_alpha(r, s, 2048.0)
    assert math.isfinite(val)
    assert val <= renyi.d_max(r, s) + 1e-9


def test_d_max_examples():
    rho = linops.random_density(3, np.random.default_rng(5))
    assert abs(renyi.d_max(rho, rho)) <= 1e-10
    assert renyi.d_max(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(1.0, abs=1e-14)
    for d in (2, 3):
        pi = np.eye(d) / d
        assert renyi.d_max(linops.maximally_entangled(d), np.kron(pi, pi)) == pytest.approx(2 * math.log2(d))
    assert renyi.d_max(np.eye(2) / 2, np.diag([1.0, 0.0])) == math.inf


def test_entropies():
    assert renyi.von_neumann(np.eye(2) / 2) == pytest.approx(1.0)
    assert renyi.von_neumann(np.diag([1.0, 0.0])) == 0.0
    rho = linops.random_density(3, np.random.default_rng(6))
    assert abs(renyi.umegaki(rho, rho)) <= 1e-12
    assert renyi.umegaki(np.eye(2) / 2, np.diag([1.0, 0.0])) == math.inf
    assert renyi.mutual_information(linops.maximally_entangled(2), (2, 2)) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(5))
def test_alpha_to_one_continuity(seed):
    rng = np.random.default_rng(seed)
    r, s = linops.random_density(2, rng), linops.random_density(2, rng)
    assert abs(renyi.d_alpha(r, s, 1 + 1e-4) - renyi.umegaki(r, s)) <= 1e-3


@given(seeds, alphas)
@settings(max_examples=30, deadline=None)
def test_matches_independent_definition(seed, alpha):
    rng = np.random.default_rng(seed)
    r, s = linops.random_density(3, rng), linops.random_density(3, rng)
    assert renyi.d_alpha(r, s, alpha) == pytest.approx(sandwiched(r, s, alpha), abs=1e-9)


@given(seeds, alphas)
@settings(max_examples=30, deadline=None)
def test_data_processing_under_partial_trace(seed, alpha):
    rng = np.random.default_rng(seed)
    r, s = linops.random_density(4, rng), linops.random_density(4, rng)
    lhs = renyi.d_alpha(linops.partial_trace(r, (2, 2), 0), linops.partial_trace(s, (2, 2), 0), alpha)
    assert lhs <= renyi.d_alpha(r, s, alpha) + 1e-9


@given(seeds, alphas, alphas)
@settings(max_examples=30, deadline=None)
def test_monotone_in_alpha(seed, a1, a2):
    a1, a2 = sorted((a1, a2))
    rng = np.random.default_rng(seed)
    r, s = linops.random_density(2, rng), linops.random_density(2, rng)
    assert renyi.d_alpha(r, s, a1) <= renyi.d_alpha(r, s, a2) + 1e-9


@given(seeds, alphas)
@settings(max_examples=30, deadline=None)
def test_unitary_invariance(seed, alpha):
    rng = np.random.default_rng(seed)
    r, s = linops.random_density(3, rng), linops.random_density(3, rng)
    u = linops.random_unitary(3, rng)
    lhs = renyi.d_alpha(u @ r @ u.conj().T, u @ s @ u.conj().T, alpha)
    assert abs(lhs - renyi.d_alpha(r, s, alpha)) <= 1e-9


@given(seeds, alphas)
@settings(max_examples=30, deadline=None)
def test_additive_on_products(seed, alpha):
    rng = np.random.default_rng(seed)
    r1, s1, r2, s2 = (linops.random_density(2, rng) for _ in range(4))
    lhs = renyi.d_alpha(np.kron(r1, r2), np.kron(s1, s2), alpha)
    assert abs(lhs - renyi.d_alpha(r1, s1, alpha) - renyi.d_alpha(r2, s2, alpha)) <= 1e-9
