import math

import numpy as np
import pytest

from rssim import channels as chn
from rssim import linops, mutinfo, renyi
from rssim.settings import SolverSettings
from oracles import amplitude_damping_vn_scan, channel_mi_grid, classical_mi, state_mi_grid

FAST = SolverSettings(multistarts=3)
PHI = linops.maximally_entangled(2)
CLASSICAL = np.diag([0.5, 0, 0, 0.5]).astype(complex)


def test_product_state_is_zero():
    rng = np.random.default_rng(0)
    rb = linops.random_density(2, rng)
    rho = np.kron(linops.random_density(2, rng), rb)
    res = mutinfo.state_mi_alpha(rho, (2, 2), 1.5)
    assert abs(res.value) <= 1e-9
    np.testing.assert_allclose(res.minimizer_sigma, rb, atol=1e-5)


@pytest.mark.parametrize("alpha", [1.1, 1.5, 2.0])
def test_maximally_entangled_is_two_bits(alpha):
    res = mutinfo.state_mi_alpha(PHI, (2, 2), alpha)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    grid, _ = state_mi_grid(PHI, alpha, n=21)
    assert abs(grid - 2.0) <= 1e-6
    np.testing.assert_allclose(res.minimizer_sigma, np.eye(2) / 2, atol=1e-5)


def test_classically_correlated_is_one_bit():
    res = mutinfo.state_mi_alpha(CLASSICAL, (2, 2), 1.5)
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert abs(state_mi_grid(CLASSICAL, 1.5, n=21)[0] - 1.0) <= 1e-6


@pytest.mark.parametrize("alpha", [1.3, 2.0, 5.0])
def test_classical_state_matches_closed_form(alpha):
    p = np.random.default_rng(1).dirichlet(np.ones(6)).reshape(2, 3)
    rho = np.diag(p.ravel()).astype(complex)
    res = mutinfo.state_mi_alpha(rho, (2, 3), alpha)
    assert res.value == pytest.approx(classical_mi(p, alpha), abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_state_value_matches_direct_divergence(seed):
    rho = linops.random_density(4, np.random.default_rng(seed))
    res = mutinfo.state_mi_alpha(rho, (2, 2), 1.7)
    direct = mutinfo.state_sandwiched_value(rho, (2, 2), res.minimizer_sigma, 1.7)
    assert res.value == pytest.approx(direct, abs=1e-10)
    assert 0 <= res.value <= 2 + 1e-9
    assert res.converged and res.restart_spread >= 0


@pytest.mark.parametrize("seed", range(3))
def test_simplex_reference_path_agrees(seed):
    rho = linops.random_density(4, np.random.default_rng(seed + 10))
    fast = mutinfo.state_mi_alpha(rho, (2, 2), 1.5)
    ref = mutinfo.state_mi_alpha(rho, (2, 2), 1.5, SolverSettings(inner_method="simplex"))
    assert abs(fast.value - ref.value) <= 1e-9


def test_rank_deficient_marginal():
    # ρ_B supported on a 2-dim subspace of a qutrit
    rng = np.random.default_rng(3)
    v = np.zeros((6, 4), dtype=complex)
    v[[0, 1, 3, 4], range(4)] = 1
    rho = v @ linops.random_density(4, rng) @ v.conj().T
    res = mutinfo.state_mi_alpha(rho, (2, 3), 1.5)
    assert res.minimizer_sigma.shape == (3, 3)
    assert abs(res.minimizer_sigma[2, 2]) <= 1e-12
    assert res.value == pytest.approx(mutinfo.state_sandwiched_value(rho, (2, 3), res.minimizer_sigma, 1.5),
                                      abs=1e-10)


def test_alpha_must_exceed_one():
    with pytest.raises(ValueError):
        mutinfo.state_mi_alpha(PHI, (2, 2), 1.0)
    with pytest.raises(ValueError):
        mutinfo.channel_mi_alpha(chn.identity(2), 0.9)


@pytest.mark.parametrize("alpha", [1.2, 2.0])
def test_identity_channel(alpha):
    res = mutinfo.channel_mi_alpha(chn.identity(2), alpha, FAST)
    assert res.value == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(res.maximizer_input, np.eye(2) / 2, atol=1e-4)


def test_fully_depolarizing_and_dephasing_channels():
    assert mutinfo.channel_mi_alpha(chn.depolarizing(2, 1.0), 1.5, FAST).value <= 1e-8
    assert mutinfo.channel_mi_alpha(chn.dephasing(1.0), 1.5, FAST).value == pytest.approx(1.0, abs=1e-6)


@pytest.mark.slow
def test_channel_values_match_grid_oracle():
    assert abs(channel_mi_grid(chn.identity(2).kraus, 1.2) - 2.0) <= 1e-6
    assert abs(channel_mi_grid(chn.dephasing(1.0).kraus, 1.5) - 1.0) <= 1e-6
    ch = chn.amplitude_damping(0.3)
    assert abs(channel_mi_grid(ch.kraus, 1.5) - mutinfo.channel_mi_alpha(ch, 1.5, FAST).value) <= 1e-5


def test_depolarizing_closed_form_at_two():
    # for a covariant channel the optimum input is I/2 and ρ_RB is isotropic
    p = 0.5
    res = mutinfo.channel_mi_alpha(chn.depolarizing(2, p), 2.0, FAST)
    lam_big, lam_small = 1 - 3 * p / 4, p / 4
    q = lam_big**2 + 3 * lam_small**2
    assert res.value == pytest.approx(math.log2(4 * q), abs=1e-8)


def test_per_input_value_and_bounds():
    ch = chn.amplitude_damping(0.4)
    rho_a = linops.random_density(2, np.random.default_rng(4))
    at = mutinfo.channel_mi_alpha_at(ch, rho_a, 1.5)
    direct = mutinfo.state_mi_alpha(chn.output_state(ch, rho_a), (2, 2), 1.5)
    assert at.value == pytest.approx(direct.value, abs=1e-9)
    best = mutinfo.channel_mi_alpha(ch, 1.5, FAST)
    assert at.value <= best.value + 1e-9
    i_vn = mutinfo.channel_mi_vn(ch, FAST).value
    assert i_vn <= best.value + 1e-9 <= 2 + 2e-9


def test_von_neumann_examples():
    assert mutinfo.channel_mi_vn(chn.identity(2), FAST).value == pytest.approx(2.0, abs=1e-9)
    assert mutinfo.channel_mi_vn(chn.depolarizing(2, 1.0), FAST).value <= 1e-9
    scan = amplitude_damping_vn_scan(0.5)
    assert abs(mutinfo.channel_mi_vn(chn.amplitude_damping(0.5), FAST).value - scan) <= 1e-4
    rho_a = linops.random_density(2, np.random.default_rng(5))
    ch = chn.amplitude_damping(0.2)
    assert mutinfo.channel_mi_vn_at(ch, rho_a) == pytest.approx(
        renyi.mutual_information(chn.output_state(ch, rho_a), (2, 2)), abs=1e-12
    )


@pytest.mark.parametrize("name, kw", [("amplitude_damping", {"gamma": 0.3}), ("depolarizing", {"p": 0.4})])
def test_alpha_to_one_continuity(name, kw):
    ch = chn.canonical(name, **kw)
    near = mutinfo.channel_mi_alpha(ch, 1.001, FAST).value
    assert abs(near - mutinfo.channel_mi_vn(ch, FAST).value) <= 2e-2


def test_alpha_monotone_on_grid():
    ch = chn.amplitude_damping(0.3)
    vals = [mutinfo.channel_mi_alpha(ch, a, FAST).value for a in (1.05, 1.25, 1.5, 1.75, 2.0)]
    assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))


def test_alpha_ladder_values():
    assert list(mutinfo.alpha_ladder(16)) == [2, 4, 8, 16]
    est = mutinfo.channel_mi_max(chn.identity(2), FAST)
    assert est.value == pytest.approx(2.0, abs=1e-6) and est.converged
    assert mutinfo.channel_mi_max(chn.depolarizing(2, 1.0), FAST).value <= 1e-8
    est = mutinfo.channel_mi_max(chn.dephasing(1.0), FAST)
    assert est.value == pytest.approx(1.0, abs=1e-6)
    assert [a for a, _ in est.ladder] == [2.0, 4.0]


def test_ladder_flags_cap_and_is_monotone():
    ch = chn.depolarizing(2, 0.5)
    est = mutinfo.channel_mi_max(ch, SolverSettings(multistarts=2, alpha_ladder_cap=64))
    vals = [v for _, v in est.ladder]
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))
    assert not est.converged
    assert est.value <= mutinfo.channel_max_information(ch) + 1e-6


def test_max_information_sdp():
    assert mutinfo.channel_max_information(chn.identity(2)) == pytest.approx(2.0, abs=1e-6)
    assert mutinfo.channel_max_information(chn.dephasing(1.0)) == pytest.approx(1.0, abs=1e-6)
    val, sigma = mutinfo.state_max_information(PHI, (2, 2))
    assert val == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(sigma, np.eye(2) / 2, atol=1e-5)
    est = mutinfo.state_mi_max(CLASSICAL, (2, 2))
    assert est.value == pytest.approx(1.0, abs=1e-6)


def test_result_describe():
    res = mutinfo.state_mi_alpha(PHI, (2, 2), 2.0)
    text = res.describe(6)
    assert "value=2.000000 bits" in text and "alpha=2" in text
