import math

import numpy as np
import pytest

from rssim import channels as chn
from rssim import exponents as ex
from rssim import linops, renyi
from rssim.settings import SolverSettings

FAST = SolverSettings(multistarts=3)


@pytest.fixture(scope="module")
def identity():
    return ex.ChannelProfile(chn.identity(2), FAST)


@pytest.fixture(scope="module")
def dephasing():
    return ex.ChannelProfile(chn.dephasing(1.0), FAST)


@pytest.fixture(scope="module")
def depolarizing():
    return ex.ChannelProfile(chn.depolarizing(2, 0.2), FAST)


def test_lower_exponent_examples(identity, depolarizing):
    ch = identity.ch
    assert ex.lower_exponent(ch, 2.0, FAST, identity).value <= 1e-9
    res = ex.lower_exponent(ch, 3.0, FAST, identity)
    assert res.value == pytest.approx(0.5, abs=1e-9)
    assert res.s_star == pytest.approx(1.0)
    i_vn = depolarizing.i_vn().value
    assert ex.lower_exponent(depolarizing.ch, i_vn, FAST, depolarizing).value <= 1e-9
    with pytest.raises(ValueError):
        ex.lower_exponent(ch, -1.0, FAST, identity)


def test_linear_above_critical_rate(depolarizing):
    rcrit = depolarizing.critical_rate().value
    i2 = depolarizing.i_alpha(2.0).value
    for r in (rcrit + 0.01, rcrit + 0.1):
        e = ex.lower_exponent(depolarizing.ch, r, FAST, depolarizing).value
        assert e == pytest.approx(0.5 * (r - i2), abs=1e-6)


def test_upper_exponent_examples(identity):
    assert ex.upper_exponent(identity.ch, 1.5, FAST, identity).value == 0.0
    res = ex.upper_exponent(identity.ch, 3.0, FAST, identity)
    assert res.value == math.inf and not res.ambiguous
    dep = ex.ChannelProfile(chn.depolarizing(2, 1.0), FAST)
    assert ex.upper_exponent(dep.ch, 0.5, FAST, dep).value == math.inf


def test_lower_and_upper_agree_below_critical(depolarizing):
    i_vn = depolarizing.i_vn().value
    rcrit = depolarizing.critical_rate().value
    for r in np.linspace(i_vn + 0.01, rcrit - 1e-3, 4):
        lo = ex.lower_exponent(depolarizing.ch, r, FAST, depolarizing).value
        up = ex.upper_exponent(depolarizing.ch, r, FAST, depolarizing).value
        assert abs(lo - up) <= 1e-6


def test_upper_between_critical_and_imax(depolarizing):
    rcrit = depolarizing.critical_rate().value
    imax = depolarizing.i_max().value
    r = 0.5 * (rcrit + imax)
    lo = ex.lower_exponent(depolarizing.ch, r, FAST, depolarizing)
    up = ex.upper_exponent(depolarizing.ch, r, FAST, depolarizing)
    assert math.isfinite(up.value)
    assert up.value >= lo.value - 1e-9
    assert up.s_star > 1


def test_upper_flags_ambiguous_band():
    h = lambda r, s: s * (r - 1.0)  # noqa: E731
    near = ex._upper(1.00005, h, 0.5, 0.9, 1.0, True, 1024)
    assert near.ambiguous
    far = ex._upper(1.5, h, 0.5, 0.9, 1.0, True, 1024)
    assert far.value == math.inf and not far.ambiguous
    unconverged = ex._upper(1.5, h, 0.5, 0.9, 1.0, False, 1024)
    assert unconverged.value == math.inf and unconverged.ambiguous


def test_critical_rate_examples(identity, dephasing, depolarizing):
    assert identity.critical_rate().value == pytest.approx(2.0, abs=1e-3)
    assert dephasing.critical_rate().value == pytest.approx(1.0, abs=1e-3)
    rc = ex.critical_rate(depolarizing.ch, FAST, depolarizing)
    assert abs(rc.value - rc.coarse) <= 1e-2
    assert rc.uncertainty >= 0 and not rc.flagged


def test_regimes(identity, dephasing):
    pt = ex.exact_reliability(identity.ch, 1.5, FAST, profile=identity)
    assert pt.regime == "zero" and pt.e_lower == 0.0
    assert ex.exact_reliability(identity.ch, 2.5, FAST, profile=identity).regime == "infinite"
    pt = ex.exact_reliability(dephasing.ch, 1.2, FAST, profile=dephasing)
    assert pt.regime == "bounds_only"
    assert pt.e_lower == pytest.approx(0.1, abs=1e-6)
    # I_max = 1 < 1.2, so the upper exponent diverges
    assert pt.e_upper == math.inf
    quantum = ex.exact_reliability(identity.ch, 1.0, FAST, quantum=True, profile=identity)
    assert quantum.regime == "infinite" and quantum.r == 1.0


def test_exact_regime(depolarizing):
    i_vn = depolarizing.i_vn().value
    rcrit = depolarizing.critical_rate().value
    pt = ex.exact_reliability(depolarizing.ch, 0.5 * (i_vn + rcrit), FAST, profile=depolarizing)
    assert pt.regime == "exact"
    assert pt.e_lower == pt.e_upper > 0


def test_classify_precedence():
    assert ex.classify(2.0, 2.0, 2.0, 2.0) == "infinite"
    assert ex.classify(1.0, 1.0, 1.5, 2.0) == "zero"
    assert ex.classify(1.2, 1.0, 1.5, 2.0) == "exact"
    assert ex.classify(1.7, 1.0, 1.5, 2.0) == "bounds_only"
    with pytest.raises(ValueError):
        ex.CurvePoint(0.0, 0.0, 0.0, "unknown")


def test_identity_curve(identity):
    pts = ex.curve(identity.ch, 0.0, 3.0, 7, FAST, identity)
    assert [p.regime for p in pts] == ["zero"] * 4 + ["infinite"] * 3
    text = ex.curve_csv(pts, identity)
    lines = text.splitlines()
    assert lines[0] == "# channel=identity2"
    assert lines[1].startswith("# I=2, I2=2")
    assert lines[2] == "r,e_lower,e_upper,regime"
    assert lines[-1] == "3,inf,inf,infinite"
    with pytest.raises(ValueError):
        ex.curve(identity.ch, 1.0, 1.0, 3, FAST, identity)
    with pytest.raises(ValueError):
        ex.curve(identity.ch, 0.0, 1.0, 1, FAST, identity)


def test_curve_invariants(depolarizing):
    pts = ex.curve(depolarizing.ch, 1.0, 1.9, 10, FAST, depolarizing)
    lows = [p.e_lower for p in pts]
    assert all(b >= a - 1e-8 for a, b in zip(lows, lows[1:]))
    for p in pts:
        assert p.e_lower <= p.e_upper + 1e-9
        if p.regime == "exact":
            assert abs(p.e_lower - p.e_upper) <= 1e-6


def test_fmt():
    assert ex.fmt(math.inf) == "inf"
    assert ex.fmt(1 / 3) == "0.333333333333"


def test_prefactor_arithmetic(identity):
    assert 2 ** ex.log2_prefactor(1, 1.0, 2) == pytest.approx(512.0)
    rep = ex.finite_n_bound(identity.ch, 1, 3.0, FAST, s=1.0, profile=identity)
    assert rep.prefactor == pytest.approx(512.0)
    assert rep.exponent_bits == pytest.approx(0.5)
    assert rep.clipped and rep.bound_value == 1.0
    assert rep.log2_raw == pytest.approx(9 - 0.5)


def test_finite_n_slope_converges(identity):
    slopes = [-ex.finite_n_bound(identity.ch, n, 3.0, FAST, profile=identity).log2_raw / n for n in (100, 1000, 10000)]
    assert slopes[0] < slopes[1] < slopes[2]
    assert abs(slopes[-1] - 0.5) <= 0.05 * 0.5


def test_finite_n_vacuous_below_capacity(identity):
    rep = ex.finite_n_bound(identity.ch, 50, 1.0, FAST, profile=identity)
    assert rep.clipped and rep.bound_value == 1.0 and rep.exponent_bits < 0
    with pytest.raises(ValueError):
        ex.finite_n_bound(identity.ch, 0, 1.0, FAST, profile=identity)
    with pytest.raises(ValueError):
        ex.finite_n_bound(identity.ch, 5, 1.0, FAST, s=1.5, profile=identity)


def test_finite_n_bound_consistent_with_fields(depolarizing):
    rep = ex.finite_n_bound(depolarizing.ch, 2000, 1.6, FAST, profile=depolarizing)
    assert 0 < rep.s_star <= 1
    raw = rep.log2_prefactor - rep.n * rep.exponent_bits
    assert rep.log2_raw == pytest.approx(raw)
    assert rep.bound_value == pytest.approx(min(1.0, 2.0**raw))
    fixed = ex.finite_n_bound(depolarizing.ch, 2000, 1.6, FAST, s=0.5, profile=depolarizing)
    assert rep.log2_raw <= fixed.log2_raw + 1e-9


def test_one_shot_anchor():
    val = ex.one_shot_fixed_input_bound(chn.identity(2), np.eye(2) / 2, np.eye(2) / 2, c=4.0, s=1.0)
    assert val == pytest.approx(0.5, abs=1e-12)
    assert ex.one_shot_fixed_input_bound(chn.identity(2), np.eye(2) / 2, np.eye(2) / 2, c=1.0, s=1.0) == 1.0
    assert ex.one_shot_fixed_input_bound(chn.identity(2), np.eye(2) / 2, np.diag([1.0, 0.0]), c=4.0, s=1.0) == 1.0


@pytest.mark.parametrize("s", [0.5, 1.0])
def test_one_shot_fully_depolarizing(s):
    rng = np.random.default_rng(0)
    rho_a = linops.random_density(2, rng)
    sigma = linops.random_density(2, rng)
    ch = chn.depolarizing(2, 1.0)
    c = 12.0
    val = ex.one_shot_fixed_input_bound(ch, rho_a, sigma, c, s)
    d = renyi.d_alpha(np.eye(2) / 2, sigma, 1 + s)
    expected = math.sqrt(4**s / s) * 2 ** (-0.5 * s * (c - d))
    assert val == pytest.approx(expected, rel=1e-9)
    at_pi = ex.one_shot_fixed_input_bound(ch, rho_a, np.eye(2) / 2, c, s)
    assert at_pi == pytest.approx(math.sqrt(2**s / s) * 2 ** (-s * c / 2), rel=1e-9)
