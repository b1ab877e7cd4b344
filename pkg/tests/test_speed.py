import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stagespread import periodic as pf
from stagespread import speed
from stagespread.config import load_params, with_threshold
from stagespread.errors import DiagnosticError, SpeedUndefinedError
from stagespread.kinetics import compute_L

CANON = dict(T=1.0, alpha=0.2, beta=0.3, D_M=1.0, D_I=0.2, d_M=0.5, d_I=0.3, tau=0.4,
             P=22.45669534619993)
# mpmath stationary point of the closed-form profile
CSTAR, MUSTAR = 1.045972665473082, 0.6305874383245581
H_INF = 1.019020499093947  # same with juvenile spread dropped


def test_cstar_canonical(canonical):
    res = speed.cstar(canonical)
    assert res.cstar == pytest.approx(CSTAR, rel=1e-10)
    assert res.mustar == pytest.approx(MUSTAR, rel=1e-5)
    lo, hi = res.bracket
    assert lo < res.mustar < hi


def test_cstar_matches_oracle_closed_form(canonical):
    ref, _ = oracles.const_cstar(CANON)
    assert speed.cstar(canonical).cstar == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("mu", [0.05, 0.3, 1.0, 2.5])
def test_log_mgf_closed_form(canonical, mu):
    assert float(speed.log_mgf(canonical, mu)) == pytest.approx(
        float(oracles.const_log_mgf(CANON, mu)), rel=1e-12)


@pytest.mark.parametrize("mu", [0.1, 0.7, 1.5])
def test_mgf_general_coefficients(seasonal, mu):
    assert float(speed.mgf_K(seasonal, mu)) == pytest.approx(oracles.mgf_quad(seasonal, mu),
                                                             rel=1e-10)


def test_mgf_at_zero_counts_offspring(seasonal):
    k = math.exp(-seasonal.d_M.integral(0, seasonal.T))
    assert float(speed.mgf_K(seasonal, 0.0)) == pytest.approx(
        k + (1 - k) * compute_L(seasonal), rel=1e-13)


def test_phi_bounded_below_by_cstar(seasonal):
    res = speed.cstar(seasonal)
    mu = np.geomspace(1e-2, 20, 200)
    assert np.all(speed.phi(seasonal, mu) >= res.cstar - 1e-12)


def test_profile_recorded(canonical):
    res = speed.cstar(canonical)
    assert res.profile.shape[1] == 2
    assert res.profile[:, 1].min() == pytest.approx(res.cstar, abs=1e-12)
    assert set(res.to_dict()) >= {"cstar", "mustar", "bracket", "tolerances"}


def test_no_speed_below_threshold(canonical):
    p = with_threshold(canonical, 0.8)
    with pytest.raises(SpeedUndefinedError):
        speed.cstar(p)
    with pytest.raises(SpeedUndefinedError):
        speed.phi(p, 1.0)


def test_minimizer_bracket_failure():
    with pytest.raises(DiagnosticError):
        speed.minimize_rate(lambda m: 1.0 / m)
    with pytest.raises(DiagnosticError):
        speed.minimize_rate(lambda m: m)


def test_delay_comparison_constant_delay_is_neutral(canonical):
    dc = speed.delay_comparison(canonical)
    assert dc.tau_av == pytest.approx(0.4, abs=1e-14)
    assert dc.difference == pytest.approx(0.0, abs=1e-12)


# minimize_scalar on quad-evaluated integrals with flat breeding
@pytest.mark.parametrize("name, with_delay, averaged", [
    ("delay_rising", 1.045972726156469, 1.1327946202642847),
    ("delay_falling", 1.04597270609588, 0.9632205089656998),
])
def test_delay_comparison_values(config_dir, name, with_delay, averaged):
    dc = speed.delay_comparison(load_params(config_dir / f"{name}.json"))
    assert dc.with_delay.cstar == pytest.approx(with_delay, rel=1e-9)
    assert dc.averaged.cstar == pytest.approx(averaged, rel=1e-9)


def test_delay_average_needs_constant_diffusion(seasonal):
    with pytest.raises(ValueError):
        speed.delay_comparison(seasonal)


# minimize_scalar with eta integrated by quad
@pytest.mark.parametrize("label, value", [
    ("juvenile_season", 0.8929969065352225),
    ("adult_only_season", 0.6580123881660424),
])
def test_mortality_allocations(canonical, label, value):
    alloc = speed.mortality_allocations(canonical, 0.2)[label]
    assert alloc.eta.mean() == pytest.approx(0.2, rel=1e-12)
    assert speed.cstar_with_eta(canonical, alloc).cstar == pytest.approx(value, rel=1e-9)


def test_uniform_mortality_is_constant_shift(canonical):
    alloc = speed.EtaAllocation.uniform(0.2)
    ref, _ = oracles.const_cstar(dict(CANON, d_M=0.7, d_I=0.3))
    # extra adult mortality leaves juvenile survival untouched
    assert speed.cstar_with_eta(canonical, alloc).cstar == pytest.approx(ref, rel=1e-10)


def test_eta_allocation_validates_mean_and_sign():
    with pytest.raises(ValueError):
        speed.EtaAllocation(pf.Constant(0.3), 0.2)
    with pytest.raises(ValueError):
        speed.EtaAllocation(pf.Harmonic(0.2, cos=[0.5]), 0.2)


def test_extra_diffusion_speeds_up(canonical):
    alloc = speed.EtaAllocation.uniform(0.5)
    assert speed.cstar_with_extra_diffusion(canonical, alloc).cstar > speed.cstar(canonical).cstar


def test_large_diffusion_limit(canonical):
    assert speed.h_limit_infimum(canonical).cstar == pytest.approx(H_INF, rel=1e-10)
    ref, _ = oracles.const_cstar_no_juvenile_spread(CANON)
    assert H_INF == pytest.approx(ref, rel=1e-12)


def test_scaling_at_one_is_cstar(canonical):
    assert speed.cstar_scaling(canonical, 1.0) == pytest.approx(CSTAR, rel=1e-10)
    with pytest.raises(ValueError):
        speed.cstar_scaling(canonical, 0.0)


def test_h_limit_profile_above_infimum(seasonal):
    inf = speed.h_limit_infimum(seasonal).cstar
    nu = np.linspace(0.1, 3, 50)
    assert np.all(speed.h_limit(seasonal, nu) >= inf - 1e-12)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.01, 5.0), b=st.floats(0.01, 5.0), lam=st.floats(0.0, 1.0))
def test_log_mgf_convex(seasonal, a, b, lam):
    m = lam * a + (1 - lam) * b
    lhs = float(speed.log_mgf(seasonal, m))
    rhs = lam * float(speed.log_mgf(seasonal, a)) + (1 - lam) * float(speed.log_mgf(seasonal, b))
    assert lhs <= rhs + 1e-12 * max(1.0, abs(rhs))


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.6, 4.0))
def test_speed_increases_with_amplitude(canonical, scale):
    lo = speed.cstar(canonical).cstar
    hi = speed.cstar(canonical.replace(P=canonical.P * scale)).cstar
    if scale >= 1:
        assert hi >= lo - 1e-12
    else:
        assert hi <= lo + 1e-12
