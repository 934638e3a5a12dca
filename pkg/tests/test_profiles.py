import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from teleswim.errors import CapabilityError, DomainError, ExtrapolationError, SaturationError, SingularityError
from teleswim.profiles import (
    Constant,
    ConstantRate,
    ExplicitRate,
    ExponentialDecay,
    PiecewiseConstant,
    PowerLaw,
    ProportionalToSpeed,
    Tabulated,
    eval_lambda_eff,
    eval_t_of_tau,
    eval_tau,
    eval_w,
    profile_from_config,
    rate_from_config,
)


def test_eval_w_examples():
    assert eval_w(Constant(), 5.0) == 1.0
    assert eval_w(ExponentialDecay(1.0), 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert eval_w(PowerLaw(0.5, 1.0), 3.0) == pytest.approx(0.5, abs=1e-15)


def test_eval_tau_examples():
    assert eval_tau(Constant(), 2.0) == 2.0
    assert eval_tau(ExponentialDecay(1.0), 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-14)
    assert eval_tau(PowerLaw(0.5, 1.0), 3.0) == pytest.approx(2.0, rel=1e-14)


def test_eval_t_of_tau_examples():
    assert eval_t_of_tau(Constant(), 2.0) == 2.0
    assert eval_t_of_tau(ExponentialDecay(1.0), 0.632121) == pytest.approx(1.0, abs=1e-5)
    tau1 = eval_tau(ExponentialDecay(1.0), 1.0)
    assert eval_t_of_tau(ExponentialDecay(1.0), tau1) == pytest.approx(1.0, abs=1e-9)


def test_saturation_carries_limit():
    with pytest.raises(SaturationError) as info:
        eval_t_of_tau(ExponentialDecay(2.0), 0.6)
    assert info.value.tau_inf == pytest.approx(0.5)
    with pytest.raises(SaturationError):
        eval_t_of_tau(PowerLaw(2.0, 1.0), 1.0)


def test_lambda_eff_examples():
    assert eval_lambda_eff(ProportionalToSpeed(1.0), ExponentialDecay(3.0), 0.3) == 1.0
    assert eval_lambda_eff(ConstantRate(1.0), ExponentialDecay(1.0), 0.5) == pytest.approx(2.0, rel=1e-12)
    assert eval_lambda_eff(ConstantRate(2.0), Constant(), 7.0) == 2.0


def test_lambda_eff_singular_when_speed_vanishes():
    # the swimmer stops on [1, 2); tau = 1 maps to t = 1 where w = 0
    prof = PiecewiseConstant((1.0, 2.0), (1.0, 0.0, 1.0))
    with pytest.raises(SingularityError):
        eval_lambda_eff(ConstantRate(1.0), prof, 1.0)
    with pytest.raises(SaturationError):
        eval_lambda_eff(ConstantRate(1.0), PiecewiseConstant((1.0,), (1.0, 0.0)), 1.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_w(Constant(), -1.0)
    with pytest.raises(DomainError):
        eval_tau(ExponentialDecay(1.0), float("nan"))
    with pytest.raises(DomainError):
        ExponentialDecay(0.0)
    with pytest.raises(DomainError):
        PowerLaw(0.5, t_ref=0.0)
    with pytest.raises(DomainError):
        PiecewiseConstant((2.0, 1.0), (1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        ConstantRate(-1.0)


def test_tabulated_extrapolation_error():
    tab = Tabulated.from_samples([[0, 1], [1, 2], [3, 0.5]])
    assert eval_w(tab, 2.0) == pytest.approx(1.25)
    # exact integral of the piecewise-linear interpolant
    assert eval_tau(tab, 3.0) == pytest.approx(1.5 + 2.5)
    with pytest.raises(ExtrapolationError):
        eval_w(tab, 3.5)
    with pytest.raises(ExtrapolationError):
        eval_tau(tab, 4.0)


def test_explicit_rate_requires_finite_values():
    with pytest.raises(CapabilityError):
        ExplicitRate((0.0, 1.0), (1.0, math.inf))
    rate = ExplicitRate.from_samples([[0, 0], [2, 2]])
    assert rate.integrated(Constant(), 2.0) == pytest.approx(2.0)
    assert float(rate.bound(Constant(), 0.5, 1.5)) == pytest.approx(1.5)


def test_power_law_log_case_and_saturation_limit():
    assert eval_tau(PowerLaw(1.0, 2.0), 6.0) == pytest.approx(2.0 * math.log(4.0), rel=1e-14)
    assert PowerLaw(3.0, 1.0).tau_inf == pytest.approx(0.5)
    assert PowerLaw(0.5).tau_inf == math.inf


def test_piecewise_constant_closed_forms():
    prof = PiecewiseConstant((1.0, 2.0), (2.0, 0.0, 1.0))
    assert eval_tau(prof, 0.5) == pytest.approx(1.0)
    assert eval_tau(prof, 1.5) == pytest.approx(2.0)
    assert eval_tau(prof, 3.0) == pytest.approx(3.0)
    # plateau: the earliest time reaching tau
    assert eval_t_of_tau(prof, 2.0) == pytest.approx(1.0)
    assert eval_t_of_tau(prof, 2.5) == pytest.approx(2.5)


def test_vectorised_calls_match_scalar():
    prof = PowerLaw(-0.5, 2.0)
    ts = np.linspace(0, 10, 7)
    assert np.allclose(eval_tau(prof, ts), [eval_tau(prof, t) for t in ts], rtol=0, atol=0)


def test_config_roundtrip():
    for prof in (
        Constant(),
        PowerLaw(0.3, 2.0),
        ExponentialDecay(0.7),
        PiecewiseConstant((1.0,), (1.0, 0.5)),
        Tabulated.from_samples([[0, 1], [2, 3]]),
    ):
        again = profile_from_config(prof.to_dict())
        assert again == prof
    for rate in (ProportionalToSpeed(2.0), ConstantRate(1.0), ExplicitRate((0.0, 1.0), (0.0, 3.0))):
        assert rate_from_config(rate.to_dict()) == rate
    with pytest.raises(DomainError):
        profile_from_config({"kind": "power_law"})
    with pytest.raises(DomainError):
        rate_from_config({"mode": "sometimes"})


# --- properties -------------------------------------------------------------

_pos = st.floats(0.05, 5.0)
profiles = st.one_of(
    st.just(Constant()),
    st.builds(PowerLaw, st.floats(-1.5, 3.0), _pos),
    st.builds(ExponentialDecay, _pos),
    st.lists(st.floats(0.0, 3.0), min_size=2, max_size=5).flatmap(
        lambda vals: st.lists(st.floats(0.1, 4.0), min_size=len(vals) - 1, max_size=len(vals) - 1, unique=True).map(
            lambda bps: PiecewiseConstant(tuple(sorted(bps)), tuple(vals))
        )
    ),
    st.lists(st.floats(0.0, 3.0), min_size=2, max_size=6).map(
        lambda vals: Tabulated(tuple(np.linspace(0.0, 10.0, len(vals))), tuple(vals))
    ),
)


@given(profiles, st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_tau_nondecreasing_and_zero_at_origin(prof, t1, t2):
    assert eval_tau(prof, 0.0) == 0.0
    lo, hi = sorted((t1, t2))
    assert eval_tau(prof, lo) <= eval_tau(prof, hi)


@given(profiles, st.floats(0.0, 10.0))
def test_inverse_roundtrip(prof, t):
    tau = eval_tau(prof, t)
    if tau >= prof.tau_inf or eval_w(prof, t) == 0:
        return
    back = eval_t_of_tau(prof, tau)
    # on a plateau of tau the earliest preimage is returned; compare through tau
    assert eval_tau(prof, back) == pytest.approx(tau, rel=1e-9, abs=1e-12)
    if np.all(np.asarray(eval_w(prof, np.linspace(0, t, 50))) > 0):
        # t(tau) has condition number tau / (t w(t)); one rounding of tau costs that much
        cond = tau / (t * eval_w(prof, t)) if t > 0 else 1.0
        assert back == pytest.approx(t, rel=1e-9 + 8 * np.finfo(float).eps * cond, abs=1e-12)


@given(profiles, st.floats(0.01, 10.0))
def test_closed_form_tau_matches_quadrature(prof, t):
    kinks = [b for b in getattr(prof, "breakpoints", ()) if b < t] + [x for x in getattr(prof, "times", ()) if 0 < x < t]
    ref = quad(lambda s: float(eval_w(prof, s)), 0.0, t, points=kinks or None, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    assert eval_tau(prof, t) == pytest.approx(ref, rel=1e-8, abs=1e-10)


@given(st.builds(ExponentialDecay, _pos), st.floats(0.0, 0.999))
def test_light_switch_effective_rate(prof, frac):
    tau = frac * prof.tau_inf
    assert eval_lambda_eff(ConstantRate(1.3), prof, tau) == pytest.approx(1.3 / (1 - prof.gamma * tau), rel=1e-9)
