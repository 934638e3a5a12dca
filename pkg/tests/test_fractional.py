import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import charfun_by_quadrature, gaussian_smoothed_law
from teleswim.analytic import TelegraphParams, msd_tau
from teleswim.errors import DomainError, QualityError
from teleswim.fractional import (
    FractionalParams,
    charfun,
    charfun_grid,
    charfun_tau,
    choose_k_max,
    invert_charfun,
    second_moment_trend,
)
from teleswim.profiles import Constant, ExponentialDecay, PowerLaw

P11 = TelegraphParams(1.0, 1.0)

fracs = st.builds(
    FractionalParams,
    st.floats(0.05, 1.0),
    st.builds(TelegraphParams, st.floats(0.1, 10.0), st.floats(0.0, 10.0), st.floats(-3.0, 3.0)),
)


def test_value_at_zero_wavenumber():
    for alpha in (0.3, 0.5, 1.0):
        for t in (0.0, 0.7, 30.0):
            assert charfun(FractionalParams(alpha, P11), PowerLaw(0.5), 0.0, t) == 1.0


def test_ballistic_case_is_cosine():
    fp = FractionalParams(1.0, TelegraphParams(1.5, 0.0))
    k = np.linspace(-20, 20, 101)
    assert np.allclose(charfun(fp, Constant(), k, 0.8).real, np.cos(1.5 * k * 0.8), atol=1e-15)


@pytest.mark.parametrize("k", [0.0, 0.1, 0.5, 1.0, 1.7, 3.0, 10.0, 40.0])
@pytest.mark.parametrize("lam,tau", [(1.0, 1.0), (3.0, 0.4), (0.2, 2.5)])
def test_alpha_one_matches_transform_of_exact_law(k, lam, tau):
    p = TelegraphParams(1.0, lam)
    got = charfun_tau(FractionalParams(1.0, p), k, tau)
    assert got.real == pytest.approx(charfun_by_quadrature(p, tau, k), abs=1e-6)
    assert got.imag == 0.0


def test_phase_for_shifted_start():
    fp = FractionalParams(0.7, TelegraphParams(1.0, 1.0, 2.0))
    base = FractionalParams(0.7, P11)
    k = np.linspace(-5, 5, 11)
    assert np.allclose(charfun_tau(fp, k, 1.0), charfun_tau(base, k, 1.0) * np.exp(2j * k), atol=1e-15)


@given(fracs, st.floats(0.0, 50.0), st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=50))
def test_bounded_by_one(fp, tau, ks):
    vals = charfun_tau(fp, np.array(ks), tau)
    assert np.all(np.isfinite(vals))
    assert np.all(np.abs(vals) <= 1.0 + 1e-12)


@given(fracs, st.floats(0.01, 20.0))
def test_branch_continuity(fp, tau):
    if fp.base.lambda0 == 0:
        return
    # compare the real factor; the phase e^{i k x0} has its own (smooth) slope
    fp = FractionalParams(fp.alpha, TelegraphParams(fp.base.c0, fp.base.lambda0))
    k_star = (fp.base.lambda0 / fp.base.c0) ** (1.0 / fp.alpha)
    mid = charfun_tau(fp, k_star, tau)
    for eps in (1e-13, 1e-12):
        below = charfun_tau(fp, k_star * (1 - eps), tau)
        above = charfun_tau(fp, k_star * (1 + eps), tau)
        assert abs(below - above) < 1e-9
        assert abs(below - mid) < 1e-9


@given(fracs, st.floats(0.2, 5.0), st.floats(0.05, 8.0))
def test_satisfies_the_damped_oscillator_equation(fp, tau, k):
    # k is kept away from 0, where every term of the equation vanishes and a
    # finite-difference residual only measures rounding
    lam, c0 = fp.base.lambda0, fp.base.c0
    omega2 = c0 * c0 * abs(k) ** (2 * fp.alpha)
    h = 0.02 / (lam + math.sqrt(omega2) + 1.0 / tau)
    f = lambda s: charfun_tau(fp, k, s) * np.exp(-1j * k * fp.base.x0)  # noqa: E731
    f0, fp1, fm1, fp2, fm2 = f(tau), f(tau + h), f(tau - h), f(tau + 2 * h), f(tau - 2 * h)
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    scale = abs(d2) + 2 * lam * abs(d1) + omega2 * abs(f0)
    if scale < 1e-200:
        return
    assert abs(d2 + 2 * lam * d1 + omega2 * f0) / scale < 1e-5


def test_grid_layout_and_symmetry():
    fp = FractionalParams(0.6, TelegraphParams(1.0, 2.0, 0.3))
    g = charfun_grid(fp, ExponentialDecay(0.5), 2.0, 50.0, 256)
    n = g.values.size
    assert g.wavenumbers[n // 2] == 0.0 and g.values[n // 2] == 1.0
    assert g.dk == pytest.approx(2 * 50.0 / 256)
    m = np.arange(1, n // 2)
    assert np.array_equal(g.values[n // 2 - m], np.conj(g.values[n // 2 + m]))
    assert np.allclose(g.values, charfun(fp, ExponentialDecay(0.5), g.wavenumbers, 2.0), rtol=0, atol=1e-15)


def test_alpha_one_grid_matches_pointwise_calls():
    fp = FractionalParams(1.0, P11)
    g = charfun_grid(fp, Constant(), 1.0, 100.0, 128)
    half = g.values.size // 2
    assert np.array_equal(g.values[half:], charfun(fp, Constant(), g.wavenumbers[half:], 1.0))


def test_input_errors():
    with pytest.raises(DomainError):
        FractionalParams(0.0, P11)
    with pytest.raises(DomainError):
        FractionalParams(1.2, P11)
    fp = FractionalParams(1.0, P11)
    with pytest.raises(DomainError):
        charfun(fp, Constant(), math.nan, 1.0)
    with pytest.raises(DomainError):
        charfun(fp, Constant(), 1.0, -1.0)
    with pytest.raises(DomainError):
        charfun_grid(fp, Constant(), 1.0, 10.0, 63)
    with pytest.raises(DomainError):
        charfun_grid(fp, Constant(), 1.0, 10.0, 32)


def test_inversion_matches_smoothed_exact_law():
    fp = FractionalParams(1.0, P11)
    k_max = choose_k_max(fp, Constant(), 1.0)
    dens = invert_charfun(charfun_grid(fp, Constant(), 1.0, k_max))
    h = dens.meta["mollifier_sd"]
    near = np.abs(dens.centers) < 1.0 + 12 * h
    ref = np.zeros_like(dens.values)
    ref[near] = gaussian_smoothed_law(P11, 1.0, dens.centers[near], h)
    assert np.sum(np.abs(dens.values - ref)) * dens.dx < 1e-2
    assert dens.mass() == pytest.approx(1.0, abs=1e-9)
    assert not dens.meta["heavy_tailed"]


def test_diffusive_limit_variance():
    p = TelegraphParams(1.0, 100.0)
    fp = FractionalParams(1.0, p)
    k_max = choose_k_max(fp, Constant(), 1.0)
    dens = invert_charfun(charfun_grid(fp, Constant(), 1.0, k_max))
    var = dens.moment(2) - dens.meta["mollifier_sd"] ** 2
    assert var == pytest.approx(1.0 / 100.0, rel=0.02)
    assert var == pytest.approx(msd_tau(p, 1.0), rel=1e-6)


def test_support_spreads_with_the_clock():
    fp = FractionalParams(1.0, P11)
    peaks = []
    for t in (0.5, 1.0, 2.0):
        dens = invert_charfun(charfun_grid(fp, Constant(), t, choose_k_max(fp, Constant(), t)))
        right = dens.centers > 0.5 * t
        edge = dens.centers[right][np.argmax(dens.values[right])]
        assert abs(edge - t) <= dens.dx
        peaks.append(edge)
    assert peaks == sorted(peaks)


def test_heavy_tails_for_fractional_order():
    fp = FractionalParams(0.5, P11)
    dens = invert_charfun(charfun_grid(fp, Constant(), 1.0, choose_k_max(fp, Constant(), 1.0)))
    assert dens.meta["heavy_tailed"]
    assert dens.meta["small_k_exponent"] == pytest.approx(1.0, abs=0.05)
    # mass far beyond the ballistic front: finite propagation speed is lost
    assert np.sum(dens.values[np.abs(dens.centers) > 5.0]) * dens.dx > 0.02


def test_second_moment_grows_for_fractional_order_and_converges_otherwise():
    heavy = second_moment_trend(FractionalParams(0.5, P11), Constant(), 1.0, 20.0, [1 << 12, 1 << 13, 1 << 14])
    m2 = [m for _, m in heavy]
    assert m2[1] / m2[0] > 1.8 and m2[2] / m2[1] > 1.8
    light = second_moment_trend(FractionalParams(1.0, P11), Constant(), 1.0, 200.0, [1 << 10, 1 << 11, 1 << 12])
    assert all(m == pytest.approx(msd_tau(P11, 1.0), rel=1e-8) for _, m in light)


def test_quality_errors():
    fp = FractionalParams(0.5, P11)
    with pytest.raises(QualityError):
        invert_charfun(charfun_grid(fp, Constant(), 1.0, 1000.0))
    with pytest.raises(QualityError):
        invert_charfun(charfun_grid(FractionalParams(1.0, P11), Constant(), 1.0, 100.0), mollifier_cells=0.0)


def test_inversion_recentres_on_start():
    fp = FractionalParams(1.0, TelegraphParams(1.0, 2.0, 40.0))
    dens = invert_charfun(charfun_grid(fp, Constant(), 1.0, 500.0, 4096))
    assert dens.moment(1) == pytest.approx(40.0, abs=1e-9)
