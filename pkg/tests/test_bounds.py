"""Unit tests for the moment, tail, and spatial bound evaluators."""

import math

import numpy as np
import pytest

from sublin.bounds import (
    HEAT_REGIMES,
    J0,
    J1,
    J_plus,
    chernoff_exponent,
    check_preset_growth,
    constant_init,
    custom_init,
    dirac_init,
    exponential_init,
    fractional_sigma,
    legendre_tail,
    moment_bound_fractional,
    moment_bound_heat,
    moment_bound_wave,
    power_law_init,
    scenario_preset,
    spatial_asymptote,
    tail_bound,
    wave_J0,
    wave_J1,
)
from sublin.diffusion import DiffusionCoefficient, concavity_thresholds
from sublin.envelope import EnvelopeFunction, F_inverse
from sublin.errors import ConfigError, DomainError
from sublin.kernels import CorrelationKernel, h_heat, h_wave

WHITE = CorrelationKernel("white", d=1)
RIESZ_HALF = CorrelationKernel("riesz", d=1, alpha=0.5)
SQRT = DiffusionCoefficient("ratio-power", alpha=0.5, r=0.0)
BOUNDED = DiffusionCoefficient("ratio-power", alpha=0.0, r=1.0)
ITLOG = DiffusionCoefficient("iterated-log", beta=1.0, kappa=2.0)

FLAT = constant_init(1.0)
ZERO = constant_init(0.0)


def hinge_coeff():
    return DiffusionCoefficient(
        "custom",
        evaluator=lambda u: np.maximum(0.0, 1.0 - np.abs(u)),
        declared_m0=1.0,
    )


# -- initial data and smoothing functionals ---------------------------------------


def test_J0_constant_everywhere():
    for t, x in [(0.1, 0.0), (5.0, -2.0)]:
        assert J0(constant_init(3.0), t, x) == pytest.approx(3.0)


def test_J0_dirac_frozen():
    # p_t(0) = (2 pi t)^{-1/2} = 1 at t = 1/(2 pi).
    assert J0(dirac_init(1.0), 1.0 / (2.0 * math.pi), 0.0) == pytest.approx(1.0, rel=1e-12)


def test_J0_power_law_scaling():
    # J0(t,0) = c t^{-l/2} exactly for the centered power-law density.
    init = power_law_init(0.5)
    ref = J0(init, 1.0, 0.0)
    for t in np.geomspace(1e-3, 1e3, 7):
        assert J0(init, float(t), 0.0) * t**0.25 == pytest.approx(ref, rel=1e-9)


def test_J0_exponential_bound():
    init = exponential_init(0.5)
    for t, x in [(0.5, 0.0), (2.0, 1.0), (10.0, -3.0)]:
        assert J0(init, t, x) <= 2.0 * math.exp(0.25 * t + 0.5 * abs(x))


def test_J_plus_dominates_J0():
    init = custom_init(lambda y: math.cos(y) * math.exp(-y * y))
    for t in (0.3, 2.0):
        assert J_plus(init, t, 0.5) >= J0(init, t, 0.5) - 1e-12


def test_power_law_exponent_validated():
    with pytest.raises(ConfigError):
        power_law_init(0.0)
    # The dimension-aware range check fires on use, not construction.
    with pytest.raises(ConfigError):
        J0(power_law_init(1.0), 1.0, 0.0)


def test_J1_flat_identity_d1():
    # J1 = 2^{3/2} pi h(t) J_+(t/2,x)^2 collapses to 2^{3/2} pi h(t) for
    # unit constant data, any kernel.
    for kern in (WHITE, RIESZ_HALF):
        for t in (0.5, 2.0):
            assert J1(FLAT, kern, t, 0.0) == pytest.approx(
                2.0**1.5 * math.pi * h_heat(kern, t), rel=1e-9
            )


def test_J1_flat_identity_higher_dim():
    kern = CorrelationKernel("ou", d=2, alpha=2.0)
    assert J1(constant_init(3.0), kern, 1.0, 0.0) == pytest.approx(
        18.0 * h_heat(kern, 0.5), rel=1e-6
    )


def test_J1_power_law_riesz_exponent():
    # Scaling t^{1 - l - a/2} for power-law data under a Riesz kernel.
    ts = np.geomspace(1.0, 100.0, 6)
    vals = [J1(power_law_init(0.5), RIESZ_HALF, float(t), 0.0) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(vals), 1)[0]
    assert slope == pytest.approx(0.25, abs=1e-3)


def test_J1_rejects_dirac_in_higher_dim():
    kern = CorrelationKernel("ou", d=2, alpha=2.0)
    with pytest.raises(ConfigError):
        J1(dirac_init(1.0), kern, 1.0, 0.0)


# -- wave data functionals ---------------------------------------------------------


def test_wave_J0_flat_and_velocity():
    assert wave_J0(FLAT, ZERO, 2.0, 0.3) == pytest.approx(1.0)
    # d'Alembert velocity contribution: (1/2) integral over [x-t, x+t] = c t.
    assert wave_J0(ZERO, constant_init(2.0), 1.5, 0.0) == pytest.approx(3.0)
    assert wave_J0(ZERO, ZERO, 2.0, 0.0) == 0.0


def test_wave_J0_rejects_dirac_position():
    with pytest.raises(ConfigError):
        wave_J0(dirac_init(1.0), ZERO, 1.0, 0.0)


def test_wave_J1_flat_white_frozen():
    assert wave_J1(FLAT, ZERO, WHITE, 2.0, 0.0) == pytest.approx(16.0, rel=1e-12)
    assert wave_J1(ZERO, ZERO, WHITE, 2.0, 0.0) == 0.0


# -- heat moment bounds ------------------------------------------------------------


def test_bounded_rho_frozen_total():
    # 2 J0^2 + 8 sup(rho)^2 p h(t) = 2 + 16 at t = pi.
    rep = moment_bound_heat(BOUNDED, WHITE, FLAT, math.pi, 0.0, 2.0, regime="bounded-rho")
    assert rep.total == pytest.approx(18.0, rel=1e-12)
    assert rep.term_J0sq == pytest.approx(2.0)
    assert rep.term_KM == pytest.approx(16.0, rel=1e-12)


def test_report_total_and_pth_moment():
    rep = moment_bound_heat(SQRT, WHITE, FLAT, 1.0, 0.0, 3.0)
    assert rep.total == pytest.approx(
        rep.term_J0sq + rep.term_J1_over_h + rep.term_KM + rep.term_Finv, rel=1e-14
    )
    assert rep.pth_moment == pytest.approx(rep.total**1.5, rel=1e-14)
    d = rep.as_dict()
    assert d["total"] == rep.total and d["regime"] == rep.regime


def test_all_terms_nonnegative_across_regimes():
    for regime in HEAT_REGIMES:
        coeff = BOUNDED if regime == "bounded-rho" else SQRT
        rep = moment_bound_heat(coeff, WHITE, FLAT, 2.0, 0.0, 4.0, regime=regime)
        for term in (rep.term_J0sq, rep.term_J1_over_h, rep.term_KM, rep.term_Finv):
            assert term >= 0.0


def test_concave_regime_drops_KM_term():
    gen = moment_bound_heat(SQRT, WHITE, FLAT, 2.0, 0.0, 2.0, regime="general")
    con = moment_bound_heat(SQRT, WHITE, FLAT, 2.0, 0.0, 2.0, regime="concave")
    assert con.term_KM == 0.0
    assert con.total <= gen.total + 1e-12


def test_total_monotone_in_p_and_t():
    # Flat data: every term is non-decreasing in both arguments.
    for coeff in (SQRT, BOUNDED, ITLOG):
        ps = np.linspace(2.0, 12.0, 20)
        ts = np.geomspace(0.1, 100.0, 20)
        grid = np.array(
            [[moment_bound_heat(coeff, WHITE, FLAT, float(t), 0.0, float(p)).total for t in ts] for p in ps]
        )
        assert np.all(np.diff(grid, axis=0) >= -1e-9 * grid[:-1, :])
        assert np.all(np.diff(grid, axis=1) >= -1e-9 * grid[:, :-1])


def test_vanishing_rho_gives_constant_stochastic_term():
    # rho supported in [-1, 1]: F^{-1} pins at 2M^2 whatever the horizon.
    coeff = hinge_coeff()
    m = concavity_thresholds(coeff).m
    reps = [moment_bound_heat(coeff, WHITE, FLAT, t, 0.0, 2.0) for t in (1.0, 4.0, 64.0)]
    pref = reps[0].term_Finv
    assert pref > 0.0
    for rep in reps[1:]:
        assert rep.term_Finv == pytest.approx(pref, rel=1e-9)
    env = EnvelopeFunction(coeff)
    assert F_inverse(env, 2.0 * 2.0 * h_heat(WHITE, 64.0)) == pytest.approx(2.0 * m * m, rel=1e-9)


def test_heat_regime_preconditions():
    with pytest.raises(DomainError):
        moment_bound_heat(SQRT, WHITE, FLAT, 1.0, 0.0, 1.5)
    with pytest.raises(DomainError):
        moment_bound_heat(SQRT, WHITE, FLAT, 0.0, 0.0, 2.0)
    with pytest.raises(DomainError):
        moment_bound_heat(SQRT, WHITE, FLAT, 0.5, 0.0, 2.0, regime="asymptotic")
    with pytest.raises(ConfigError):
        moment_bound_heat(SQRT, WHITE, dirac_init(1.0), 1.0, 0.0, 2.0, regime="bounded-initial")
    with pytest.raises(ConfigError):
        moment_bound_heat(SQRT, WHITE, FLAT, 1.0, 0.0, 2.0, regime="bounded-rho")
    with pytest.raises(ConfigError):
        moment_bound_heat(ITLOG, WHITE, FLAT, 1.0, 0.0, 2.0, regime="concave")
    with pytest.raises(ConfigError):
        moment_bound_heat(hinge_coeff(), WHITE, FLAT, 2.0, 0.0, 2.0, regime="asymptotic")


# -- wave moment bounds ------------------------------------------------------------


def test_wave_zero_data_reduces_to_stochastic_term():
    rep = moment_bound_wave(SQRT, WHITE, ZERO, ZERO, 2.0, 0.0, 2.0)
    assert rep.term_J0sq == 0.0
    assert rep.term_J1_over_h == 0.0
    assert rep.term_KM == 0.0
    env = EnvelopeFunction(SQRT)
    expect = F_inverse(env, 2.0 * 2.0 * h_wave(WHITE, 2.0))
    assert rep.term_Finv == pytest.approx(expect, rel=1e-9)


def test_wave_KM_term_requires_threshold():
    rep = moment_bound_wave(ITLOG, WHITE, FLAT, ZERO, 2.0, 0.0, 2.0)
    assert rep.term_KM > 0.0
    rep0 = moment_bound_wave(SQRT, WHITE, FLAT, ZERO, 2.0, 0.0, 2.0)
    assert rep0.term_KM == 0.0


def test_wave_constant_scales_terms():
    r1 = moment_bound_wave(SQRT, WHITE, FLAT, ZERO, 2.0, 0.0, 2.0, K1=1.0)
    r2 = moment_bound_wave(SQRT, WHITE, FLAT, ZERO, 2.0, 0.0, 2.0, K1=3.0)
    assert r2.term_J1_over_h == pytest.approx(3.0 * r1.term_J1_over_h, rel=1e-12)
    assert r2.term_Finv >= r1.term_Finv


def test_wave_rejects_higher_dim_kernel():
    kern = CorrelationKernel("ou", d=2, alpha=2.0)
    with pytest.raises(ConfigError):
        moment_bound_wave(SQRT, kern, FLAT, ZERO, 1.0, 0.0, 2.0)


# -- fractional equation -----------------------------------------------------------


def test_fractional_sigma_frozen():
    assert fractional_sigma(2.0, 1.0, 0.0, 1) == pytest.approx(0.5, rel=1e-14)


def test_fractional_sigma_hypotheses():
    with pytest.raises(ConfigError):
        fractional_sigma(2.0, 0.4, 0.0, 1)  # b + gamma too small
    with pytest.raises(ConfigError):
        fractional_sigma(0.4, 1.0, 0.0, 1)  # 2a <= d
    with pytest.raises(ConfigError):
        fractional_sigma(2.0, 2.0, 0.0, 1)  # b out of range
    with pytest.raises(ConfigError):
        fractional_sigma(0.7, 1.0, 0.3, 1)  # gamma > 0 needs a > d


def test_fractional_effective_clock_exponent():
    # KM term scales like t^{1 - sigma} = t^{3b/2 - 1}.
    ts = np.geomspace(10.0, 1e4, 8)
    kms = [
        moment_bound_fractional(ITLOG, FLAT, float(t), 0.0, 2.0, 2.0, 1.2).term_KM for t in ts
    ]
    slope = np.polyfit(np.log(ts), np.log(kms), 1)[0]
    assert slope == pytest.approx(0.8, abs=1e-3)


def test_fractional_report_carries_sigma():
    rep = moment_bound_fractional(SQRT, FLAT, 1.0, 0.0, 2.0, 2.0, 1.0)
    assert rep.sigma == pytest.approx(0.5)
    assert "sigma" in rep.as_dict()


# -- tails -------------------------------------------------------------------------


def test_tail_below_threshold_is_one():
    L = tail_bound(SQRT, WHITE, 1.0, 1.0).threshold
    rep = tail_bound(SQRT, WHITE, 1.0, 0.5 * L)
    assert rep.bound == 1.0


def test_tail_threshold_formula():
    # L_t = e sqrt(2 C* M^2 + C* F^{-1}(2 C* h)); M = 0 for the sqrt family.
    t = 2.0
    env = EnvelopeFunction(SQRT)
    expect = math.e * math.sqrt(F_inverse(env, 2.0 * h_heat(WHITE, t)))
    assert tail_bound(SQRT, WHITE, t, 1.0).threshold == pytest.approx(expect, rel=1e-9)


def test_tail_exponent_alpha_family():
    # -log P(u >= z) scales like z^{2(1-a)} / h(t).
    t = 2.0
    for alpha, expect in [(0.25, 1.5), (0.5, 1.0)]:
        c = DiffusionCoefficient("ratio-power", alpha=alpha, r=0.0)
        L = tail_bound(c, WHITE, t, 1.0).threshold
        zs = np.geomspace(3.0 * L, 100.0 * L, 10)
        pairs = [(float(z), tail_bound(c, WHITE, t, float(z)).bound) for z in zs]
        pairs = [(z, b) for z, b in pairs if 0.0 < b < 1.0]
        assert len(pairs) >= 6
        zs2 = np.array([z for z, _ in pairs])
        vals = np.array([-math.log(b) for _, b in pairs])
        slope = np.polyfit(np.log(zs2), np.log(vals), 1)[0]
        assert slope == pytest.approx(expect, abs=0.02)


def test_tail_requires_unit_horizon():
    with pytest.raises(DomainError):
        tail_bound(SQRT, WHITE, 0.5, 10.0)


def test_chernoff_matches_direct_formula():
    t = 2.0
    env = EnvelopeFunction(SQRT)
    H = chernoff_exponent(SQRT, WHITE, t, Cstar=2.0)
    for p in (2.0, 5.0, 17.0):
        expect = (p / 2.0) * math.log(2.0 * F_inverse(env, 2.0 * p * h_heat(WHITE, t)))
        assert H(p) == pytest.approx(expect, rel=1e-12)


def test_legendre_tail_recovers_alpha_exponent():
    # The Chernoff-Legendre pipeline reproduces the direct tail exponent
    # inside the window where exp(-sup) stays representable.
    for alpha, zlo, zhi in [(0.25, 20.0, 120.0), (0.5, 60.0, 1200.0)]:
        c = DiffusionCoefficient("ratio-power", alpha=alpha, r=0.0)
        H = chernoff_exponent(c, WHITE, 2.0)
        zs = np.geomspace(zlo, zhi, 10)
        probs = [legendre_tail(H, float(z)) for z in zs]
        assert all(0.0 < b <= 1.0 for b in probs)
        assert all(b2 <= b1 + 1e-15 for b1, b2 in zip(probs, probs[1:]))
        vals = np.array([-math.log(b) for b in probs])
        slope = np.polyfit(np.log(zs), np.log(vals), 1)[0]
        assert slope == pytest.approx(2.0 * (1.0 - alpha), abs=0.02)


def test_legendre_steep_envelope_degrades_gracefully():
    # exp-linear F^{-1} overflows at moderate p; the scan must skip those
    # points instead of failing.
    cl = DiffusionCoefficient("log-perturbed", alpha=1.0, beta=0.2)
    H = chernoff_exponent(cl, WHITE, 4.0)
    b = legendre_tail(H, 1e6)
    assert 0.0 <= b <= 1.0


# -- spatial asymptote --------------------------------------------------------------


def test_spatial_floor_at_small_radius():
    m = concavity_thresholds(ITLOG).m
    v = spatial_asymptote(ITLOG, WHITE, 2.0, 1.0 + 1e-12)
    assert v == pytest.approx(math.sqrt(2.0) * m, rel=1e-9)


def test_spatial_growth_sqrt_family():
    # F^{-1}(y) = (8y)^2 turns the sup scale into 8 C h log R exactly.
    t, C = 2.0, 1.5
    h = h_heat(WHITE, t)
    for R in (10.0, 1e3, 1e6):
        v = spatial_asymptote(SQRT, WHITE, t, R, C=C)
        assert v == pytest.approx(math.sqrt((8.0 * C * h * math.log(R)) ** 2), rel=1e-9)


def test_spatial_asymptote_domain():
    with pytest.raises(DomainError):
        spatial_asymptote(SQRT, WHITE, 1.0, 10.0)
    with pytest.raises(DomainError):
        spatial_asymptote(SQRT, WHITE, 2.0, 1.0)


# -- scenario presets ---------------------------------------------------------------


def test_preset_catalog_complete():
    names = [
        "alpha-white",
        "alpha-riesz-d1",
        "alpha-riesz-dn",
        "alpha-powerlaw-init",
        "alpha-exp-init",
        "log-case-i",
        "log-case-ii",
        "log-case-iii",
        "vsv",
        "bounded-rho",
        "frac-alpha",
        "wave-alpha",
    ]
    for name in names:
        pre = scenario_preset(name)
        rep = pre.bound(pre.t_grid[0], 2.0)
        assert math.isfinite(rep.total) and rep.total > 0.0


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        scenario_preset("no-such-preset")


def test_wave_alpha_preset_frozen():
    rep = scenario_preset("wave-alpha", alpha=0.5).bound(2.0, 2.0)
    assert rep.total == pytest.approx(1042.0, rel=1e-12)
    assert rep.term_J0sq == pytest.approx(2.0)
    assert rep.term_J1_over_h == pytest.approx(16.0, rel=1e-12)
    assert rep.term_KM == 0.0
    assert rep.term_Finv == pytest.approx(1024.0, rel=1e-12)


def test_frac_alpha_preset_frozen():
    pre = scenario_preset("frac-alpha", b=1.0)
    assert pre.bound(1.0, 2.0).sigma == pytest.approx(0.5)
    assert pre.bound(1.0, 2.0).total == pytest.approx(260.0, rel=1e-12)
    assert pre.bound(2.0, 2.0).total == pytest.approx(516.0, rel=1e-12)


@pytest.mark.parametrize("name", ["alpha-white", "bounded-rho", "log-case-iii", "wave-alpha"])
def test_preset_growth_shapes(name):
    res = check_preset_growth(scenario_preset(name))
    assert res["ok"], res
