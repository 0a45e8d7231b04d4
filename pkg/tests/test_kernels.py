"""Unit tests for correlation kernels and the noise functionals h and k."""

import math
import warnings

import numpy as np
import pytest

from sublin.errors import ConfigError, DomainError, NumericsError
from sublin.kernels import (
    CorrelationKernel,
    dalang_check,
    gaussian_kernel,
    h_heat,
    h_wave,
    heat_factorization_check,
    k_eval,
    k_wave,
    point_eval,
)


def loglog_slope(ts, vals):
    return float(np.polyfit(np.log(ts), np.log(vals), 1)[0])


# -- construction and pointwise values -------------------------------------------


def test_point_eval_values():
    assert point_eval(CorrelationKernel("constant", d=3), 2.0) == 1.0
    assert point_eval(CorrelationKernel("riesz", d=1, alpha=0.5), 4.0) == pytest.approx(0.5)
    assert point_eval(CorrelationKernel("riesz", d=1, alpha=0.5), 0.0) == math.inf
    assert point_eval(CorrelationKernel("ou", d=1, alpha=1.0), 2.0) == pytest.approx(math.exp(-2.0))
    assert point_eval(CorrelationKernel("bessel-spectral", d=2, nu=3.0), 1.0) == pytest.approx(2.0 ** (-1.5))


@pytest.mark.parametrize(
    "variant,kwargs",
    [
        ("riesz", dict(alpha=2.5)),
        ("riesz", dict(alpha=0.0)),
        ("ou", dict(alpha=2.5)),
        ("ou", dict(alpha=0.0)),
        ("bessel-potential", dict(nu=0.0)),
        ("bessel-spectral", dict(nu=-1.0)),
        ("no-such-kernel", dict()),
    ],
)
def test_invalid_kernels_rejected(variant, kwargs):
    with pytest.raises(ConfigError):
        CorrelationKernel(variant, d=1, **kwargs)


def test_dimension_must_be_positive():
    with pytest.raises(ConfigError):
        CorrelationKernel("constant", d=0)


# -- Dalang condition -------------------------------------------------------------


def test_dalang_white_only_d1():
    assert dalang_check(CorrelationKernel("white", d=1)) == (True, 0.5)
    assert not dalang_check(CorrelationKernel("white", d=2)).ok


def test_dalang_riesz_threshold():
    ok = dalang_check(CorrelationKernel("riesz", d=3, alpha=1.5))
    assert ok.ok and ok.improved_eta == pytest.approx(0.25)
    assert not dalang_check(CorrelationKernel("riesz", d=1, alpha=1.5)).ok


def test_dalang_smooth_kernels():
    assert dalang_check(CorrelationKernel("constant", d=5)) == (True, 1.0)
    assert dalang_check(CorrelationKernel("ou", d=4, alpha=1.0)) == (True, 1.0)
    assert dalang_check(CorrelationKernel("bessel-spectral", d=3, nu=0.5)) == (True, 1.0)
    bp = dalang_check(CorrelationKernel("bessel-potential", d=3, nu=2.0))
    assert bp.ok and bp.improved_eta == pytest.approx(0.5)
    assert not dalang_check(CorrelationKernel("bessel-potential", d=4, nu=1.0)).ok


def test_h_heat_requires_dalang():
    with pytest.raises(NumericsError):
        h_heat(CorrelationKernel("white", d=2), 1.0)


# -- heat functional h -------------------------------------------------------------


def test_h_heat_white_frozen():
    # h(t) = sqrt(t/pi): equals 1 at t = pi.
    assert h_heat(CorrelationKernel("white", d=1), math.pi) == pytest.approx(1.0, rel=1e-12)


def test_h_heat_constant_is_t():
    assert h_heat(CorrelationKernel("constant", d=2), 7.0) == pytest.approx(7.0, rel=1e-12)


def test_h_heat_riesz_constant():
    # C = 2^{1-a} Gamma((d-a)/2) / ((2-a) Gamma(d/2)), h = C t^{1-a/2}.
    for d, a in [(1, 0.5), (3, 1.2)]:
        kern = CorrelationKernel("riesz", d=d, alpha=a)
        c = 2.0 ** (1.0 - a) * math.gamma((d - a) / 2.0) / ((2.0 - a) * math.gamma(d / 2.0))
        for t in (0.25, 1.0, 16.0):
            assert h_heat(kern, t) == pytest.approx(c * t ** (1.0 - a / 2.0), rel=1e-12)


def test_h_heat_ou_alpha2_closed_forms():
    # d=1: (sqrt(1+4t)-1)/2; d=2: log(1+4t)/4; d>=3: (1-(1+4t)^{1-d/2})/(2(d-2)).
    for t in (0.1, 1.0, 4.0):
        k1 = CorrelationKernel("ou", d=1, alpha=2.0)
        assert h_heat(k1, t) == pytest.approx(0.5 * (math.sqrt(1.0 + 4.0 * t) - 1.0), rel=1e-12)
        k2 = CorrelationKernel("ou", d=2, alpha=2.0)
        assert h_heat(k2, t) == pytest.approx(0.25 * math.log(1.0 + 4.0 * t), rel=1e-12)
        k5 = CorrelationKernel("ou", d=5, alpha=2.0)
        assert h_heat(k5, t) == pytest.approx((1.0 - (1.0 + 4.0 * t) ** -1.5) / 6.0, rel=1e-12)


@pytest.mark.parametrize(
    "kern",
    [
        CorrelationKernel("white", d=1),
        CorrelationKernel("constant", d=1),
        CorrelationKernel("riesz", d=1, alpha=0.5),
        CorrelationKernel("ou", d=1, alpha=2.0),
    ],
    ids=lambda k: k.variant,
)
def test_h_heat_quadrature_matches_closed(kern):
    for t in np.geomspace(1e-3, 1e2, 50):
        closed = h_heat(kern, float(t), method="closed")
        quad = h_heat(kern, float(t), method="quadrature")
        assert abs(quad - closed) / closed <= 1e-6


def test_h_heat_small_t_linear_law():
    # h(t) ~ 2 f(0) t as t -> 0 whenever f(0) is finite.
    ts = np.geomspace(1e-4, 1e-3, 8)
    for kern in (
        CorrelationKernel("ou", d=1, alpha=1.2),
        CorrelationKernel("bessel-potential", d=1, nu=2.5),
        CorrelationKernel("bessel-spectral", d=1, nu=2.5),
    ):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hs = [h_heat(kern, float(t)) for t in ts]
        assert loglog_slope(ts, hs) == pytest.approx(1.0, abs=0.02)


def test_h_heat_bessel_spectral_large_t_exponent():
    # h ~ t^{1-(nu^d)/2} for nu^d < 2; nu != d avoids the log-corrected case.
    kern = CorrelationKernel("bessel-spectral", d=2, nu=0.8)
    ts = np.geomspace(1e3, 1e6, 8)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hs = [h_heat(kern, float(t)) for t in ts]
    assert loglog_slope(ts, hs) == pytest.approx(0.6, abs=0.05)


def test_h_heat_boundary_and_domain():
    assert h_heat(CorrelationKernel("white", d=1), 0.0) == 0.0
    with pytest.raises(DomainError):
        h_heat(CorrelationKernel("white", d=1), -1.0)
    with pytest.raises(DomainError):
        k_eval(CorrelationKernel("white", d=1), 0.0)


# -- heat kernel k -----------------------------------------------------------------


def test_k_eval_constant_one():
    assert k_eval(CorrelationKernel("constant", d=3), 5.0) == pytest.approx(1.0)


def test_k_eval_white_frozen():
    assert k_eval(CorrelationKernel("white", d=1), 2.0) == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-12)


def test_k_eval_ou_alpha2_closed():
    kern = CorrelationKernel("ou", d=2, alpha=2.0)
    for t in (0.5, 2.0):
        assert k_eval(kern, t) == pytest.approx(1.0 / (1.0 + 2.0 * t), rel=1e-9)


def test_k_nonincreasing():
    ts = np.geomspace(1e-2, 1e2, 30)
    for kern in (
        CorrelationKernel("white", d=1),
        CorrelationKernel("riesz", d=2, alpha=1.0),
        CorrelationKernel("ou", d=1, alpha=1.0),
        CorrelationKernel("bessel-spectral", d=1, nu=1.5),
    ):
        ks = np.array([k_eval(kern, float(t)) for t in ts])
        assert np.all(np.diff(ks) <= 1e-10 * ks[:-1])


# -- wave functionals --------------------------------------------------------------


def test_h_wave_white_quarter_t_squared():
    # Mild-form isometry with the half-indicator wave propagator:
    # Var = int_0^t (1/4)(2s) ds = t^2/4.
    kern = CorrelationKernel("white", d=1)
    for t in (0.5, 1.0, 2.0):
        assert h_wave(kern, t) == pytest.approx(t * t / 4.0, rel=1e-12)


def test_h_wave_constant_cubed():
    assert h_wave(CorrelationKernel("constant", d=1), 3.0) == pytest.approx(9.0, rel=1e-12)


def test_h_wave_riesz_frozen():
    # 2^{1-a} t^{3-a} / ((1-a)(2-a)(3-a)) at a=1/2, t=1.
    kern = CorrelationKernel("riesz", d=1, alpha=0.5)
    expect = 2.0**0.5 / (0.5 * 1.5 * 2.5)
    assert h_wave(kern, 1.0) == pytest.approx(expect, rel=1e-12)
    assert h_wave(kern, 1.0) == pytest.approx(0.7542472332656508, rel=1e-12)


def test_k_wave_values():
    assert k_wave(CorrelationKernel("white", d=1), 3.0) == pytest.approx(0.5)
    assert k_wave(CorrelationKernel("constant", d=1), 3.0) == pytest.approx(3.0)
    kern = CorrelationKernel("riesz", d=1, alpha=0.5)
    assert k_wave(kern, 2.0) == pytest.approx(2.0**0.5 / 0.5, rel=1e-9)


def test_wave_large_t_exponents():
    # Riesz: 3 - alpha (closed); smooth kernels with integrable f: 2.
    kern = CorrelationKernel("riesz", d=1, alpha=0.5)
    ts = np.geomspace(1e3, 1e6, 8)
    assert loglog_slope(ts, [h_wave(kern, float(t)) for t in ts]) == pytest.approx(2.5, abs=0.02)
    for kern in (CorrelationKernel("bessel-spectral", d=1, nu=1.5), CorrelationKernel("ou", d=1, alpha=1.0)):
        hs = [h_wave(kern, float(t)) for t in ts]
        assert loglog_slope(ts, hs) == pytest.approx(2.0, abs=0.05)


def test_wave_rejects_higher_dimension():
    with pytest.raises(ConfigError):
        k_wave(CorrelationKernel("constant", d=2), 1.0)
    with pytest.raises(ConfigError):
        h_wave(CorrelationKernel("ou", d=2, alpha=1.0), 1.0)


def test_wave_riesz_needs_alpha_below_one():
    # Surfaced as a hypothesis failure: the wave functional diverges.
    with pytest.raises(NumericsError):
        h_wave(CorrelationKernel("riesz", d=1, alpha=1.2), 1.0)


def test_wave_domain_error():
    with pytest.raises(DomainError):
        h_wave(CorrelationKernel("white", d=1), -1.0)


# -- Gaussian kernel identity -------------------------------------------------------


def test_heat_factorization_symmetric_point():
    assert heat_factorization_check(2.0, 1.0, 0.0, 0.0) <= 1e-14


def test_heat_factorization_random():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        t = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e2))))
        s = t * float(rng.uniform(0.05, 0.95))
        a, b = rng.normal(0.0, 2.0, 2)
        scale = max(gaussian_kernel(t, a + b), 1e-300)
        assert heat_factorization_check(t, s, float(a), float(b)) <= 1e-12 * max(1.0, scale)
