"""Unit tests for the envelope function, its inverses, and the fixed-point oracle."""

import math

import numpy as np
import pytest

from sublin.diffusion import DiffusionCoefficient, concavity_thresholds
from sublin.envelope import (
    EnvelopeFunction,
    F_eval,
    F_inverse,
    fixed_point_oracle,
    newton_step_bound,
    solve_concave_inequality,
)
from sublin.errors import DomainError, NumericsError


def envelope(family, **kwargs):
    return EnvelopeFunction(DiffusionCoefficient(family, **kwargs))


# -- F --------------------------------------------------------------------------


def test_F_pure_sqrt_frozen():
    # rho_2(x) = 2 sqrt(x), so F(x) = sqrt(x)/8.
    assert F_eval(envelope("ratio-power", alpha=0.5, r=0.0), 4.0) == pytest.approx(0.25, rel=1e-14)


def test_F_ratio_power_identity():
    # F(x) = (r + sqrt(x))^{2(1-alpha)}/8 for the ratio family.
    env = envelope("ratio-power", alpha=0.25, r=1.5)
    for x in np.geomspace(1e-3, 1e9, 25):
        expect = (1.5 + math.sqrt(x)) ** 1.5 / 8.0
        assert F_eval(env, float(x)) == pytest.approx(expect, rel=1e-12)


def test_F_infinite_beyond_support():
    hinge = DiffusionCoefficient(
        "custom",
        evaluator=lambda u: np.maximum(0.0, 1.0 - np.abs(u)),
        declared_m0=1.0,
    )
    env = EnvelopeFunction(hinge)
    assert F_eval(env, 4.0) == math.inf


def test_F_domain_error_below_M_squared():
    env = envelope("iterated-log", beta=1.0, kappa=2.0)
    m = concavity_thresholds(env.coeff).m
    with pytest.raises(DomainError):
        F_eval(env, 0.5 * m * m)


# -- F inverse ------------------------------------------------------------------


def test_inverse_pure_sqrt_frozen():
    # F(x) = sqrt(x)/8 = 1 at x = 64.
    env = envelope("ratio-power", alpha=0.5, r=0.0)
    assert F_inverse(env, 1.0) == pytest.approx(64.0, rel=1e-10)


def test_inverse_bounded_family_hits_zero():
    # F(x) = (1+sqrt(x))^2/8 equals 1/8 exactly at x = 0.
    env = envelope("ratio-power", alpha=0.0, r=1.0)
    assert F_inverse(env, 0.125) == pytest.approx(0.0, abs=1e-12)


def test_inverse_log_linear_frozen():
    # alpha=1, beta=1: F^{-1}(y) = exp((8y)^{1/2}) - e above the floor.
    env = envelope("log-perturbed", alpha=1.0, beta=1.0)
    assert F_inverse(env, 1.0) == pytest.approx(math.exp(math.sqrt(8.0)) - math.e, rel=1e-10)


def test_inverse_floor_is_twice_M_squared():
    env = envelope("iterated-log", beta=1.0, kappa=2.0)
    m = concavity_thresholds(env.coeff).m
    assert F_inverse(env, 1e-12) == pytest.approx(2.0 * m * m, rel=1e-12)


@pytest.mark.parametrize(
    "family,kwargs,y_hi",
    [
        ("ratio-power", dict(alpha=0.5, r=0.0), 1e6),
        ("ratio-power", dict(alpha=0.25, r=2.0), 1e6),
        ("ratio-power", dict(alpha=0.0, r=1.0), 1e6),
        # The log and iterated-log preimages overflow doubles early, so
        # their grids stop where exp((8y)^{1/(2b)}) is representable.
        ("log-perturbed", dict(alpha=1.0, beta=1.0), 1e4),
        ("iterated-log", dict(beta=0.5, kappa=1.5), 1e6),
    ],
)
def test_closed_inverse_matches_bisection(family, kwargs, y_hi):
    env = envelope(family, **kwargs)
    for y in np.geomspace(1e-2, y_hi, 40):
        closed = F_inverse(env, float(y), method="closed")
        numeric = F_inverse(env, float(y), method="numeric")
        assert abs(closed - numeric) / max(1.0, abs(closed)) <= 1e-8


def test_inverse_right_inverse_on_flat_stretch():
    # Custom rho vanishing beyond 1: F is infinite past the support, so
    # every finite target collapses to the 2M^2 floor, independent of y.
    hinge = DiffusionCoefficient(
        "custom",
        evaluator=lambda u: np.maximum(0.0, 1.0 - np.abs(u)),
        declared_m0=1.0,
    )
    env = EnvelopeFunction(hinge)
    m = concavity_thresholds(hinge).m
    x1 = F_inverse(env, 1e4)
    x2 = F_inverse(env, 1e8)
    assert x1 == pytest.approx(2.0 * m * m, rel=1e-9)
    assert x2 == pytest.approx(x1, rel=1e-9)
    assert F_eval(env, x1) >= 1e8


def test_inverse_overflow_raises_numeric():
    env = envelope("log-perturbed", alpha=1.0, beta=0.25)
    with pytest.raises(NumericsError):
        F_inverse(env, 1e9, method="numeric")
    # The closed form knows the true preimage overflows.
    assert F_inverse(env, 1e9, method="closed") == math.inf


def test_galois_inequalities():
    rng = np.random.default_rng(7)
    envs = [
        envelope("ratio-power", alpha=0.5, r=1.0),
        envelope("log-perturbed", alpha=0.5, beta=0.75),
        envelope("iterated-log", beta=1.0, kappa=2.0),
    ]
    for env in envs:
        m = concavity_thresholds(env.coeff).m
        ys = np.exp(rng.uniform(np.log(1e-3), np.log(1e6), 1000))
        for y in ys:
            x = F_inverse(env, float(y))
            fx = F_eval(env, x)
            assert fx >= y - 1e-9 * max(1.0, y)
        xs = np.exp(rng.uniform(np.log(max(2.0 * m * m, 1e-3) + 1e-9), np.log(1e9), 1000))
        for x in xs:
            y = F_eval(env, float(x))
            if math.isinf(y):
                continue
            assert F_inverse(env, y) <= x + 1e-9 * max(1.0, x)


def test_log_family_asymptotic_window():
    # No closed inverse exists for alpha < 1; the numeric inverse must
    # track (8y)^{1/(1-a)} [log(e+y)/(1-a)]^{-2b/(1-a)} within a factor
    # of 4 once y is large.
    for alpha, beta in [(0.0, -0.25), (0.25, 0.5), (0.5, 0.75), (0.5, -0.5)]:
        env = envelope("log-perturbed", alpha=alpha, beta=beta)
        for y in np.geomspace(1e3, 1e7, 30):
            shape = (8.0 * y) ** (1.0 / (1.0 - alpha)) * (
                math.log(math.e + y) / (1.0 - alpha)
            ) ** (-2.0 * beta / (1.0 - alpha))
            ratio = F_inverse(env, float(y), method="numeric") / shape
            assert 0.25 <= ratio <= 4.0


# -- concave inequality solver ---------------------------------------------------


def test_solve_concave_frozen():
    env = envelope("ratio-power", alpha=0.5, r=0.0)
    assert solve_concave_inequality(env, 1.0, 1.0) == pytest.approx(130.0, rel=1e-10)


def test_solve_concave_floor_for_tiny_k():
    env = envelope("iterated-log", beta=1.0, kappa=2.0)
    m = concavity_thresholds(env.coeff).m
    assert solve_concave_inequality(env, 1e-15, 3.0) == pytest.approx(4.0 * m * m + 6.0, rel=1e-12)


def test_solve_concave_rejects_nonpositive():
    env = envelope("ratio-power", alpha=0.5, r=0.0)
    with pytest.raises(DomainError):
        solve_concave_inequality(env, 0.0, 1.0)
    with pytest.raises(DomainError):
        solve_concave_inequality(env, 1.0, -1.0)


# -- fixed-point oracle ----------------------------------------------------------


def test_oracle_frozen_motivating_instance():
    x = fixed_point_oracle(lambda x: 0.4 * math.sqrt(x), 1.0, 0.125)
    assert x == pytest.approx(0.36748077, abs=1e-5)


def test_oracle_zero_map_returns_offset():
    assert fixed_point_oracle(lambda x: 0.0, 5.0, 0.25) == pytest.approx(0.25, abs=1e-12)


def test_oracle_sqrt_unit():
    assert fixed_point_oracle(lambda x: math.sqrt(x), 1.0, 0.0) == pytest.approx(1.0, rel=1e-9)


def test_oracle_accepts_coefficient():
    coeff = DiffusionCoefficient("ratio-power", alpha=0.5, r=0.0)
    # rho_2(x) = 2 sqrt(x): largest root of x = 2k sqrt(x) + b.
    k, b = 0.5, 1.0
    expect = ((2.0 * k + math.sqrt(4.0 * k * k + 4.0 * b)) / 2.0) ** 2
    assert fixed_point_oracle(coeff, k, b) == pytest.approx(expect, rel=1e-9)


def test_oracle_divergent_map_raises():
    with pytest.raises(NumericsError):
        fixed_point_oracle(lambda x: x, 1.0, 1.0)


def test_oracle_below_solver_bound():
    # Random families: x* <= 2 F^{-1}(k) + 2 b.
    rng = np.random.default_rng(99)
    coeffs = [
        DiffusionCoefficient("ratio-power", alpha=0.5, r=0.0),
        DiffusionCoefficient("ratio-power", alpha=0.25, r=1.0),
        DiffusionCoefficient("log-perturbed", alpha=0.5, beta=0.75),
        DiffusionCoefficient("iterated-log", beta=0.5, kappa=1.5),
    ]
    for _ in range(250):
        coeff = coeffs[rng.integers(len(coeffs))]
        env = EnvelopeFunction(coeff)
        k = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e3))))
        b = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e3))))
        assert fixed_point_oracle(coeff, k, b) <= solve_concave_inequality(env, k, b) * (1.0 + 1e-12)


# -- one-step Newton bound --------------------------------------------------------


def test_newton_frozen():
    # 0.4^2 + 0.125/0.5 = 0.41 in exact arithmetic; allow rounding ulps.
    assert newton_step_bound(0.4, 0.125, 0.5) == pytest.approx(0.41, abs=1e-15)


def test_newton_zero_offset():
    assert newton_step_bound(0.7, 0.0, 0.25) == pytest.approx(0.7 ** (1.0 / 0.75), rel=1e-14)


def test_newton_dominates_quadratic_oracle():
    assert newton_step_bound(1.0, 1.0, 0.5) == pytest.approx(3.0, rel=1e-14)
    golden_sq = ((1.0 + math.sqrt(5.0)) / 2.0) ** 2
    assert fixed_point_oracle(lambda x: math.sqrt(x), 1.0, 1.0) == pytest.approx(golden_sq, rel=1e-9)
    assert golden_sq <= 3.0


def test_newton_dominates_power_law_oracle():
    rng = np.random.default_rng(321)
    for _ in range(1000):
        a = float(rng.uniform(0.05, 0.95))
        k = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        b = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
        star = fixed_point_oracle(lambda x: x**a, k, b)
        assert star <= newton_step_bound(k, b, a) * (1.0 + 1e-9)


def test_newton_rejects_linear_exponent():
    with pytest.raises(DomainError):
        newton_step_bound(1.0, 1.0, 1.0)
