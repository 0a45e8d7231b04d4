"""Envelope ``F`` of a sublinear coefficient and its right inverse.

``F(x) = x / (4 rho_2(x))`` on ``[M^2, inf)`` with ``x/0 := inf``; the right
inverse ``F^{-1}(y) = inf{x in [2M^2, inf): F(x) >= y}`` is what every
moment bound evaluates. Closed inverses exist for the ratio-power family,
the log-perturbed family with linear growth (alpha = 1), and the
iterated-log family; everything else goes through monotone bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diffusion import (
    CUSTOM,
    ITERATED_LOG,
    LOG_PERTURBED,
    RATIO_POWER,
    DiffusionCoefficient,
    rho_p,
)
from .errors import DomainError, NumericsError

__all__ = [
    "EnvelopeFunction",
    "envelope",
    "F_eval",
    "F_inverse",
    "solve_concave_inequality",
    "fixed_point_oracle",
    "newton_step_bound",
]

_REL_TOL = 1e-12
_DOUBLING_CAP = 1e306
# exp(x) overflows past ~709.78; anything above means "infinite for doubles"
_EXP_CAP = 700.0


@dataclass(frozen=True)
class EnvelopeFunction:
    """Envelope of one coefficient, with the closed-inverse tag resolved."""

    coeff: DiffusionCoefficient
    closed_form: str | None = field(init=False, compare=False)

    def __post_init__(self) -> None:
        c = self.coeff
        tag = None
        if c.family == RATIO_POWER:
            tag = "ratio-power"
        elif c.family == LOG_PERTURBED and c.alpha == 1.0:
            tag = "log-linear"
        elif c.family == ITERATED_LOG:
            tag = "iterated-log"
        object.__setattr__(self, "closed_form", tag)

    @property
    def m(self) -> float:
        return self.coeff.thresholds.m

    @property
    def m0(self) -> float:
        return self.coeff.thresholds.m0


def envelope(coeff: DiffusionCoefficient) -> EnvelopeFunction:
    return EnvelopeFunction(coeff)


def _rho2(env: EnvelopeFunction, x: float) -> float:
    return float(rho_p(env.coeff, 2.0, x))


def F_eval(env: EnvelopeFunction, x: float) -> float:
    """``x / (4 rho_2(x))`` for ``x >= M^2``; ``+inf`` where ``rho_2`` vanishes."""
    m_sq = env.m * env.m
    if x < m_sq:
        raise DomainError(f"F is defined on [M^2, inf) = [{m_sq}, inf), got {x}")
    if x == 0.0:
        # 0/0 at the origin: take the x -> 0+ limit (exact for the closed
        # families, e.g. ratio-power with r>0 gives r^{2(1-alpha)}/8).
        if _rho2(env, 0.0) > 0.0:
            return 0.0
        x = 1e-280
    denom = 4.0 * _rho2(env, x)
    if denom == 0.0:
        return math.inf
    return x / denom


def _closed_inverse(env: EnvelopeFunction, y: float) -> float:
    c = env.coeff
    floor = 2.0 * env.m * env.m
    if env.closed_form == "ratio-power":
        root = (8.0 * y) ** (0.5 / (1.0 - c.alpha)) - c.r
        return max(root, 0.0) ** 2
    if env.closed_form == "log-linear":
        # F(x) = log(e+x)^{2 beta} / 8
        if y <= 0.125:
            return max(0.0, floor)
        expo = (8.0 * y) ** (0.5 / c.beta)
        val = math.inf if expo > _EXP_CAP else math.exp(expo) - math.e
        return max(val, floor)
    if env.closed_form == "iterated-log":
        # F(x) = exp(2 beta (log log(e+x))^kappa) / 8
        if y <= 0.125:
            return max(0.0, floor)
        inner = (math.log(8.0 * y) / (2.0 * c.beta)) ** (1.0 / c.kappa)
        if inner > _EXP_CAP:
            return math.inf
        mid = math.exp(inner)
        val = math.inf if mid > _EXP_CAP else math.exp(mid) - math.e
        return max(val, floor)
    raise AssertionError("no closed inverse for this family")


def _numeric_inverse(env: EnvelopeFunction, y: float) -> float:
    floor = 2.0 * env.m * env.m
    if F_eval(env, floor) >= y:
        return floor

    hi = max(2.0 * floor, 1.0)
    lo = floor
    while F_eval(env, hi) < y:
        if hi > _DOUBLING_CAP:
            raise NumericsError(
                f"F never reaches {y} below {hi:.3g}; inverse exceeds float range"
            )
        lo = hi
        hi *= 2.0

    # Coarse pre-scan tightens the bracket before bisection (cheap, and it
    # keeps the bisection local when F is flat near the floor).
    scan = np.geomspace(max(lo, hi * 2.0**-63, 1e-300), hi, 64)
    for point in scan:
        if point <= lo:
            continue
        if F_eval(env, float(point)) >= y:
            hi = float(point)
            break
        lo = float(point)

    while hi - lo > _REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if F_eval(env, mid) >= y:
            hi = mid
        else:
            lo = mid
    return hi


def F_inverse(env: EnvelopeFunction, y: float, method: str = "auto") -> float:
    """Right inverse of ``F`` at ``y >= 0``.

    ``method`` is ``"auto"`` (closed form when the family has one),
    ``"closed"`` (error if unavailable) or ``"numeric"`` (bisection; used
    by the oracle tests against the closed forms).
    """
    if y < 0.0:
        raise DomainError(f"F_inverse needs y >= 0, got {y}")
    if method not in ("auto", "closed", "numeric"):
        raise DomainError(f"unknown method {method!r}")
    if method == "closed" and env.closed_form is None:
        raise DomainError(f"no closed inverse for family {env.coeff.family!r}")
    if method != "numeric" and env.closed_form is not None:
        return _closed_inverse(env, y)
    return _numeric_inverse(env, y)


def solve_concave_inequality(env: EnvelopeFunction, k: float, b: float) -> float:
    """Certified bound ``2 F^{-1}(k) + 2b`` for any ``x <= k rho_2(x) + b``."""
    if k <= 0.0 or b <= 0.0:
        raise DomainError(f"solve_concave_inequality needs k, b > 0, got {k}, {b}")
    return 2.0 * F_inverse(env, k) + 2.0 * b


def fixed_point_oracle(
    rho2: Callable[[float], float] | DiffusionCoefficient, k: float, b: float
) -> float:
    """Largest fixed point of ``x = k rho2(x) + b`` by bracket-and-bisect.

    Brute-force oracle used to validate the envelope bound: requires
    ``rho2`` concave and non-decreasing (so the super-level set of
    ``g(x) = k rho2(x) + b - x`` is an interval containing ``b``).
    """
    if k <= 0.0 or b < 0.0:
        raise DomainError(f"fixed_point_oracle needs k > 0 and b >= 0, got {k}, {b}")
    if isinstance(rho2, DiffusionCoefficient):
        coeff = rho2
        rho2 = lambda x: float(rho_p(coeff, 2.0, x))  # noqa: E731

    def g(x: float) -> float:
        return k * rho2(x) + b - x

    lo = b
    hi = max(2.0 * b, 1.0)
    for _ in range(200):
        if g(hi) < 0.0:
            break
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise NumericsError("fixed_point_oracle found no bracket below 1e300")
    else:
        raise NumericsError("fixed_point_oracle found no bracket")

    while hi - lo > _REL_TOL * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def newton_step_bound(k: float, b: float, a: float) -> float:
    """One-step Newton majorant ``k^{1/(1-a)} + b/(1-a)`` for ``x = k x^a + b``."""
    if not 0.0 <= a < 1.0:
        raise DomainError(f"newton_step_bound needs a in [0,1), got {a}")
    if k <= 0.0 or b < 0.0:
        raise DomainError(f"newton_step_bound needs k > 0 and b >= 0, got {k}, {b}")
    return k ** (1.0 / (1.0 - a)) + b / (1.0 - a)
