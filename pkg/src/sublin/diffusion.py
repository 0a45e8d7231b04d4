"""Sublinear diffusion coefficients and their concavity thresholds.

A coefficient ``rho`` enters every moment bound through three derived
objects: the symmetrized power ``rho_p``, the onset ``M0`` of concavity of
``|rho|``, and the onset ``M`` (with cap ``K_M = sup_{(-M,M)} |rho|``) of
concavity of ``rho_2``. The closed families below are the ones with known
envelope formulas; arbitrary coefficients are supported through
:func:`custom` with a declared ``M0`` plus numeric validation.

Families (all evaluated with ``|u|``, so they are even):

- ``ratio-power``:   ``rho(u) = |u| / (r + |u|)^(1-alpha)``, ``alpha in [0,1)``, ``r >= 0``
- ``log-perturbed``: ``rho(u) = |u|^alpha * log(e + u^2)^(-beta)``
- ``iterated-log``:  ``rho(u) = |u| * exp(-beta * (log log(e + u^2))^kappa)``
- ``custom``:        caller-supplied vectorized evaluator
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, DomainError, NumericsError

__all__ = [
    "DiffusionCoefficient",
    "Thresholds",
    "ratio_power",
    "log_perturbed",
    "iterated_log",
    "custom",
    "eval_rho",
    "rho_p",
    "concavity_thresholds",
    "subgradient_gp",
]

RATIO_POWER = "ratio-power"
LOG_PERTURBED = "log-perturbed"
ITERATED_LOG = "iterated-log"
CUSTOM = "custom"

# Geometric grid used by every numeric curvature scan.
_SCAN_LO = 1e-6
_SCAN_HI = 1e12
_SCAN_N = 10_000


class Thresholds(NamedTuple):
    """Concavity thresholds: ``m0 <= m``, and ``k_m = sup_{(-m,m)} |rho|``."""

    m0: float
    m: float
    k_m: float


@dataclass(frozen=True)
class DiffusionCoefficient:
    """Immutable coefficient description with cached thresholds.

    Use the module-level constructors (:func:`ratio_power`, ...) rather
    than instantiating directly; they validate the per-family parameter
    constraints before the threshold scan runs.
    """

    family: str
    alpha: float = 0.0
    beta: float = 0.0
    kappa: float = 1.0
    r: float = 0.0
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    declared_m0: float | None = None
    thresholds: Thresholds = field(init=False, compare=False)

    def __post_init__(self) -> None:
        _validate_family(self)
        object.__setattr__(self, "thresholds", _compute_thresholds(self))
        _validate_hypothesis(self)

    # -- convenience wrappers -------------------------------------------------

    def __call__(self, u):
        return eval_rho(self, u)

    def to_config(self) -> dict:
        if self.family == CUSTOM:
            raise ConfigError("custom coefficients are not serializable")
        return {
            "family": self.family,
            "alpha": self.alpha,
            "beta": self.beta,
            "kappa": self.kappa,
            "r": self.r,
        }

    @staticmethod
    def from_config(cfg: dict) -> "DiffusionCoefficient":
        family = cfg.get("family")
        if family == RATIO_POWER:
            return ratio_power(alpha=cfg.get("alpha", 0.0), r=cfg.get("r", 0.0))
        if family == LOG_PERTURBED:
            return log_perturbed(alpha=cfg.get("alpha", 0.0), beta=cfg.get("beta", 0.0))
        if family == ITERATED_LOG:
            return iterated_log(beta=cfg.get("beta", 1.0), kappa=cfg.get("kappa", 1.0))
        raise ConfigError(f"unknown coefficient family: {family!r}")


def ratio_power(alpha: float = 0.0, r: float = 0.0) -> DiffusionCoefficient:
    """``rho(u) = |u|/(r+|u|)^(1-alpha)``; concave with all thresholds 0."""
    return DiffusionCoefficient(RATIO_POWER, alpha=float(alpha), r=float(r))


def log_perturbed(alpha: float, beta: float) -> DiffusionCoefficient:
    """``rho(u) = |u|^alpha log(e+u^2)^(-beta)`` with the admissible (alpha, beta)."""
    return DiffusionCoefficient(LOG_PERTURBED, alpha=float(alpha), beta=float(beta))


def iterated_log(beta: float, kappa: float) -> DiffusionCoefficient:
    """``rho(u) = |u| exp(-beta (log log(e+u^2))^kappa)``, ``beta, kappa > 0``."""
    return DiffusionCoefficient(ITERATED_LOG, beta=float(beta), kappa=float(kappa))


def custom(
    evaluator: Callable[[np.ndarray], np.ndarray], m0: float
) -> DiffusionCoefficient:
    """Wrap a vectorized evaluator; ``m0`` must be declared, not inferred."""
    return DiffusionCoefficient(CUSTOM, evaluator=evaluator, declared_m0=float(m0))


def _validate_family(coeff: DiffusionCoefficient) -> None:
    f = coeff.family
    if f == RATIO_POWER:
        if not 0.0 <= coeff.alpha < 1.0:
            raise ConfigError(f"ratio-power needs alpha in [0,1), got {coeff.alpha}")
        if coeff.r < 0.0:
            raise ConfigError(f"ratio-power needs r >= 0, got {coeff.r}")
    elif f == LOG_PERTURBED:
        a, b = coeff.alpha, coeff.beta
        # Admissible cases: (i) a=0, b<0; (ii) a in (0,1), any b; (iii) a=1, b>0.
        if not 0.0 <= a <= 1.0:
            raise ConfigError(f"log-perturbed needs alpha in [0,1], got {a}")
        if a == 0.0 and b >= 0.0:
            raise ConfigError("log-perturbed with alpha=0 needs beta < 0")
        if a == 1.0 and b <= 0.0:
            raise ConfigError("log-perturbed with alpha=1 needs beta > 0")
    elif f == ITERATED_LOG:
        if coeff.beta <= 0.0 or coeff.kappa <= 0.0:
            raise ConfigError("iterated-log needs beta > 0 and kappa > 0")
    elif f == CUSTOM:
        if coeff.evaluator is None:
            raise ConfigError("custom coefficient needs an evaluator")
        if coeff.declared_m0 is None or coeff.declared_m0 < 0.0:
            raise ConfigError("custom coefficient must declare m0 >= 0")
    else:
        raise ConfigError(f"unknown coefficient family: {f!r}")


# -- evaluation ----------------------------------------------------------------


def _log_e_plus_sq(au: np.ndarray) -> np.ndarray:
    """``log(e + au^2)`` without overflow for huge ``au`` (relative error < 1e-300)."""
    out = np.empty_like(au)
    big = au > 1e150
    small = ~big
    out[small] = np.log(np.e + au[small] * au[small])
    out[big] = 2.0 * np.log(au[big])
    return out


def _eval_scalar(coeff: DiffusionCoefficient, u: float) -> float:
    """Scalar twin of :func:`_eval_array` for the closed families.

    Pure ``math`` calls; the numpy round trip costs ~10us per point, which
    dominates envelope inversions that evaluate rho thousands of times.
    """
    au = abs(u)
    f = coeff.family
    if f == RATIO_POWER:
        if coeff.r == 0.0:
            return au**coeff.alpha
        return au / (coeff.r + au) ** (1.0 - coeff.alpha)
    lg = 2.0 * math.log(au) if au > 1e150 else math.log(math.e + au * au)
    if f == LOG_PERTURBED:
        return au**coeff.alpha * lg ** (-coeff.beta)
    return au * math.exp(-coeff.beta * math.log(lg) ** coeff.kappa)


def _eval_array(coeff: DiffusionCoefficient, u: np.ndarray) -> np.ndarray:
    au = np.abs(u)
    f = coeff.family
    if f == RATIO_POWER:
        if coeff.r == 0.0:
            # |u|/(|u|)^{1-a} = |u|^a; avoids 0/0 at the origin.
            return au**coeff.alpha
        return au / (coeff.r + au) ** (1.0 - coeff.alpha)
    if f == LOG_PERTURBED:
        return au**coeff.alpha * _log_e_plus_sq(au) ** (-coeff.beta)
    if f == ITERATED_LOG:
        inner = np.log(_log_e_plus_sq(au))
        return au * np.exp(-coeff.beta * inner**coeff.kappa)
    out = np.asarray(coeff.evaluator(u), dtype=float)
    if out.shape != u.shape:
        raise ConfigError("custom evaluator must be vectorized and shape-preserving")
    return out


def eval_rho(coeff: DiffusionCoefficient, u):
    """Evaluate ``rho(u)`` elementwise; scalar in, scalar out."""
    if coeff.family != CUSTOM and isinstance(u, (int, float)):
        return _eval_scalar(coeff, float(u))
    arr = np.asarray(u, dtype=float)
    res = _eval_array(coeff, np.atleast_1d(arr))
    if arr.ndim == 0:
        val = float(res[0])
        if coeff.family == CUSTOM and not math.isfinite(val):
            raise NumericsError(f"custom evaluator returned non-finite value at u={u}")
        return val
    res = res.reshape(arr.shape)
    if coeff.family == CUSTOM and not np.all(np.isfinite(res)):
        raise NumericsError("custom evaluator returned non-finite values")
    return res


def rho_p(coeff: DiffusionCoefficient, p: float, x):
    """Symmetrized power ``|rho(x^{1/p})|^p + |rho(-x^{1/p})|^p`` for ``x >= 0``."""
    if p <= 0.0:
        raise DomainError(f"rho_p needs p > 0, got {p}")
    if coeff.family != CUSTOM and isinstance(x, (int, float)):
        xf = float(x)
        if xf < 0.0:
            raise DomainError("rho_p is defined for x >= 0 only")
        # The closed families are even, so the two signed powers coincide.
        return 2.0 * abs(_eval_scalar(coeff, xf ** (1.0 / p))) ** p
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("rho_p is defined for x >= 0 only")
    root = np.atleast_1d(arr) ** (1.0 / p)
    plus = np.abs(_eval_array(coeff, root)) ** p
    minus = np.abs(_eval_array(coeff, -root)) ** p
    res = plus + minus
    if arr.ndim == 0:
        return float(res[0])
    return res.reshape(arr.shape)


def concavity_thresholds(coeff: DiffusionCoefficient) -> Thresholds:
    """Return the cached ``(M0, M, K_M)`` triple."""
    return coeff.thresholds


def subgradient_gp(coeff: DiffusionCoefficient, p: float, x: float) -> float:
    """Centered finite-difference slope of ``rho_p`` at ``x > M0^p``."""
    m0 = coeff.thresholds.m0
    if x <= m0**p:
        raise DomainError(f"subgradient_gp needs x > M0^p = {m0 ** p}, got {x}")
    h = max(1e-6 * x, 1e-9)
    h = min(h, 0.5 * (x - m0**p)) if m0 > 0.0 else min(h, 0.5 * x)
    lo, hi = x - h, x + h
    return float((rho_p(coeff, p, hi) - rho_p(coeff, p, lo)) / (hi - lo))


# -- threshold detection --------------------------------------------------------


def _last_convexity_threshold(xs: np.ndarray, ys: np.ndarray, what: str) -> float:
    """First grid point beyond which second differences stay nonpositive.

    Works on a geometric grid, so curvature is measured through slope
    changes with a relative tolerance: slope noise from float cancellation
    is orders of magnitude below 1e-8 of the local slope scale here.
    """
    slopes = np.diff(ys) / np.diff(xs)
    curv = slopes[1:] - slopes[:-1]
    scale = np.maximum(np.abs(slopes[1:]), np.abs(slopes[:-1]))
    convex = curv > 1e-8 * scale
    idx = np.nonzero(convex)[0]
    if idx.size == 0:
        return 0.0
    last = idx[-1]
    # The interior point of the last convex triple is xs[last+1].
    if xs[last + 1] > 0.1 * xs[-1]:
        raise NumericsError(
            f"curvature of {what} did not stabilize below {xs[-1]:.3g} "
            f"(last convex point at {xs[last + 1]:.3g})"
        )
    return float(xs[last + 2])


def _compute_thresholds(coeff: DiffusionCoefficient) -> Thresholds:
    if coeff.family == RATIO_POWER:
        return Thresholds(0.0, 0.0, 0.0)

    xs = np.geomspace(_SCAN_LO, _SCAN_HI, _SCAN_N)
    if coeff.family == CUSTOM:
        m0 = float(coeff.declared_m0)
    else:
        m0 = _last_convexity_threshold(xs, np.abs(_eval_array(coeff, xs)), "|rho|")

    m_sq = _last_convexity_threshold(xs, rho_p(coeff, 2.0, xs), "rho_2")
    m = max(math.sqrt(m_sq), m0)

    if m == 0.0:
        k_m = 0.0
    else:
        grid = np.linspace(-m, m, 4097)
        k_m = float(np.max(np.abs(_eval_array(coeff, grid))))
    return Thresholds(m0, m, k_m)


def _validate_hypothesis(coeff: DiffusionCoefficient) -> None:
    """Numeric checks of the standing assumptions on ``rho``.

    Local boundedness (finite values on a wide grid), decay of
    ``|rho(x)/x|`` along 1e6/1e9/1e12, and concavity of ``|rho|`` beyond
    ``M0`` (the closed families carry proofs; the check is cheap enough to
    run for everything, and it is the only guard for custom evaluators).
    """
    probe = np.geomspace(1e-6, 1e12, 64)
    vals = _eval_array(coeff, probe)
    if not np.all(np.isfinite(vals)):
        raise ConfigError("rho must be finite on bounded intervals")

    big = np.array([1e6, 1e9, 1e12])
    ratios = np.abs(_eval_array(coeff, big) / big)
    if not (ratios[0] >= ratios[1] >= ratios[2]):
        raise ConfigError(
            f"|rho(x)/x| must decrease along 1e6/1e9/1e12; got {ratios.tolist()}"
        )

    m0 = coeff.thresholds.m0
    # Small margin past M0: the scanned threshold is grid-resolution exact only.
    lo = max(1.05 * m0, 1e-6) if m0 > 0.0 else 1e-6
    xs = np.geomspace(lo + 1e-12, _SCAN_HI, 512)
    ys = np.abs(_eval_array(coeff, xs))
    slopes = np.diff(ys) / np.diff(xs)
    curv = slopes[1:] - slopes[:-1]
    scale = np.maximum(np.abs(slopes[1:]), np.abs(slopes[:-1]))
    if np.any(curv > 1e-6 * scale):
        raise ConfigError(f"|rho| is not concave beyond declared M0={m0}")
