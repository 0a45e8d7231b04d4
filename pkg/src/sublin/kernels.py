"""Spatial correlation kernels and their time functionals for heat and wave flows.

Every moment bound consumes a kernel only through the scalar functional

    h(t) = (1/2) * Integral_0^{2t} k(s) ds,      k(s) = <p_s, f>,

for the heat propagator ``p_s`` (standard Gaussian kernel of ``(1/2)Lap``),
or through the analogous double integral of the wave propagator
``G(s, y) = (1/2) 1_{[-s,s]}(y)`` in one dimension. Closed forms are used
where they exist; everything else reduces to one-dimensional radial or
spectral quadrature before the time integral.

Spectral conventions: a kernel given by its spectral density ``w`` means
``f(x) = (2 pi)^{-d} Integral e^{i x.xi} w(xi) dxi``, so that
``<p_s, f> = (2 pi)^{-d} Integral e^{-s|xi|^2/2} w(xi) dxi`` and, for the
wave kernel, ``(2 pi)^{-1} Integral sin^2(s xi)/xi^2 w(xi) dxi``. With
``w = 1`` this recovers space-time white noise, which pins the constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import gamma as _gamma

from .errors import ConfigError, DomainError, NumericsError

__all__ = [
    "CorrelationKernel",
    "DalangResult",
    "white",
    "constant",
    "riesz",
    "ornstein_uhlenbeck",
    "bessel_potential",
    "bessel_spectral",
    "gaussian_kernel",
    "dalang_check",
    "k_eval",
    "h_heat",
    "h_wave",
    "k_wave",
    "heat_factorization_check",
]

WHITE = "white"
CONSTANT = "constant"
RIESZ = "riesz"
OU = "ou"
BESSEL_POTENTIAL = "bessel-potential"
BESSEL_SPECTRAL = "bessel-spectral"

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-10, limit=200)


@dataclass(frozen=True)
class CorrelationKernel:
    """Spatial covariance ``f`` of the driving noise, with dimension."""

    variant: str
    d: int = 1
    alpha: float = 0.0
    nu: float = 0.0

    def __post_init__(self) -> None:
        if self.d < 1 or int(self.d) != self.d:
            raise ConfigError(f"dimension must be a positive integer, got {self.d}")
        v = self.variant
        if v == RIESZ:
            if not 0.0 < self.alpha < 2.0:
                raise ConfigError(f"riesz kernel needs alpha in (0,2), got {self.alpha}")
        elif v == OU:
            # e^{-|x|^alpha} is positive definite only for alpha <= 2
            if not 0.0 < self.alpha <= 2.0:
                raise ConfigError(f"ou kernel needs alpha in (0,2], got {self.alpha}")
        elif v in (BESSEL_POTENTIAL, BESSEL_SPECTRAL):
            if self.nu <= 0.0:
                raise ConfigError(f"bessel kernels need nu > 0, got {self.nu}")
        elif v not in (WHITE, CONSTANT):
            raise ConfigError(f"unknown kernel variant: {v!r}")

    def to_config(self) -> dict:
        cfg = {"variant": self.variant, "d": self.d}
        if self.variant in (RIESZ, OU):
            cfg["alpha"] = self.alpha
        if self.variant in (BESSEL_POTENTIAL, BESSEL_SPECTRAL):
            cfg["nu"] = self.nu
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "CorrelationKernel":
        v = cfg.get("variant")
        d = int(cfg.get("d", 1))
        if v in (WHITE, CONSTANT):
            return CorrelationKernel(v, d=d)
        if v in (RIESZ, OU):
            return CorrelationKernel(v, d=d, alpha=float(cfg["alpha"]))
        if v in (BESSEL_POTENTIAL, BESSEL_SPECTRAL):
            return CorrelationKernel(v, d=d, nu=float(cfg["nu"]))
        raise ConfigError(f"unknown kernel variant: {v!r}")


def white(d: int = 1) -> CorrelationKernel:
    return CorrelationKernel(WHITE, d=d)


def constant(d: int = 1) -> CorrelationKernel:
    return CorrelationKernel(CONSTANT, d=d)


def riesz(alpha: float, d: int = 1) -> CorrelationKernel:
    return CorrelationKernel(RIESZ, d=d, alpha=float(alpha))


def ornstein_uhlenbeck(alpha: float = 2.0, d: int = 1) -> CorrelationKernel:
    return CorrelationKernel(OU, d=d, alpha=float(alpha))


def bessel_potential(nu: float, d: int = 1) -> CorrelationKernel:
    return CorrelationKernel(BESSEL_POTENTIAL, d=d, nu=float(nu))


def bessel_spectral(nu: float, d: int = 1) -> CorrelationKernel:
    return CorrelationKernel(BESSEL_SPECTRAL, d=d, nu=float(nu))


# -- basic ingredients -----------------------------------------------------------


def gaussian_kernel(t: float, r: float, d: int = 1) -> float:
    """Heat kernel of ``(1/2)Lap`` at radius ``r``: ``(2 pi t)^{-d/2} e^{-r^2/(2t)}``."""
    if t <= 0.0:
        raise DomainError(f"gaussian_kernel needs t > 0, got {t}")
    return (2.0 * math.pi * t) ** (-0.5 * d) * math.exp(-(r * r) / (2.0 * t))


def _sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (0.5 * d) / _gamma(0.5 * d)


def _abs_gauss_neg_moment(ell: float, d: int) -> float:
    """``E |Z_d|^{-ell}`` for a standard d-dimensional Gaussian, ``ell < d``."""
    if ell >= d:
        return math.inf
    return 2.0 ** (-0.5 * ell) * _gamma(0.5 * (d - ell)) / _gamma(0.5 * d)


def point_eval(kern: CorrelationKernel, r: float) -> float:
    """``f(r)`` for kernels defined pointwise in space (not white/bessel-potential)."""
    v = kern.variant
    if v == CONSTANT:
        return 1.0
    if v == RIESZ:
        if r == 0.0:
            return math.inf
        return float(r) ** (-kern.alpha)
    if v == OU:
        return math.exp(-abs(r) ** kern.alpha)
    if v == BESSEL_SPECTRAL:
        return (1.0 + r * r) ** (-0.5 * kern.nu)
    raise ConfigError(f"{v} kernel has no pointwise spatial evaluation")


# -- Dalang-type noise conditions ------------------------------------------------


class DalangResult(NamedTuple):
    ok: bool
    improved_eta: float | None


def dalang_check(kern: CorrelationKernel) -> DalangResult:
    """Integrability of the spectral measure against ``(1+|xi|^2)^{-1}``.

    ``improved_eta`` is the supremum of exponents ``eta in (0,1)`` for which
    the strengthened integrability (with ``(1+|xi|^2)^{eta-1}``) still
    holds, when that supremum is positive.
    """
    v, d = kern.variant, kern.d
    if v == WHITE:
        return DalangResult(d == 1, 0.5 if d == 1 else None)
    if v == CONSTANT:
        return DalangResult(True, 1.0)
    if v == RIESZ:
        ok = kern.alpha < min(2.0, float(d))
        return DalangResult(ok, 1.0 - 0.5 * kern.alpha if ok else None)
    if v == OU:
        # spectral density decays like |xi|^{-d-alpha} (alpha < 2) or Gaussian
        return DalangResult(True, 1.0)
    if v == BESSEL_POTENTIAL:
        eta = min(1.0, 1.0 + 0.5 * (kern.nu - d))
        ok = eta > 0.0
        return DalangResult(ok, eta if ok else None)
    if v == BESSEL_SPECTRAL:
        # spectral density: integrable singularity |xi|^{nu-d} at 0, fast decay
        return DalangResult(True, 1.0)
    raise ConfigError(f"unknown kernel variant: {v!r}")


# -- k(t) = <p_t, f> -------------------------------------------------------------


def _chi_pdf(w: np.ndarray, d: int) -> np.ndarray:
    """Density of ``|Z_d|`` for a standard Gaussian vector."""
    norm = _sphere_area(d) * (2.0 * math.pi) ** (-0.5 * d)
    return norm * w ** (d - 1) * np.exp(-0.5 * w * w)


def k_eval(kern: CorrelationKernel, t: float) -> float:
    """Heat-smoothed kernel value ``k(t) = Integral p_t(z) f(z) dz``."""
    if t <= 0.0:
        raise DomainError(f"k_eval needs t > 0, got {t}")
    v, d = kern.variant, kern.d
    if v == WHITE:
        return (2.0 * math.pi * t) ** (-0.5 * d)
    if v == CONSTANT:
        return 1.0
    if v == RIESZ:
        moment = _abs_gauss_neg_moment(kern.alpha, d)
        return t ** (-0.5 * kern.alpha) * moment
    if v == OU:
        if kern.alpha == 2.0:
            return (1.0 + 2.0 * t) ** (-0.5 * d)
        rt = math.sqrt(t)

        def f(w):
            return _chi_pdf(np.asarray(w), d) * np.exp(-((rt * np.asarray(w)) ** kern.alpha))

        val, _ = integrate.quad(f, 0.0, 40.0, **_QUAD_OPTS)
        return val
    if v == BESSEL_SPECTRAL:

        def f(w):
            w = np.asarray(w)
            return _chi_pdf(w, d) * (1.0 + t * w * w) ** (-0.5 * kern.nu)

        val, _ = integrate.quad(f, 0.0, 40.0, **_QUAD_OPTS)
        return val
    if v == BESSEL_POTENTIAL:
        # (2 pi)^{-d} Integral e^{-t|xi|^2/2} (1+|xi|^2)^{-nu/2} dxi, radialized
        # and substituted xi = w/sqrt(t) so the Gaussian factor is t-free.
        pref = (2.0 * math.pi) ** (-d) * _sphere_area(d) * t ** (-0.5 * d)

        def f(w):
            return w ** (d - 1) * math.exp(-0.5 * w * w) * (1.0 + w * w / t) ** (
                -0.5 * kern.nu
            )

        val, _ = integrate.quad(f, 0.0, 40.0, **_QUAD_OPTS)
        return pref * val
    raise ConfigError(f"unknown kernel variant: {v!r}")


# -- h(t) for the heat propagator -------------------------------------------------


def _h_heat_closed(kern: CorrelationKernel, t: float) -> float | None:
    v, d = kern.variant, kern.d
    if v == WHITE and d == 1:
        return math.sqrt(t / math.pi)
    if v == CONSTANT:
        return t
    if v == RIESZ:
        a = kern.alpha
        c = 2.0 ** (1.0 - a) * _gamma(0.5 * (d - a)) / ((2.0 - a) * _gamma(0.5 * d))
        return c * t ** (1.0 - 0.5 * a)
    if v == OU and kern.alpha == 2.0:
        if d == 1:
            return 0.5 * (math.sqrt(1.0 + 4.0 * t) - 1.0)
        if d == 2:
            return 0.25 * math.log(1.0 + 4.0 * t)
        return (1.0 - (1.0 + 4.0 * t) ** (1.0 - 0.5 * d)) / (2.0 * (d - 2.0))
    return None


def h_heat(kern: CorrelationKernel, t: float, method: str = "auto") -> float:
    """Noise functional ``h(t) = (1/2) Integral_0^{2t} k(s) ds`` for the heat flow."""
    if t < 0.0:
        raise DomainError(f"h_heat needs t >= 0, got {t}")
    check = dalang_check(kern)
    if not check.ok:
        raise NumericsError(
            f"noise condition fails for {kern.variant} kernel in d={kern.d}; "
            "h(t) diverges"
        )
    if t == 0.0:
        return 0.0
    if method not in ("auto", "closed", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    closed = _h_heat_closed(kern, t)
    if method == "closed" and closed is None:
        raise DomainError(f"no closed h_heat for {kern.variant} kernel")
    if closed is not None and method != "quadrature":
        return closed

    # h(t) = Integral_0^t k(2s) ds; substitute s = w^2 to absorb the
    # integrable singularity of k at 0.
    def f(w):
        return 2.0 * w * k_eval(kern, 2.0 * w * w)

    val, _ = integrate.quad(f, 0.0, math.sqrt(t), **_QUAD_OPTS)
    return val


# -- h(t) for the wave propagator (d = 1) ------------------------------------------


def k_wave(kern: CorrelationKernel, t: float) -> float:
    """Wave-smoothed kernel ``Integral G(t,z) f(z) dz = Integral_0^t f(w) dw``."""
    if kern.d != 1:
        raise ConfigError("wave functionals are supported in d=1 only")
    if t <= 0.0:
        raise DomainError(f"k_wave needs t > 0, got {t}")
    v = kern.variant
    if v == WHITE:
        return 0.5
    if v == CONSTANT:
        return t
    if v == RIESZ:
        if kern.alpha >= 1.0:
            raise NumericsError("wave functionals need riesz alpha < 1 in d=1")
        return t ** (1.0 - kern.alpha) / (1.0 - kern.alpha)
    if v in (OU, BESSEL_SPECTRAL):
        pts = [p for p in (1.0, 10.0, 100.0, 1000.0) if p < t] or None
        val, _ = integrate.quad(
            lambda w: point_eval(kern, w), 0.0, t, points=pts, **_QUAD_OPTS
        )
        return val
    if v == BESSEL_POTENTIAL:
        # (1/pi) Integral_0^inf sin(t xi)/xi (1+xi^2)^{-nu/2} dxi.
        # Split off the flat part (the sine integral Si(t), exact) so the
        # remaining integrands are smooth/bounded for the oscillatory rules.
        from scipy.special import sici

        wfun = lambda xi: (1.0 + xi * xi) ** (-0.5 * kern.nu)  # noqa: E731
        si_part = sici(t)[0]
        head, _ = integrate.quad(
            lambda xi: (wfun(xi) - 1.0) / xi if xi > 0 else 0.0,
            0.0,
            1.0,
            weight="sin",
            wvar=t,
            limit=400,
        )
        tail, _ = integrate.quad(
            lambda xi: wfun(xi) / xi,
            1.0,
            np.inf,
            weight="sin",
            wvar=t,
            limit=400,
        )
        return (si_part + head + tail) / math.pi
    raise ConfigError(f"unknown kernel variant: {v!r}")


def _wave_q(kern: CorrelationKernel, s: float) -> float:
    """Double space integral ``Integral G(s,.) G(s,.) f`` at time ``s``."""
    v = kern.variant
    if v == WHITE:
        return 0.5 * s
    if v == CONSTANT:
        return s * s
    if v in (OU, BESSEL_SPECTRAL):
        # (1/2) Integral_0^{2s} (2s - w) f(w) dw; breakpoint hints keep the
        # adaptive rule efficient when 2s is huge and f concentrates near 0.
        y = 2.0 * s
        pts = [p for p in (1.0, 10.0, 100.0, 1000.0) if p < y] or None
        val, _ = integrate.quad(
            lambda w: (y - w) * point_eval(kern, w),
            0.0,
            y,
            points=pts,
            **_QUAD_OPTS,
        )
        return 0.5 * val
    if v == BESSEL_POTENTIAL:
        # (2 pi)^{-1} Integral sin^2(s xi)/xi^2 w(xi) dxi. Split off the
        # flat-spectrum part (= s/2 exactly) so the remainder integrand
        # g = (w-1)/xi^2 is bounded and absolutely integrable.
        nu = kern.nu

        def g(xi):
            if xi == 0.0:
                return -0.5 * nu
            return ((1.0 + xi * xi) ** (-0.5 * nu) - 1.0) / (xi * xi)

        flat = 0.5 * s
        base, _ = integrate.quad(g, 0.0, np.inf, **_QUAD_OPTS)
        head, _ = integrate.quad(
            g, 0.0, 1.0, weight="cos", wvar=2.0 * s, limit=400
        )
        tail, _ = integrate.quad(
            g, 1.0, np.inf, weight="cos", wvar=2.0 * s, limit=400
        )
        # sin^2 = (1 - cos)/2: remainder = (base - cos-part)/2, all over pi
        return flat + (base - head - tail) / (2.0 * math.pi)
    raise ConfigError(f"unknown kernel variant: {v!r}")


def h_wave(kern: CorrelationKernel, t: float) -> float:
    """Wave analogue of ``h``: the iterated integral of ``G G f`` up to ``t``."""
    if kern.d != 1:
        raise ConfigError("h_wave is supported in d=1 only")
    if t < 0.0:
        raise DomainError(f"h_wave needs t >= 0, got {t}")
    if t == 0.0:
        return 0.0
    v = kern.variant
    if v == WHITE:
        return 0.25 * t * t
    if v == CONSTANT:
        return t**3 / 3.0
    if v == RIESZ:
        a = kern.alpha
        if a >= 1.0:
            raise NumericsError("wave functionals need riesz alpha < 1 in d=1")
        c = 2.0 ** (1.0 - a) / ((1.0 - a) * (2.0 - a) * (3.0 - a))
        return c * t ** (3.0 - a)
    val, _ = integrate.quad(lambda s: _wave_q(kern, s), 0.0, t, **_QUAD_OPTS)
    return val


# -- Gaussian factorization self-test ----------------------------------------------


def heat_factorization_check(t: float, s: float, a: float, b: float) -> float:
    """Relative residual of the two-kernel factorization identity (d = 1).

    ``p_{t-s}(a) p_s(b) = p_{s(t-s)/t}(b - (s/t)(a+b)) p_t(a+b)``.
    """
    if not 0.0 < s < t:
        raise DomainError(f"needs 0 < s < t, got s={s}, t={t}")
    lhs = gaussian_kernel(t - s, a) * gaussian_kernel(s, b)
    rhs = gaussian_kernel(s * (t - s) / t, b - (s / t) * (a + b)) * gaussian_kernel(
        t, a + b
    )
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
