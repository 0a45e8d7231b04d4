"""Stepping-backend selection.

The compiled core is preferred when the extension built; the numpy
reference implementation is the fallback. ``SUBLIN_BACKEND=python`` or
``=compiled`` forces a choice (the latter raises if the extension is
missing). Custom diffusion coefficients always run on the python backend
because the compiled kernels only know the built-in family formulas.
"""

from __future__ import annotations

import os
from typing import Callable

from . import _stepper_np
from .diffusion import DiffusionCoefficient
from .errors import ConfigError

try:
    from . import _core
except ImportError:  # pragma: no cover - depends on the build environment
    _core = None

_FORCED = os.environ.get("SUBLIN_BACKEND", "").strip().lower()


def available_backends() -> tuple[str, ...]:
    """Names of the stepping backends usable in this process."""
    if _core is not None:
        return ("compiled", "python")
    return ("python",)


def default_backend() -> str:
    if _FORCED in ("python", "compiled"):
        if _FORCED == "compiled" and _core is None:
            raise ConfigError(
                "SUBLIN_BACKEND=compiled but the extension is not available"
            )
        return _FORCED
    return "compiled" if _core is not None else "python"


def _resolve(coeff: DiffusionCoefficient, backend: str | None) -> str:
    name = backend or default_backend()
    if name not in ("python", "compiled"):
        raise ConfigError(f"unknown backend {name!r}")
    if name == "compiled":
        if _core is None:
            raise ConfigError("compiled backend requested but not available")
        if coeff.family == "custom":
            name = "python"  # compiled kernels cover built-in families only
    return name


def _rho_params(coeff: DiffusionCoefficient) -> tuple[int, float, float, float, float]:
    code = _stepper_np.family_code(coeff.family)
    return (
        code,
        float(coeff.alpha),
        float(coeff.beta),
        float(coeff.kappa),
        float(coeff.r),
    )


def _rho_callable(coeff: DiffusionCoefficient) -> Callable:
    return coeff


def make_heat_stepper(
    n: int,
    dx: float,
    dt: float,
    coeff: DiffusionCoefficient,
    implicit: bool,
    clip: bool,
    backend: str | None = None,
):
    """Build a heat-equation stepper on the requested (or default) backend."""
    name = _resolve(coeff, backend)
    if name == "compiled":
        return _core.HeatStepper(n, dx, dt, _rho_params(coeff), implicit, clip)
    return _stepper_np.HeatStepper(n, dx, dt, _rho_callable(coeff), implicit, clip)


def make_wave_stepper(
    n: int,
    dx: float,
    dt: float,
    coeff: DiffusionCoefficient,
    clip: bool,
    backend: str | None = None,
):
    name = _resolve(coeff, backend)
    if name == "compiled":
        return _core.WaveStepper(n, dx, dt, _rho_params(coeff), clip)
    return _stepper_np.WaveStepper(n, dx, dt, _rho_callable(coeff), clip)
