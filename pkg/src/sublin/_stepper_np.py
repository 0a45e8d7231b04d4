"""Pure-Python stepping kernels (reference backend).

The compiled backend in ``_core`` mirrors these updates with identical
operation order, so the explicit heat and wave leapfrog schemes produce
bit-identical fields on both backends; the semi-implicit heat step applies
the same circulant linear map through an FFT here and a cyclic tridiagonal
solve there (equal to roundoff).
"""

from __future__ import annotations

import math

import numpy as np

RHO_RATIO_POWER = 0
RHO_LOG_PERTURBED = 1
RHO_ITERATED_LOG = 2
RHO_CUSTOM = 3

_FAMILY_CODES = {
    "ratio-power": RHO_RATIO_POWER,
    "log-perturbed": RHO_LOG_PERTURBED,
    "iterated-log": RHO_ITERATED_LOG,
    "custom": RHO_CUSTOM,
}


def family_code(name: str) -> int:
    return _FAMILY_CODES[name]


class HeatStepper:
    """Semi-implicit (spectral) or explicit Euler-Maruyama heat stepping.

    ``rho`` is a vectorized evaluator ``u -> rho(u)`` (the diffusion
    module's array path, so family semantics live in one place).
    """

    backend = "python"

    def __init__(self, n, dx, dt, rho, implicit: bool, clip: bool):
        self.n = n
        self.dt = dt
        self.rho = rho
        self.implicit = implicit
        self.clip = clip
        self.half_r = dt / (2.0 * dx * dx)
        if implicit:
            theta = 2.0 * math.pi * np.arange(n // 2 + 1) / n
            self.inv_symbol = 1.0 / (1.0 + (dt / (dx * dx)) * (1.0 - np.cos(theta)))

    def run_block(self, u: np.ndarray, dw: np.ndarray) -> int:
        """Advance ``u`` in place through the rows of ``dw``.

        Returns -1 on success, else the 0-based row index at which a
        non-finite value first appeared.
        """
        rho = self.rho
        # overflow here is not an error: it is what the abort check detects
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(dw.shape[0]):
                arg = np.maximum(u, 0.0) if self.clip else u
                noise = rho(arg) * dw[m]
                if self.implicit:
                    un = np.fft.irfft(np.fft.rfft(u) * self.inv_symbol, self.n) + noise
                else:
                    lap = (np.roll(u, 1) + np.roll(u, -1)) - 2.0 * u
                    un = (u + self.half_r * lap) + noise
                if self.clip:
                    un = np.maximum(un, 0.0)
                if not np.isfinite(un).all():
                    return m
                u[:] = un
        return -1


class WaveStepper:
    """Leapfrog stepping of (u, du/dt) with noise in the velocity."""

    backend = "python"

    def __init__(self, n, dx, dt, rho, clip: bool):
        self.n = n
        self.dt = dt
        self.rho = rho
        self.clip = clip
        self.cw = dt / (dx * dx)

    def run_block(self, u: np.ndarray, v: np.ndarray, dw: np.ndarray) -> int:
        rho = self.rho
        dt = self.dt
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(dw.shape[0]):
                arg = np.maximum(u, 0.0) if self.clip else u
                lap = (np.roll(u, 1) + np.roll(u, -1)) - 2.0 * u
                vn = (v + self.cw * lap) + rho(arg) * dw[m]
                un = u + dt * vn
                if not (np.isfinite(un).all() and np.isfinite(vn).all()):
                    return m
                u[:] = un
                v[:] = vn
        return -1
