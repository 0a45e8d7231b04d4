"""Monte Carlo simulation of the 1-D stochastic heat and wave equations.

Periodic grid of ``n`` cells on ``[-L, L)``. The heat field advances by a
semi-implicit Euler-Maruyama step (implicit semigroup via the trapezoidal
circulant map, noise explicit) or a fully explicit step; the wave pair
``(u, du/dt)`` advances by leapfrog with the noise injected into the
velocity. Spatial noise is white, rank-one constant, or a stationary
colored field synthesized by circulant embedding of the periodic cell
covariance.

Paths are independent work units: path ``i`` draws from a counter-based
stream keyed by ``(seed, i)``, so ensembles are bit-identical for a given
``(config, seed)`` regardless of thread count or internal block sizes.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .bounds import InitialCondition
from .diffusion import DiffusionCoefficient
from .errors import ConfigError, NumericsError
from .kernels import (
    BESSEL_SPECTRAL,
    CONSTANT,
    OU,
    RIESZ,
    WHITE,
    CorrelationKernel,
    point_eval,
)

HEAT = "heat"
WAVE = "wave"

HOLDER_LAGS = (1, 2, 4, 8, 16, 32)

_ALIGN_RTOL = 1e-9
_SAMPLABLE = (WHITE, CONSTANT, RIESZ, OU, BESSEL_SPECTRAL)

SNAPSHOT_MAGIC = b"SSPD"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


def _is_multiple(t: float, dt: float) -> bool:
    k = round(t / dt)
    return k >= 0 and abs(k * dt - t) <= _ALIGN_RTOL * max(abs(t), dt)


@dataclass(frozen=True)
class SimulationConfig:
    """Full description of one ensemble run.

    ``clip=None`` resolves to the positivity rule: clip exactly when the
    coefficient is non-Lipschitz at zero (``|u|^a`` with ``a in (0,1)``,
    bare or log-perturbed). ``stepper`` selects the heat scheme; the wave
    equation always uses leapfrog.
    """

    equation: str
    L: float
    n: int
    dt: float
    T: float
    snapshots: tuple[float, ...]
    n_paths: int
    seed: int
    kern: CorrelationKernel
    coeff: DiffusionCoefficient
    init: InitialCondition
    init_velocity: InitialCondition | None = None
    clip: bool | None = None
    stepper: str = "implicit"
    sup_radii: tuple[float, ...] = ()
    threads: int = 1
    backend: str | None = None
    dump_path_zero: bool = False

    def __post_init__(self) -> None:
        if self.equation not in (HEAT, WAVE):
            raise ConfigError(f"equation must be heat or wave, got {self.equation!r}")
        if self.n < 8 or int(self.n) != self.n:
            raise ConfigError(f"grid size must be an integer >= 8, got {self.n}")
        if self.L <= 0.0 or self.dt <= 0.0 or self.T <= 0.0:
            raise ConfigError("L, dt and T must be positive")
        if self.n_paths < 1:
            raise ConfigError(f"need at least one path, got {self.n_paths}")
        if self.stepper not in ("implicit", "explicit"):
            raise ConfigError(f"stepper must be implicit or explicit, got {self.stepper!r}")
        if not self.snapshots:
            raise ConfigError("empty grid: need at least one snapshot time")
        if not _is_multiple(self.T, self.dt):
            raise ConfigError(f"horizon T={self.T} is not a multiple of dt={self.dt}")
        prev = 0.0
        for t in self.snapshots:
            if t <= prev:
                raise ConfigError("snapshot times must be strictly increasing and positive")
            if t > self.T * (1.0 + _ALIGN_RTOL):
                raise ConfigError(f"snapshot {t} beyond horizon {self.T}")
            if not _is_multiple(t, self.dt):
                raise ConfigError(f"snapshot {t} is not a multiple of dt={self.dt}")
            prev = t
        dx = self.dx
        if self.equation == HEAT and self.stepper == "explicit":
            if self.dt > 0.5 * dx * dx * (1.0 + 1e-12):
                raise ConfigError(
                    f"explicit heat stepper needs dt <= dx^2/2 = {0.5 * dx * dx:.3g}, got {self.dt}"
                )
        if self.equation == WAVE and self.dt > dx * (1.0 + 1e-12):
            raise ConfigError(f"wave stepper needs dt <= dx = {dx:.3g}, got {self.dt}")
        for r in self.sup_radii:
            if not 0.0 < r <= self.L:
                raise ConfigError(f"sup radius {r} outside (0, L]")
        if self.kern.d != 1:
            raise ConfigError("simulation is one-dimensional; kernel must have d=1")
        if self.kern.variant not in _SAMPLABLE:
            raise ConfigError(f"kernel {self.kern.variant!r} does not admit d=1 sampling")
        if self.kern.variant == RIESZ and self.kern.alpha >= 1.0:
            raise ConfigError("riesz sampling in d=1 needs alpha < 1 (locally integrable covariance)")
        if self.equation == HEAT and self.L < 5.0 * math.sqrt(self.T):
            warnings.warn(
                f"L={self.L} < 5*sqrt(T)={5.0 * math.sqrt(self.T):.3g}: "
                "periodic wrap-around may bias heat statistics",
                stacklevel=2,
            )
        if self.equation == WAVE and self.T > self.L:
            warnings.warn(
                f"T={self.T} > L={self.L}: wave influence wraps around the periodic domain",
                stacklevel=2,
            )

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def effective_clip(self) -> bool:
        if self.clip is not None:
            return self.clip
        coeff = self.coeff
        if coeff.family == "ratio-power":
            return coeff.r == 0.0 and 0.0 < coeff.alpha < 1.0
        if coeff.family == "log-perturbed":
            return 0.0 < coeff.alpha < 1.0
        return False

    def grid(self) -> np.ndarray:
        """Cell centers ``x_j = (j - n//2) dx``; the origin is cell ``n//2``."""
        return (np.arange(self.n) - self.n // 2) * self.dx

    def snapshot_steps(self) -> tuple[int, ...]:
        return tuple(round(t / self.dt) for t in self.snapshots)

    def to_config(self) -> dict:
        cfg = {
            "equation": self.equation,
            "L": self.L,
            "n": self.n,
            "dt": self.dt,
            "T": self.T,
            "snapshots": list(self.snapshots),
            "n_paths": self.n_paths,
            "seed": self.seed,
            "kernel": self.kern.to_config(),
            "coeff": self.coeff.to_config(),
            "init": self.init.to_config(),
            "clip": self.clip,
            "stepper": self.stepper,
            "sup_radii": list(self.sup_radii),
        }
        if self.init_velocity is not None:
            cfg["init_velocity"] = self.init_velocity.to_config()
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "SimulationConfig":
        vel = cfg.get("init_velocity")
        return SimulationConfig(
            equation=cfg["equation"],
            L=float(cfg["L"]),
            n=int(cfg["n"]),
            dt=float(cfg["dt"]),
            T=float(cfg["T"]),
            snapshots=tuple(float(t) for t in cfg["snapshots"]),
            n_paths=int(cfg["n_paths"]),
            seed=int(cfg["seed"]),
            kern=CorrelationKernel.from_config(cfg["kernel"]),
            coeff=DiffusionCoefficient.from_config(cfg["coeff"]),
            init=InitialCondition.from_config(cfg["init"]),
            init_velocity=None if vel is None else InitialCondition.from_config(vel),
            clip=cfg.get("clip"),
            stepper=cfg.get("stepper", "implicit"),
            sup_radii=tuple(float(r) for r in cfg.get("sup_radii", ())),
        )


# -- initial data on the grid -------------------------------------------------


def initial_field(init: InitialCondition, x: np.ndarray, dx: float) -> np.ndarray:
    """Grid representation of the initial measure (cell averages).

    The Dirac mass becomes ``mass/dx`` in the origin cell; the power-law
    density's singular cell gets its exact cell average.
    """
    n = x.size
    center = n // 2
    if init.variant == "constant":
        return np.full(n, float(init.c))
    if init.variant == "dirac":
        u = np.zeros(n)
        u[center] = init.mass / dx
        return u
    if init.variant == "power-law":
        ell = init.ell
        if ell >= 1.0:
            raise ConfigError(f"power-law init needs ell < 1 on a grid, got {ell}")
        with np.errstate(divide="ignore"):
            u = np.abs(x) ** (-ell)
        u[center] = (dx / 2.0) ** (-ell) / (1.0 - ell)
        return u
    if init.variant == "exponential":
        return np.exp(init.ell * np.abs(x))
    if init.variant == "custom":
        return np.array([float(init.density(float(xi))) for xi in x])
    raise ConfigError(f"unknown initial variant: {init.variant!r}")


# -- noise synthesis ----------------------------------------------------------


_PERIODIZATION_IMAGES = 200


def cell_covariance_row(kern: CorrelationKernel, dx: float, n: int) -> np.ndarray:
    """First row of the periodic cell covariance (unit time).

    The Riesz row uses the exact double cell average (second difference
    of the twice-integrated kernel) at the folded arc distance, which is
    finite despite the pointwise singularity. Smooth kernels are
    point-sampled and periodized over mirror images; the image sum is
    what keeps the circulant spectrum nonnegative for slowly decaying
    covariances.
    """
    v = kern.variant
    if v == RIESZ:
        a = kern.alpha
        arcs = dx * np.minimum(np.arange(n), n - np.arange(n))

        def f2(r: np.ndarray) -> np.ndarray:
            return np.abs(r) ** (2.0 - a) / ((1.0 - a) * (2.0 - a))

        return (f2(arcs + dx) - 2.0 * f2(arcs) + f2(arcs - dx)) / (dx * dx)
    if v in (OU, BESSEL_SPECTRAL):
        if v == OU:
            al = kern.alpha

            def f(r: np.ndarray) -> np.ndarray:
                return np.exp(-(np.abs(r) ** al))

        else:
            nu = kern.nu

            def f(r: np.ndarray) -> np.ndarray:
                return (1.0 + r * r) ** (-nu / 2.0)

        pos = dx * np.arange(n)
        period = dx * n
        row = np.zeros(n)
        for m in range(-_PERIODIZATION_IMAGES, _PERIODIZATION_IMAGES + 1):
            row += f(pos + period * m)
        return row
    raise ConfigError(f"kernel {v!r} has no cell covariance row")


def _noise_spectrum(kern: CorrelationKernel, dx: float, dt: float, n: int) -> np.ndarray:
    """sqrt of the circulant eigenvalues of the dt-scaled cell covariance."""
    row = cell_covariance_row(kern, dx, n)
    lam = np.fft.rfft(row).real
    top = float(lam.max())
    if top <= 0.0 or np.any(lam < -1e-10 * top):
        raise NumericsError(
            "circulant embedding of the cell covariance produced a negative "
            "eigenvalue; double the grid size n"
        )
    return np.sqrt(dt * np.maximum(lam, 0.0))


class _NoiseSampler:
    """Draws (steps, n) blocks of spatial noise increments.

    The stream consumption per step is fixed (n normals, or 1 for the
    rank-one constant field), so segmentation into blocks never changes
    the sampled path.
    """

    def __init__(self, kern: CorrelationKernel, dx: float, dt: float, n: int):
        self.n = n
        self.variant = kern.variant
        if kern.variant == WHITE:
            self.scale = math.sqrt(dt / dx)
        elif kern.variant == CONSTANT:
            self.scale = math.sqrt(dt)
        else:
            self.spec_sqrt = _noise_spectrum(kern, dx, dt, n)

    def block(self, rng: np.random.Generator, steps: int) -> np.ndarray:
        if self.variant == WHITE:
            dw = rng.standard_normal((steps, self.n))
            dw *= self.scale
            return dw
        if self.variant == CONSTANT:
            shared = rng.standard_normal(steps) * self.scale
            return np.repeat(shared[:, None], self.n, axis=1)
        z = rng.standard_normal((steps, self.n))
        dw = np.fft.irfft(np.fft.rfft(z, axis=1) * self.spec_sqrt[None, :], self.n, axis=1)
        return np.ascontiguousarray(dw)


def sample_noise_increment(
    kern: CorrelationKernel,
    dx: float,
    dt: float,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One spatial noise slice with Cov(W_i, W_j) = dt * C_f(x_i - x_j)."""
    if kern.variant not in _SAMPLABLE:
        raise ConfigError(f"kernel {kern.variant!r} does not admit d=1 sampling")
    if kern.variant == RIESZ and kern.alpha >= 1.0:
        raise ConfigError("riesz sampling in d=1 needs alpha < 1")
    return _NoiseSampler(kern, dx, dt, n).block(rng, 1)[0]


# -- ensembles ----------------------------------------------------------------


@dataclass(frozen=True)
class PathEnsemble:
    """Per-path snapshot statistics of one simulation run.

    Arrays are indexed ``[path, snapshot, ...]``; rows of aborted paths
    hold NaN from the snapshot following the abort step onward, and the
    (path, step) pairs are listed in ``aborted``.
    """

    config: SimulationConfig
    center: np.ndarray
    space_mean_pows: np.ndarray
    sups: np.ndarray
    increments: np.ndarray
    field_min: np.ndarray
    aborted: tuple[tuple[int, int], ...]
    path_zero_fields: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.center.shape[0]

    def snapshot_index(self, t: float) -> int:
        for i, s in enumerate(self.config.snapshots):
            if abs(s - t) <= _ALIGN_RTOL * max(abs(t), 1.0):
                return i
        raise ConfigError(f"no snapshot at t={t}; have {self.config.snapshots}")


def _collect(
    out: dict,
    idx: int,
    si: int,
    u: np.ndarray,
    sup_slices: list[tuple[int, int]],
) -> None:
    n = u.size
    out["center"][idx, si] = u[n // 2]
    m = out["space_mean_pows"]
    m[idx, si, 0] = u.mean()
    u2 = u * u
    m[idx, si, 1] = u2.mean()
    m[idx, si, 2] = (u2 * u).mean()
    m[idx, si, 3] = (u2 * u2).mean()
    out["field_min"][idx, si] = u.min()
    for ri, (lo, hi) in enumerate(sup_slices):
        out["sups"][idx, si, ri] = u[lo:hi].max()
    for li, lag in enumerate(HOLDER_LAGS):
        d = u - np.roll(u, -lag)
        out["increments"][idx, si, li] = (d * d).mean()


def _make_stepper(cfg: SimulationConfig):
    if cfg.equation == HEAT:
        return _backend.make_heat_stepper(
            cfg.n,
            cfg.dx,
            cfg.dt,
            cfg.coeff,
            cfg.stepper == "implicit",
            cfg.effective_clip,
            backend=cfg.backend,
        )
    return _backend.make_wave_stepper(
        cfg.n, cfg.dx, cfg.dt, cfg.coeff, cfg.effective_clip, backend=cfg.backend
    )


def _run_chunk(
    cfg: SimulationConfig,
    sampler: _NoiseSampler,
    u0: np.ndarray,
    v0: np.ndarray | None,
    snap_steps: tuple[int, ...],
    sup_slices: list[tuple[int, int]],
    block_cap: int,
    paths: range,
    out: dict,
    aborted: list,
    dump: np.ndarray | None,
) -> None:
    stepper = _make_stepper(cfg)
    wave = cfg.equation == WAVE
    for idx in paths:
        rng = np.random.Generator(np.random.Philox(key=[cfg.seed, idx]))
        u = u0.copy()
        v = v0.copy() if wave else None
        pos = 0
        abort_step = -1
        for si, target in enumerate(snap_steps):
            if abort_step < 0:
                while pos < target:
                    b = min(target - pos, block_cap)
                    dw = sampler.block(rng, b)
                    r = stepper.run_block(u, v, dw) if wave else stepper.run_block(u, dw)
                    if r >= 0:
                        abort_step = pos + r
                        aborted.append((idx, abort_step))
                        break
                    pos += b
            if abort_step >= 0:
                out["center"][idx, si:] = np.nan
                out["space_mean_pows"][idx, si:] = np.nan
                out["field_min"][idx, si:] = np.nan
                out["sups"][idx, si:] = np.nan
                out["increments"][idx, si:] = np.nan
                break
            _collect(out, idx, si, u, sup_slices)
            if dump is not None and idx == 0:
                dump[si] = u


def _simulate(cfg: SimulationConfig) -> PathEnsemble:
    x = cfg.grid()
    u0 = initial_field(cfg.init, x, cfg.dx)
    v0 = None
    if cfg.equation == WAVE:
        vel = cfg.init_velocity
        v0 = np.zeros(cfg.n) if vel is None else initial_field(vel, x, cfg.dx)
    sampler = _NoiseSampler(cfg.kern, cfg.dx, cfg.dt, cfg.n)
    snap_steps = cfg.snapshot_steps()
    center = cfg.n // 2
    sup_slices = []
    for r in cfg.sup_radii:
        k = int(math.floor(r / cfg.dx + 1e-9))
        k = min(k, cfg.n // 2 - 1)
        sup_slices.append((center - k, center + k + 1))
    block_cap = max(1, (1 << 20) // cfg.n)

    npaths, S = cfg.n_paths, len(snap_steps)
    out = {
        "center": np.empty((npaths, S)),
        "space_mean_pows": np.empty((npaths, S, 4)),
        "sups": np.empty((npaths, S, len(sup_slices))),
        "increments": np.empty((npaths, S, len(HOLDER_LAGS))),
        "field_min": np.empty((npaths, S)),
    }
    dump = np.empty((S, cfg.n)) if cfg.dump_path_zero else None
    aborted: list[tuple[int, int]] = []

    chunks = [range(lo, min(lo + 128, npaths)) for lo in range(0, npaths, 128)]
    if cfg.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [
                pool.submit(
                    _run_chunk, cfg, sampler, u0, v0, snap_steps, sup_slices,
                    block_cap, ch, out, aborted, dump,
                )
                for ch in chunks
            ]
            for f in futures:
                f.result()
    else:
        for ch in chunks:
            _run_chunk(cfg, sampler, u0, v0, snap_steps, sup_slices, block_cap, ch, out, aborted, dump)

    return PathEnsemble(
        config=cfg,
        center=out["center"],
        space_mean_pows=out["space_mean_pows"],
        sups=out["sups"],
        increments=out["increments"],
        field_min=out["field_min"],
        aborted=tuple(sorted(aborted)),
        path_zero_fields=dump,
    )


def simulate_heat(cfg: SimulationConfig) -> PathEnsemble:
    """Run the heat ensemble described by ``cfg``."""
    if cfg.equation != HEAT:
        raise ConfigError(f"simulate_heat needs a heat config, got {cfg.equation!r}")
    return _simulate(cfg)


def simulate_wave(cfg: SimulationConfig) -> PathEnsemble:
    if cfg.equation != WAVE:
        raise ConfigError(f"simulate_wave needs a wave config, got {cfg.equation!r}")
    return _simulate(cfg)


# -- estimators ---------------------------------------------------------------


def _batch_stats(values: np.ndarray, strict: bool = False) -> tuple[float, float, int]:
    """Disjoint-batch mean and standard error, NaN rows excluded."""
    finite = values[np.isfinite(values)]
    count = finite.size
    if count == 0:
        return math.nan, math.nan, 0
    nb = min(20, count // 10)
    if nb < 2:
        if strict:
            raise ConfigError(f"fewer than 2 batches of paths available (count={count})")
        se = float(finite.std(ddof=1) / math.sqrt(count)) if count > 1 else math.nan
        return float(finite.mean()), se, count
    means = np.array([b.mean() for b in np.array_split(finite, nb)])
    return float(finite.mean()), float(means.std(ddof=1) / math.sqrt(nb)), count


@dataclass(frozen=True)
class MomentTable:
    """Batch-mean moment estimates plus a growth-exponent fit per power."""

    rows: tuple[dict, ...]
    fits: dict
    regime: str


def estimate_moments(ens: PathEnsemble, p_list, regime: str = "power") -> MomentTable:
    """Pointwise moments E[u(t,0)^p] with batch s.e. and a growth fit.

    The fit regresses log moment against log t (``regime="power"``) or
    against t (``regime="exponential"``). Non-integer powers use |u|^p.
    Aborted paths are excluded from the averages; the per-row ``count``
    column makes the exclusion visible.
    """
    if regime not in ("power", "exponential"):
        raise ConfigError(f"unknown moment regime {regime!r}")
    if not p_list:
        raise ConfigError("empty grid: no moment powers requested")
    snaps = ens.config.snapshots
    rows = []
    fits = {}
    for p in p_list:
        vals = []
        for si, t in enumerate(snaps):
            c = ens.center[:, si]
            powed = c**p if float(p).is_integer() else np.abs(c) ** p
            mean, se, count = _batch_stats(powed, strict=True)
            rows.append({"t": t, "p": p, "moment": mean, "se": se, "count": count})
            vals.append(mean)
        vals = np.asarray(vals)
        ts = np.asarray(snaps)
        good = np.isfinite(vals) & (vals > 0.0)
        if good.sum() >= 2:
            xs = np.log(ts[good]) if regime == "power" else ts[good]
            slope = float(np.polyfit(xs, np.log(vals[good]), 1)[0])
        else:
            slope = math.nan
        fits[p] = slope
    return MomentTable(rows=tuple(rows), fits=fits, regime=regime)


def wilson_interval(count: int, total: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if total <= 0:
        return (0.0, 1.0)
    phat = count / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (phat + z2 / (2.0 * total)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / total + z2 / (4.0 * total * total)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def estimate_tail(ens: PathEnsemble, t: float, z_grid) -> tuple[dict, ...]:
    """Exceedance table P(u(t,0) >= z) with Wilson intervals.

    Rows with fewer than 10 exceedances are flagged censored: the
    frequency is too coarse there to constrain the tail.
    """
    z_grid = list(z_grid)
    if not z_grid:
        raise ConfigError("empty grid: no tail levels requested")
    si = ens.snapshot_index(t)
    vals = ens.center[:, si]
    vals = vals[np.isfinite(vals)]
    total = vals.size
    rows = []
    for z in z_grid:
        count = int(np.sum(vals >= z))
        lo, hi = wilson_interval(count, total)
        rows.append(
            {
                "z": float(z),
                "count": count,
                "total": total,
                "p_hat": count / total if total else math.nan,
                "lo": lo,
                "hi": hi,
                "censored": count < 10,
            }
        )
    return tuple(rows)


def estimate_spatial_sup(ens: PathEnsemble, t: float, radii=None) -> tuple[dict, ...]:
    """Ensemble mean and quantiles of sup_{|x|<=R} u(t,x) per radius."""
    cfg = ens.config
    if radii is None:
        radii = cfg.sup_radii
    radii = list(radii)
    if not radii:
        raise ConfigError("empty grid: no sup radii requested")
    si = ens.snapshot_index(t)
    rows = []
    for r in radii:
        match = [i for i, rr in enumerate(cfg.sup_radii) if abs(rr - r) <= 1e-12 * max(r, 1.0)]
        if not match:
            raise ConfigError(f"radius {r} was not collected; config has {cfg.sup_radii}")
        s = ens.sups[:, si, match[0]]
        s = s[np.isfinite(s)]
        if s.size == 0:
            rows.append({"R": r, "mean_sup": math.nan, "median": math.nan, "q90": math.nan, "count": 0})
            continue
        rows.append(
            {
                "R": float(r),
                "mean_sup": float(s.mean()),
                "median": float(np.quantile(s, 0.5)),
                "q90": float(np.quantile(s, 0.9)),
                "count": int(s.size),
            }
        )
    return tuple(rows)


def estimate_holder(ens: PathEnsemble, t: float) -> float:
    """Spatial regularity exponent from increment scaling.

    Regresses log E|u(t,x+delta)-u(t,x)|^2 on log delta over the
    collected lags and returns half the slope (the exponent of the
    field itself, not of the squared increment).
    """
    si = ens.snapshot_index(t)
    dx = ens.config.dx
    deltas = []
    msd = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for li, lag in enumerate(HOLDER_LAGS):
            col = ens.increments[:, si, li]
            m = float(np.nanmean(col))
            if math.isfinite(m) and m > 0.0:
                deltas.append(lag * dx)
                msd.append(m)
    if len(msd) < 3:
        raise NumericsError(
            "insufficient lags with positive mean-square increments; "
            "the field shows no power-law spatial scaling"
        )
    slope = float(np.polyfit(np.log(deltas), np.log(msd), 1)[0])
    return slope / 2.0


# -- exports ------------------------------------------------------------------


def ensemble_rows(ens: PathEnsemble) -> list[dict]:
    """Flat per-statistic rows (one row per statistic, CSV-ready)."""
    rows = []
    cfg = ens.config
    for si, t in enumerate(cfg.snapshots):
        for p in (1, 2, 3, 4):
            mean, se, count = _batch_stats(ens.center[:, si] ** p)
            rows.append({"stat": "center_moment", "t": t, "key": p, "value": mean, "se": se, "count": count})
        for ri, r in enumerate(cfg.sup_radii):
            mean, se, count = _batch_stats(ens.sups[:, si, ri])
            rows.append({"stat": "sup", "t": t, "key": r, "value": mean, "se": se, "count": count})
        for li, lag in enumerate(HOLDER_LAGS):
            mean, se, count = _batch_stats(ens.increments[:, si, li])
            rows.append(
                {"stat": "increment_msd", "t": t, "key": lag * cfg.dx, "value": mean, "se": se, "count": count}
            )
        mn = ens.field_min[:, si]
        mn = mn[np.isfinite(mn)]
        rows.append(
            {
                "stat": "field_min",
                "t": t,
                "key": "",
                "value": float(mn.min()) if mn.size else math.nan,
                "se": math.nan,
                "count": int(mn.size),
            }
        )
    rows.append({"stat": "aborted", "t": math.nan, "key": "", "value": len(ens.aborted), "se": math.nan, "count": ens.n_paths})
    return rows


def write_ensemble_csv(path, ens: PathEnsemble) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["stat", "t", "key", "value", "se", "count"])
        w.writeheader()
        for row in ensemble_rows(ens):
            w.writerow(row)


def run_manifest(ens: PathEnsemble) -> dict:
    """Everything needed to reproduce the run byte-identically."""
    import numpy
    import scipy

    from . import __version__

    cfg = ens.config
    return {
        "config": cfg.to_config(),
        "effective_clip": cfg.effective_clip,
        "backend": _backend.default_backend() if cfg.backend is None else cfg.backend,
        "versions": {"sublin": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__},
        "aborted": [list(a) for a in ens.aborted],
    }


def write_manifest(path, ens: PathEnsemble) -> None:
    with open(path, "w") as fh:
        json.dump(run_manifest(ens), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_snapshots(path, ens: PathEnsemble) -> None:
    """Raw path-0 snapshot dump (little-endian float64 after the header)."""
    fields = ens.path_zero_fields
    if fields is None:
        raise ConfigError("run had dump_path_zero disabled; nothing to write")
    cfg = ens.config
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, cfg.n, fields.shape[0], cfg.dx, cfg.dt)
        )
        fh.write(np.ascontiguousarray(fields, dtype="<f8").tobytes())


def read_snapshots(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, version, n, n_snapshots, dx, dt = _HEADER.unpack(header)
        if magic != SNAPSHOT_MAGIC:
            raise ConfigError(f"not a snapshot dump (magic {magic!r})")
        if version != SNAPSHOT_VERSION:
            raise ConfigError(f"unsupported snapshot version {version}")
        data = np.frombuffer(fh.read(8 * n * n_snapshots), dtype="<f8").reshape(n_snapshots, n)
    meta = {"version": version, "n": n, "n_snapshots": n_snapshots, "dx": dx, "dt": dt}
    return meta, data.astype(float)
