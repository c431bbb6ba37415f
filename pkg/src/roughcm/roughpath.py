"""Gaussian driving paths and their rough path lifts in one dimension.

A :class:`RoughPath` keeps the sampled values and the cumulative area of a
single master sample.  Shifting only moves the time origin, so every shifted
copy reads the very same numbers and the shift identities hold bit for bit.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

CHOLESKY_MAX_POINTS = 2 ** 12
_GRID_EPS = 1e-9


class ParameterError(ValueError):
    pass


class GridLookupError(KeyError):
    pass


def holder_lags(n_steps: int, mode: str = "auto") -> np.ndarray:
    """Lags (in grid steps) visited when taking a supremum over grid pairs.

    ``exhaustive`` visits every pair, ``dyadic`` only lags 1, 2, 4, ...;
    ``auto`` switches to dyadic above 256 steps.
    """
    if mode == "auto":
        mode = "exhaustive" if n_steps <= 256 else "dyadic"
    if mode == "exhaustive":
        return np.arange(1, n_steps + 1)
    if mode == "dyadic":
        lags = 2 ** np.arange(int(math.floor(math.log2(max(n_steps, 1)))) + 1)
        return lags[lags <= n_steps]
    raise ParameterError(f"unknown pair mode {mode!r}")


@dataclass(frozen=True)
class SampledPath:
    """Scalar path on a uniform grid; ``times[0]`` is the origin offset."""

    times: np.ndarray
    values: np.ndarray
    step: float

    @property
    def origin_offset(self) -> float:
        return float(self.times[0])

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class HolderStats:
    w_gamma: float
    ww_2gamma: float
    rho: float


def _fgn_autocov(hurst: float, n: int, step: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    two_h = 2.0 * hurst
    g = 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k ** two_h + np.abs(k - 1) ** two_h)
    return g * step ** two_h


@functools.lru_cache(maxsize=8)
def _cholesky_factor(hurst: float, n: int, step: float) -> np.ndarray:
    cov = scipy.linalg.toeplitz(_fgn_autocov(hurst, n, step)[:n])
    return np.linalg.cholesky(cov)


@functools.lru_cache(maxsize=8)
def _circulant_sqrt_eigs(hurst: float, n: int, step: float) -> np.ndarray:
    g = _fgn_autocov(hurst, n, step)
    row = np.concatenate([g[: n + 1], g[n - 1 : 0 : -1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        raise ParameterError("circulant embedding is not nonnegative definite")
    return np.sqrt(np.clip(eig, 0.0, None) / len(row))


def _fgn(hurst: float, n: int, step: float, rng: np.random.Generator) -> np.ndarray:
    if n + 1 <= CHOLESKY_MAX_POINTS:
        return _cholesky_factor(hurst, n, step) @ rng.standard_normal(n)
    lam = _circulant_sqrt_eigs(hurst, n, step)
    m = len(lam)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return np.fft.fft(lam * z)[:n].real


def uniform_grid(start: float, end: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ParameterError("step must be positive")
    if end <= start:
        raise ParameterError("grid_end must exceed grid_start")
    n = int(round((end - start) / step))
    if abs(n * step - (end - start)) > _GRID_EPS * max(1.0, abs(end - start)):
        raise ParameterError("step does not divide the interval")
    return start + step * np.arange(n + 1)


def sample_gaussian_path(hurst: float, grid_start: float, grid_end: float,
                         step: float, seed: int) -> SampledPath:
    """Draw one fractional Brownian motion sample, pinned to zero at time 0.

    Increments are exact fractional Gaussian noise: a Cholesky factor for
    grids up to 2**12 points and circulant embedding beyond.  If 0 is not a
    grid time the path starts at zero instead.
    """
    if not (1.0 / 3.0 < hurst <= 0.5):
        raise ParameterError("hurst must lie in (1/3, 1/2]")
    times = uniform_grid(grid_start, grid_end, step)
    n = len(times) - 1
    rng = np.random.default_rng(seed)
    values = np.concatenate([[0.0], np.cumsum(_fgn(hurst, n, step, rng))])
    zero = np.flatnonzero(np.abs(times) < _GRID_EPS * step)
    if zero.size:
        values = values - values[zero[0]]
        values[zero[0]] = 0.0
    return SampledPath(times=times, values=values, step=float(step))


@dataclass(frozen=True)
class RoughPath:
    """Grid rough path (W, WW) with Hölder exponent ``gamma``.

    ``values`` and ``step_area`` belong to the master sample; ``t0`` is the
    time attached to master index 0.  ``area`` for a grid pair is assembled
    from the cumulative area by Chen's relation.
    """

    values: np.ndarray
    step_area: np.ndarray
    step: float
    t0: float
    gamma: float
    cum_area: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.cum_area is None:
            dw = np.diff(self.values)
            rel = self.values[:-1] - self.values[0]
            cum = np.concatenate([[0.0], np.cumsum(self.step_area + rel * dw)])
            object.__setattr__(self, "cum_area", cum)

    # grid bookkeeping
    @property
    def n_points(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.n_points)

    @property
    def t_start(self) -> float:
        return self.t0

    @property
    def t_end(self) -> float:
        return self.t0 + self.step * (self.n_points - 1)

    def index(self, t: float) -> int:
        x = (t - self.t0) / self.step
        k = int(round(x))
        if abs(x - k) > 1e-7:
            raise GridLookupError(f"time {t} is not on the grid")
        if k < 0 or k >= self.n_points:
            raise GridLookupError(f"time {t} is outside the sampled range")
        return k

    # increments
    def increment(self, s: float, t: float) -> float:
        return float(self.values[self.index(t)] - self.values[self.index(s)])

    def _area_idx(self, i, j):
        v, q = self.values, self.cum_area
        return q[j] - q[i] - (v[i] - v[0]) * (v[j] - v[i])

    def area(self, s: float, t: float) -> float:
        i, j = self.index(s), self.index(t)
        if j < i:
            raise GridLookupError("area needs s <= t")
        return float(self._area_idx(i, j))

    def value(self, t: float) -> float:
        """Path value relative to this path's own time origin."""
        return float(self.values[self.index(t)] - self.values[self.index(0.0)])

    def window(self, s: float, t: float):
        """Values, per-step increments and per-step areas on [s, t]."""
        i, j = self.index(s), self.index(t)
        w = self.values[i : j + 1]
        return w, np.diff(w), self.step_area[i:j]

    def sampled(self) -> SampledPath:
        origin = self.index(0.0) if self.t_start <= 0.0 <= self.t_end else 0
        return SampledPath(times=self.times, values=self.values - self.values[origin],
                           step=self.step)

    def with_step_area(self, k: int, delta: float) -> "RoughPath":
        """Copy with the area of step ``k`` perturbed by ``delta``."""
        area = self.step_area.copy()
        area[k] += delta
        return RoughPath(self.values, area, self.step, self.t0, self.gamma)


def lift_piecewise_linear(path: SampledPath, gamma: float) -> RoughPath:
    """Geometric lift of the piecewise-linear interpolant of ``path``."""
    if len(path) < 2:
        raise ParameterError("a lift needs at least two grid points")
    if not (1.0 / 3.0 < gamma <= 0.5):
        raise ParameterError("gamma must lie in (1/3, 1/2]")
    dw = np.diff(path.values)
    return RoughPath(values=np.asarray(path.values, dtype=float),
                     step_area=0.5 * dw * dw, step=path.step,
                     t0=path.origin_offset, gamma=gamma)


def zero_path(t_start: float, t_end: float, step: float, gamma: float = 0.5) -> RoughPath:
    times = uniform_grid(t_start, t_end, step)
    return lift_piecewise_linear(SampledPath(times, np.zeros_like(times), step), gamma)


def linear_path(t_start: float, t_end: float, step: float, gamma: float = 0.5) -> RoughPath:
    """Lift of the smooth path W_t = t."""
    times = uniform_grid(t_start, t_end, step)
    return lift_piecewise_linear(SampledPath(times, times.copy(), step), gamma)


def chen_defect(rp: RoughPath, s: float, u: float, t: float) -> float:
    i, k, j = rp.index(s), rp.index(u), rp.index(t)
    if not i <= k <= j:
        raise GridLookupError("chen_defect needs s <= u <= t")
    v = rp.values
    d = rp._area_idx(i, j) - rp._area_idx(i, k) - rp._area_idx(k, j) - (v[k] - v[i]) * (v[j] - v[k])
    return float(abs(d))


def chen_defects(rp: RoughPath, idx: np.ndarray) -> np.ndarray:
    """Vectorized Chen defects for master index triples of shape (m, 3)."""
    i, k, j = idx[:, 0], idx[:, 1], idx[:, 2]
    v = rp.values
    d = rp._area_idx(i, j) - rp._area_idx(i, k) - rp._area_idx(k, j) - (v[k] - v[i]) * (v[j] - v[k])
    return np.abs(d)


def area_identity_defect(rp: RoughPath, s: float | None = None, t: float | None = None,
                         mode: str = "auto") -> float:
    """Largest |WW_{a,b} - W_{a,b}^2 / 2| over grid pairs in [s, t]."""
    i = 0 if s is None else rp.index(s)
    j = rp.n_points - 1 if t is None else rp.index(t)
    worst = 0.0
    for lag in holder_lags(j - i, mode):
        a = np.arange(i, j - lag + 1)
        b = a + lag
        dw = rp.values[b] - rp.values[a]
        worst = max(worst, float(np.max(np.abs(rp._area_idx(a, b) - 0.5 * dw * dw))))
    return worst


def _pair_sup(rp_a: RoughPath, rp_b: RoughPath | None, i: int, j: int, gamma: float,
              mode: str) -> tuple[float, float]:
    sup1 = sup2 = 0.0
    h = rp_a.step
    for lag in holder_lags(j - i, mode):
        a = np.arange(i, j - lag + 1)
        b = a + lag
        dw = rp_a.values[b] - rp_a.values[a]
        dww = rp_a._area_idx(a, b)
        if rp_b is not None:
            shift = rp_b.index(rp_a.t0 + i * h) - i
            dw = dw - (rp_b.values[b + shift] - rp_b.values[a + shift])
            dww = dww - rp_b._area_idx(a + shift, b + shift)
        dt = lag * h
        sup1 = max(sup1, float(np.max(np.abs(dw))) / dt ** gamma)
        sup2 = max(sup2, float(np.max(np.abs(dww))) / dt ** (2 * gamma))
    return sup1, sup2


def holder_seminorms(rp: RoughPath, interval: tuple[float, float] | None = None,
                     mode: str = "auto") -> HolderStats:
    """Grid Hölder seminorms of W and WW and their sum rho."""
    s, t = interval if interval is not None else (rp.t_start, rp.t_end)
    w, ww = _pair_sup(rp, None, rp.index(s), rp.index(t), rp.gamma, mode)
    return HolderStats(w_gamma=w, ww_2gamma=ww, rho=w + ww)


def rough_distance(a: RoughPath, b: RoughPath | None, interval: tuple[float, float],
                   mode: str = "auto") -> float:
    """Inhomogeneous Hölder rough path distance on ``interval``.

    ``b=None`` stands for the zero rough path.
    """
    if b is not None:
        if abs(a.step - b.step) > 1e-15 or a.gamma != b.gamma:
            raise ParameterError("rough paths do not share a grid")
        b.index(interval[0]), b.index(interval[1])
    w, ww = _pair_sup(a, b, a.index(interval[0]), a.index(interval[1]), a.gamma, mode)
    return w + ww


def shift(rp: RoughPath, tau: float) -> RoughPath:
    """Time shift: (shifted)_t = W_{t+tau} - W_tau, with areas read unchanged."""
    rp.index(tau)
    return RoughPath(rp.values, rp.step_area, rp.step, rp.t0 - tau, rp.gamma, rp.cum_area)


def temperedness_diagnostic(norm_of_shift, taus) -> float:
    """max over |tau| >= T/2 of ln+(R(tau)) / |tau|, with T = max |tau|."""
    taus = np.asarray(list(taus), dtype=float)
    if taus.size == 0:
        raise ParameterError("taus is empty")
    big = np.max(np.abs(taus))
    best = 0.0
    for tau in taus[np.abs(taus) >= 0.5 * big]:
        if tau == 0:
            continue
        r = float(norm_of_shift(tau))
        best = max(best, max(math.log(r), 0.0) / abs(tau) if r > 0 else 0.0)
    return best


def write_path_csv(rp: RoughPath, fname) -> None:
    """CSV with columns time, w, ww_step (area of the step starting there)."""
    sp = rp.sampled()
    with open(fname, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["time", "w", "ww_step"])
        for k, (t, w) in enumerate(zip(sp.times, sp.values)):
            a = format(rp.step_area[k], ".17g") if k < len(rp.step_area) else ""
            out.writerow([format(t, ".17g"), format(w, ".17g"), a])


def read_path_csv(fname, gamma: float) -> RoughPath:
    times, vals, areas = [], [], []
    with open(fname, newline="") as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["time"]))
            vals.append(float(row["w"]))
            if row["ww_step"] != "":
                areas.append(float(row["ww_step"]))
    times = np.array(times)
    step = float(times[1] - times[0])
    return RoughPath(np.array(vals), np.array(areas), step, float(times[0]), gamma)
