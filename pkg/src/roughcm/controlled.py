"""Controlled rough paths on the spectral scale, nonlinearities and cut-off."""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .roughpath import RoughPath, holder_lags
from .spectral import SpectralSpace


@dataclass(frozen=True, eq=False)
class ControlledPath:
    """Pair (U, U') sampled on the grid of ``rough`` over [0, span].

    ``u`` and ``gub`` have shape (n_steps + 1, N).
    """

    u: np.ndarray
    gub: np.ndarray
    alpha: float
    gamma: float
    rough: RoughPath
    span: float = 1.0

    def __post_init__(self):
        if self.u.shape != self.gub.shape:
            raise ValueError("u and gub must share a shape")
        if self.u.shape[0] != self.n_steps + 1:
            raise ValueError("path length does not match the rough path grid")

    @property
    def step(self) -> float:
        return self.rough.step

    @property
    def n_steps(self) -> int:
        return int(round(self.span / self.rough.step))

    @functools.cached_property
    def noise(self):
        """(W values, per-step increments, per-step areas) on [0, span]."""
        return self.rough.window(0.0, self.span)

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.n_steps + 1)

    def index(self, t: float) -> int:
        k = int(round(t / self.step))
        if abs(t / self.step - k) > 1e-7 or not 0 <= k <= self.n_steps:
            raise KeyError(f"time {t} is not on the path grid")
        return k

    def scaled(self, factor: float) -> "ControlledPath":
        return ControlledPath(self.u * factor, self.gub * factor, self.alpha, self.gamma,
                              self.rough, self.span)

    def __add__(self, other: "ControlledPath") -> "ControlledPath":
        return ControlledPath(self.u + other.u, self.gub + other.gub, self.alpha, self.gamma,
                              self.rough, self.span)

    def __sub__(self, other: "ControlledPath") -> "ControlledPath":
        return ControlledPath(self.u - other.u, self.gub - other.gub, self.alpha, self.gamma,
                              self.rough, self.span)


def zero_controlled(space: SpectralSpace, rough: RoughPath, alpha: float, span: float = 1.0):
    n = int(round(span / rough.step))
    z = np.zeros((n + 1, space.N))
    return ControlledPath(z, z.copy(), alpha, rough.gamma, rough, span)


def remainder(cp: ControlledPath, s: float, t: float) -> np.ndarray:
    """R_{s,t} = U_t - U_s - U'_s W_{s,t}."""
    i, j = cp.index(s), cp.index(t)
    if j < i:
        raise KeyError("remainder needs s <= t")
    w = cp.noise[0]
    return cp.u[j] - cp.u[i] - cp.gub[i] * (w[j] - w[i])


@dataclass(frozen=True)
class CrpNorm:
    sup_u_alpha: float
    sup_gub_alpha_minus_gamma: float
    holder_gub_alpha_minus_2gamma: float
    holder2_rem_alpha_minus_2gamma: float
    total: float


def crp_norm(space: SpectralSpace, cp: ControlledPath, alpha: float | None = None,
             mode: str = "auto") -> CrpNorm:
    """Four-part controlled path norm, Hölder parts as suprema over grid pairs.

    ``alpha`` overrides the path's own regularity label.
    """
    a = cp.alpha if alpha is None else alpha
    g = cp.gamma
    h = cp.step
    w = cp.noise[0]
    p1 = float(space.norm(cp.u, a).max())
    p2 = float(space.norm(cp.gub, a - g).max())
    uw = space.weighted(cp.u, a - 2 * g)
    gw = space.weighted(cp.gub, a - 2 * g)
    p3 = p4 = 0.0
    for lag in holder_lags(cp.n_steps, mode):
        dt = lag * h
        dg = gw[lag:] - gw[:-lag]
        p3 = max(p3, float(np.sqrt(np.einsum("ij,ij->i", dg, dg).max())) / dt ** g)
        dr = uw[lag:] - uw[:-lag] - gw[:-lag] * (w[lag:] - w[:-lag])[:, None]
        p4 = max(p4, float(np.sqrt(np.einsum("ij,ij->i", dr, dr).max())) / dt ** (2 * g))
    return CrpNorm(p1, p2, p3, p4, p1 + p2 + p3 + p4)


def crp_distance(space: SpectralSpace, a: ControlledPath, b: ControlledPath,
                 mode: str = "auto") -> float:
    return crp_norm(space, a - b, mode=mode).total


# ---------------------------------------------------------------- cut-off

def _smoothstep_coeffs() -> np.ndarray:
    """Degree-7 polynomial on [1/2, 1]: value 1 -> 0, three derivatives vanish."""
    rows, rhs = [], []
    for x0, val in ((0.5, 1.0), (1.0, 0.0)):
        for d in range(4):
            row = []
            for p in range(8):
                if p < d:
                    row.append(0.0)
                else:
                    c = 1.0
                    for q in range(d):
                        c *= p - q
                    row.append(c * x0 ** (p - d))
            rows.append(row)
            rhs.append(val if d == 0 else 0.0)
    return np.linalg.solve(np.array(rows), np.array(rhs))


@dataclass(frozen=True)
class CutoffProfile:
    """C^3 profile f: 1 on [0, 1/2], polynomial on [1/2, 1], 0 beyond."""

    r_half: float = 0.5
    polynomial: np.ndarray = field(default_factory=_smoothstep_coeffs)

    def __call__(self, x: float) -> float:
        if x <= self.r_half:
            return 1.0
        if x >= 1.0:
            return 0.0
        return float(np.polynomial.polynomial.polyval(x, self.polynomial))

    def derivative(self, x: float, order: int = 1) -> float:
        if x <= self.r_half or x >= 1.0:
            return 0.0
        d = np.polynomial.polynomial.polyder(self.polynomial, order)
        return float(np.polynomial.polynomial.polyval(x, d))


DEFAULT_PROFILE = CutoffProfile()


def cutoff(space: SpectralSpace, cp: ControlledPath, R: float,
           profile: CutoffProfile = DEFAULT_PROFILE, mode: str = "auto") -> ControlledPath:
    """Scale the pair by f(|(U, U')| / R); returned unchanged below R/2."""
    if R <= 0:
        raise ValueError("cut-off radius must be positive")
    m = crp_norm(space, cp, mode=mode).total
    factor = profile(m / R)
    if factor == 1.0:
        return cp
    return cp.scaled(factor)


# ---------------------------------------------------------- nonlinearities

NONLINEAR_KINDS = ("cubic_drift", "poly_diffusion", "kernel_diffusion", "linear_diffusion", "zero")


class NonDifferentiableError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Built-in drift and diffusion coefficients with hand-coded derivatives.

    ``cubic_drift``      F(u) = -coeff * u**3
    ``poly_diffusion``   G(u) = coeff * u**3
    ``kernel_diffusion`` G(u) = coeff * profile * <kernel, u>**3
    ``linear_diffusion`` G(u) = coeff * u
    ``zero``             0

    Pointwise powers are taken at the collocation nodes of ``space`` and
    projected back, which is exact for cubic products of retained modes.
    """

    kind: str
    space: SpectralSpace
    coeff: float = 1.0
    delta: float = 0.0
    sigma_loss: float = 0.0
    kernel: np.ndarray | None = None
    profile: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in NONLINEAR_KINDS:
            raise ValueError(f"unknown nonlinearity {self.kind!r}")
        if self.kind == "kernel_diffusion":
            n = self.space.N
            k = self.space.wavenumbers.astype(float)
            if self.kernel is None:
                object.__setattr__(self, "kernel", np.exp(-k) / np.linalg.norm(np.exp(-k)))
            if self.profile is None:
                prof = np.zeros(n)
                prof[: min(3, n)] = [1.0, 0.5, 0.25][: min(3, n)]
                object.__setattr__(self, "profile", prof)

    @property
    def sign(self) -> float:
        return -self.coeff if self.kind == "cubic_drift" else self.coeff

    def _cube(self, u):
        sp = self.space
        return sp.from_nodes(sp.to_nodes(u) ** 3)

    def value(self, u: np.ndarray) -> np.ndarray:
        k = self.kind
        if k == "zero":
            return np.zeros_like(u)
        if k == "linear_diffusion":
            return self.coeff * u
        if k == "kernel_diffusion":
            return self.coeff * (u @ self.kernel)[..., None] ** 3 * self.profile
        return self.sign * self._cube(u)

    def deriv(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """DG(u) v."""
        k = self.kind
        if k == "zero":
            return np.zeros_like(u)
        if k == "linear_diffusion":
            return self.coeff * v
        if k == "kernel_diffusion":
            a, b = u @ self.kernel, v @ self.kernel
            return (3.0 * self.coeff * a * a * b)[..., None] * self.profile
        sp = self.space
        x, y = sp.to_nodes(u), sp.to_nodes(v)
        return self.sign * sp.from_nodes(3.0 * x * x * y)

    def deriv2(self, u, v1, v2) -> np.ndarray:
        k = self.kind
        if k in ("zero", "linear_diffusion"):
            return np.zeros_like(u)
        if k == "kernel_diffusion":
            a = u @ self.kernel
            return (6.0 * self.coeff * a * (v1 @ self.kernel) * (v2 @ self.kernel))[..., None] * self.profile
        sp = self.space
        return self.sign * sp.from_nodes(6.0 * sp.to_nodes(u) * sp.to_nodes(v1) * sp.to_nodes(v2))

    def deriv3(self, u, v1, v2, v3) -> np.ndarray:
        k = self.kind
        if k in ("zero", "linear_diffusion"):
            return np.zeros_like(u)
        if k == "kernel_diffusion":
            prod = (v1 @ self.kernel) * (v2 @ self.kernel) * (v3 @ self.kernel)
            return (6.0 * self.coeff * prod)[..., None] * self.profile
        sp = self.space
        return self.sign * sp.from_nodes(6.0 * sp.to_nodes(v1) * sp.to_nodes(v2) * sp.to_nodes(v3))

    def origin_conditions(self) -> tuple[float, float, float]:
        """|G(0)|, max |DG(0)e_i|, max |D2G(0)(e_i, e_j)| over unit modes."""
        n = self.space.N
        z = np.zeros(n)
        eye = np.eye(n)
        g0 = float(np.abs(self.value(z)).max())
        d1 = float(np.abs(self.deriv(np.zeros((n, n)), eye)).max())
        d2 = max(float(np.abs(self.deriv2(np.zeros((n, n)), eye, eye[j])).max()) for j in range(n))
        return g0, d1, d2


def make_nonlinearity(space: SpectralSpace, kind: str, coeff: float = 1.0,
                      gamma: float = 0.5) -> Nonlinearity:
    """Nonlinearity with the default regularity losses (0 for drifts, 0.1 gamma else)."""
    loss = 0.0 if kind in ("cubic_drift", "zero") else 0.1 * gamma
    return Nonlinearity(kind=kind, space=space, coeff=coeff, delta=0.0, sigma_loss=loss)


def compose(g: Nonlinearity, cp: ControlledPath) -> ControlledPath:
    """(G(U), DG(U) U') labelled at regularity alpha - sigma_loss."""
    return ControlledPath(g.value(cp.u), g.deriv(cp.u, cp.gub), cp.alpha - g.sigma_loss,
                          cp.gamma, cp.rough, cp.span)


def random_controlled(space: SpectralSpace, rough: RoughPath, alpha: float,
                      rng: np.random.Generator, span: float = 1.0, decay: float = 1.0) -> ControlledPath:
    """U_t = a + b W_t + c W_t^2 / 2 with U' = b + c W_t, random coefficient fields."""
    w = rough.window(0.0, span)[0]
    w = w - w[0]
    scale = space.weights ** (-decay)
    a, b, c = (rng.standard_normal(space.N) * scale for _ in range(3))
    u = a + w[:, None] * b + 0.5 * (w * w)[:, None] * c
    gub = b + w[:, None] * c
    return ControlledPath(u, gub, alpha, rough.gamma, rough, span)


def _lipschitz_map(space, which, y, R, drift, diffusion, germ):
    from .integrate import convolution_path

    yc = cutoff(space, y, R)
    w, dw, dww = y.noise
    if which == "diffusion":
        out = compose(diffusion, yc)
        return ControlledPath(out.u, out.gub, y.alpha, y.gamma, y.rough, y.span)
    fv = drift.value(yc.u)
    if which == "drift":
        z, _ = convolution_path(space, y.step, fv, None, None, dw, dww, germ)
        return ControlledPath(z, np.zeros_like(z), y.alpha, y.gamma, y.rough, y.span)
    if which == "full":
        gv = diffusion.value(yc.u)
        gd = diffusion.deriv(yc.u, yc.gub)
        z, _ = convolution_path(space, y.step, fv, gv, gd, dw, dww, germ)
        return ControlledPath(z, gv, y.alpha, y.gamma, y.rough, y.span)
    raise ValueError(f"unknown map {which!r}")


def empirical_lipschitz(space: SpectralSpace, which: str, R: float, n_pairs: int, seed: int,
                        drift: Nonlinearity, diffusion: Nonlinearity, rough: RoughPath,
                        alpha: float = 0.0, germ: str = "exponential") -> float:
    """Largest observed ratio |map(Y) - map(Z)| / |Y - Z| over random pairs.

    ``which`` is ``drift`` (drift convolution of F_R), ``diffusion`` (G_R as a
    controlled path) or ``full`` (the truncated mild map T_R together with
    G_R).  Pair members are random controlled paths rescaled to norms drawn
    uniformly in [R/20, R], so the sample scales with R.  A lower bound on the
    true constant.
    """
    if n_pairs < 10:
        raise ValueError("n_pairs must be at least 10")
    rng = np.random.default_rng(seed)
    best, used = 0.0, 0
    for _ in range(n_pairs):
        pair = []
        for _ in range(2):
            y = random_controlled(space, rough, alpha, rng)
            target = R * rng.uniform(0.05, 1.0)
            pair.append(y.scaled(target / crp_norm(space, y).total))
        den = crp_distance(space, pair[0], pair[1])
        if den == 0.0:
            continue
        used += 1
        num = crp_distance(space, _lipschitz_map(space, which, pair[0], R, drift, diffusion, germ),
                           _lipschitz_map(space, which, pair[1], R, drift, diffusion, germ))
        best = max(best, num / den)
    if used == 0:
        raise ValueError("all sampled pairs were degenerate")
    return best
