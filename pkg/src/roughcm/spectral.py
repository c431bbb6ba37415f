"""Diagonal linear skeleton of the built-in parabolic models.

Every model is stored in a real eigenbasis.  Fields are coefficient vectors,
the operator acts by ``exp(lambda_n t)`` and the regularity scale uses the
weights ``w_n = 1 + n**2`` with ``n`` the wavenumber of the mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("dirichlet_rd", "swift_hohenberg", "torus_rd")


class ModelError(ValueError):
    pass


class SemigroupDomainError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralModel:
    kind: str
    n_modes: int
    cubic_a: float = 1.0
    torus_length: float = 2.0 * np.pi

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.n_modes < 2:
            raise ModelError("n_modes must be at least 2")


@dataclass(frozen=True)
class Field:
    coeffs: np.ndarray
    alpha: float = 0.0


@dataclass(frozen=True)
class DichotomyData:
    m_c: float
    m_s: float
    gamma_star: float
    beta_star: float

    def __post_init__(self):
        if not (-self.beta_star < 0.0 <= self.gamma_star < self.beta_star):
            raise ModelError("dichotomy ordering -beta* < 0 <= gamma* < beta* violated")
        if self.m_c < 1.0 or self.m_s < 1.0:
            raise ModelError("dichotomy constants must be >= 1")


@dataclass(frozen=True, eq=False)
class SpectralSpace:
    """Eigenpairs plus a collocation transform used for pointwise products.

    ``synth`` maps coefficients to values at the quadrature nodes and
    ``analysis`` maps nodal values back; products of up to four modes are
    integrated exactly, so cubic terms are dealiased.
    """

    model: SpectralModel
    eigenvalues: np.ndarray
    weights: np.ndarray
    wavenumbers: np.ndarray
    center_mask: np.ndarray
    synth: np.ndarray = field(repr=False)
    analysis: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.eigenvalues)

    @property
    def stable_mask(self) -> np.ndarray:
        return ~self.center_mask

    @property
    def center_dim(self) -> int:
        return int(self.center_mask.sum())

    def mode_index(self, wavenumber: int, parity: str = "sin") -> int:
        """Position of a mode given its wavenumber (and cos/sin for pairs)."""
        hits = np.flatnonzero(self.wavenumbers == wavenumber)
        if self.model.kind == "swift_hohenberg":
            hits = hits[[0 if parity == "cos" else 1]]
        if hits.size == 0:
            raise ModelError(f"wavenumber {wavenumber} not retained")
        return int(hits[0])

    def field(self, coeffs, alpha: float = 0.0) -> Field:
        return Field(np.asarray(coeffs, dtype=float), alpha)

    def unit(self, index: int, scale: float = 1.0) -> np.ndarray:
        e = np.zeros(self.N)
        e[index] = scale
        return e

    # array-level kernels, broadcasting over leading axes
    def propagate(self, t, coeffs: np.ndarray) -> np.ndarray:
        return coeffs * np.exp(self.eigenvalues * t)

    def weighted(self, coeffs: np.ndarray, alpha: float) -> np.ndarray:
        return coeffs * self.weights ** alpha

    def norm(self, coeffs: np.ndarray, alpha: float) -> np.ndarray:
        return np.sqrt(np.sum(self.weighted(coeffs, alpha) ** 2, axis=-1))

    def to_nodes(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.synth.T

    def from_nodes(self, values: np.ndarray) -> np.ndarray:
        return values @ self.analysis.T


def _collocation(kind: str, wavenumbers: np.ndarray, n: int):
    """Quadrature nodes and transforms exact for products of four modes."""
    if kind == "dirichlet_rd":
        m = 4 * n
        x = np.pi * np.arange(1, m) / m
        synth = np.sin(np.outer(x, wavenumbers))
        analysis = (2.0 / m) * synth.T
    elif kind == "torus_rd":
        m = 4 * n
        x = np.pi * np.arange(m + 1) / m
        q = np.full(m + 1, 1.0)
        q[0] = q[-1] = 0.5
        synth = np.cos(np.outer(x, wavenumbers))
        norm = np.where(wavenumbers == 0, 1.0 / m, 2.0 / m)
        analysis = norm[:, None] * (synth * q[:, None]).T
    else:
        m = 4 * n + 2
        x = 2.0 * np.pi * np.arange(m) / m
        cols = []
        for k in range(1, n + 1):
            cols.append(np.cos(k * x))
            cols.append(np.sin(k * x))
        synth = np.stack(cols, axis=1)
        analysis = (2.0 / m) * synth.T
    return x, synth, analysis


def build_space(model: SpectralModel) -> SpectralSpace:
    """Eigenvalues, weights, center mask and collocation for ``model``."""
    n = model.n_modes
    if model.kind == "dirichlet_rd":
        k = np.arange(1, n + 1)
        lam = 1.0 - k.astype(float) ** 2
    elif model.kind == "swift_hohenberg":
        k = np.repeat(np.arange(1, n + 1), 2)
        lam = -(1.0 - k.astype(float) ** 2) ** 2
    else:
        k = np.arange(n)
        lam = -(2.0 * np.pi * k / model.torus_length) ** 2
    lam = lam + 0.0  # normalise -0.0
    center = lam == 0.0
    if center.all():
        raise ModelError("model has no stable mode")
    x, synth, analysis = _collocation(model.kind, np.arange(1, n + 1) if model.kind == "swift_hohenberg" else k, n)
    return SpectralSpace(model=model, eigenvalues=lam, weights=1.0 + k.astype(float) ** 2,
                         wavenumbers=k, center_mask=center, synth=synth,
                         analysis=analysis, nodes=x)


def semigroup_apply(space: SpectralSpace, t: float, u: Field) -> Field:
    if t < 0 and np.any(u.coeffs[space.stable_mask] != 0):
        raise SemigroupDomainError("negative time only allowed on center fields")
    return Field(space.propagate(t, u.coeffs), u.alpha)


def project(space: SpectralSpace, u: Field, part: str) -> Field:
    if part == "center":
        mask = space.center_mask
    elif part == "stable":
        mask = space.stable_mask
    else:
        raise ValueError("part must be 'center' or 'stable'")
    return Field(np.where(mask, u.coeffs, 0.0), u.alpha)


def alpha_norm(space: SpectralSpace, u: Field | np.ndarray, alpha: float) -> float:
    coeffs = u.coeffs if isinstance(u, Field) else u
    return float(space.norm(coeffs, alpha))


def dichotomy_constants(space: SpectralSpace, alpha: float, t_grid) -> DichotomyData:
    """Tightest dichotomy constants on ``t_grid``, checked against eigenvalues.

    The center bound is taken two-sided, ``exp(gamma* |t|)``; for a diagonal
    operator the norm of each restricted flow is attained on a single mode,
    so the weight exponent ``alpha`` drops out.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size < 64:
        raise ModelError("t_grid needs at least 64 points")
    if not space.stable_mask.any():
        raise ModelError("no stable modes")
    lam_c = space.eigenvalues[space.center_mask]
    lam_s = space.eigenvalues[space.stable_mask]
    beta = float(-lam_s.max())
    gamma = float(max(0.0, np.abs(lam_c).max(initial=0.0)))
    tt = np.abs(t)[:, None]
    growth_c = np.exp(-lam_c[None, :] * tt - gamma * tt) if lam_c.size else np.ones((1, 1))
    growth_s = np.exp(lam_s[None, :] * tt + beta * tt)
    m_c = float(max(1.0, growth_c.max()))
    m_s = float(max(1.0, growth_s.max()))
    return DichotomyData(m_c=m_c, m_s=m_s, gamma_star=gamma, beta_star=beta)


def smoothing_defect(space: SpectralSpace, t: float, sigma: float, alpha: float,
                     u: Field) -> tuple[float, float]:
    """Ratios |(S_t - I)u|_a / (t^s |u|_{a+s}) and |S_t u|_{a+s} / (t^-s |u|_a)."""
    if t <= 0:
        raise ValueError("t must be positive")
    c = u.coeffs
    st = space.propagate(t, c)
    den1 = t ** sigma * space.norm(c, alpha + sigma)
    den2 = t ** (-sigma) * space.norm(c, alpha)
    r1 = float(space.norm(st - c, alpha) / den1) if den1 > 0 else 0.0
    r2 = float(space.norm(st, alpha + sigma) / den2) if den2 > 0 else 0.0
    return r1, r2


def estimate_c_s(space: SpectralSpace, alpha: float = 0.0, sigmas=(0.0, 0.25, 0.5, 0.75, 1.0),
                 ts=None) -> float:
    """Largest smoothing constant over unit modes, sigmas and times in (0, 1]."""
    ts = 2.0 ** -np.arange(0, 13) if ts is None else ts
    best = 0.0
    for i in range(space.N):
        e = Field(space.unit(i), alpha)
        for s in sigmas:
            for t in ts:
                best = max(best, *smoothing_defect(space, t, s, alpha, e))
    return best
