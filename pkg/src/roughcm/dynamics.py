"""Truncated mild solutions on unit blocks, flows and the cocycle check."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .controlled import ControlledPath, Nonlinearity, crp_distance, crp_norm, cutoff
from .integrate import convolution_path
from .roughpath import HolderStats, RoughPath, holder_seminorms, shift
from .spectral import SpectralSpace


class SolverError(RuntimeError):
    def __init__(self, message, distances=()):
        super().__init__(message)
        self.distances = list(distances)


def default_c_tilde(rho: float) -> float:
    return 1.0 + rho + rho * rho


@dataclass(frozen=True)
class TruncationRadius:
    r_tilde: float
    r: float
    k_target: float
    denominator: float = math.nan


def truncation_radius(rho: HolderStats | float, k_target: float, c_f: float, c_g: float,
                      c_tilde_fit: Callable[[float], float] = default_c_tilde) -> TruncationRadius:
    """r_tilde solves (c_f + c_g C(rho)) r_tilde = K; r = min(r_tilde, 1)."""
    rho_val = rho.rho if isinstance(rho, HolderStats) else float(rho)
    if k_target <= 0 or c_f < 0 or c_g < 0:
        raise ValueError("constants must be positive")
    den = c_f + c_g * c_tilde_fit(rho_val)
    if den <= 0:
        raise ZeroDivisionError("c_f + c_g C(rho) vanishes")
    r_tilde = k_target / den
    return TruncationRadius(r_tilde=r_tilde, r=min(r_tilde, 1.0), k_target=k_target, denominator=den)


def fixed_radius(r: float) -> TruncationRadius:
    """Radius set directly instead of from the Lipschitz budget."""
    return TruncationRadius(r_tilde=r, r=min(r, 1.0), k_target=math.nan)


@dataclass(frozen=True)
class RadiusRule:
    """Per-block truncation radius computed from the block's rough path norm."""

    k_target: float = math.nan
    c_f: float = 1.0
    c_g: float = 1.0
    c_tilde: Callable[[float], float] = default_c_tilde
    override: float | None = None
    mode: str = "auto"

    def for_rough(self, rp: RoughPath, span: float = 1.0) -> TruncationRadius:
        if self.override is not None:
            return fixed_radius(self.override)
        if self.c_f == 0.0 and self.c_g == 0.0:
            return fixed_radius(1.0)
        rho = holder_seminorms(rp, (0.0, span), self.mode)
        return truncation_radius(rho, self.k_target, self.c_f, self.c_g, self.c_tilde)


@dataclass
class BlockImage:
    """Integrals produced by one block under the truncated coefficients."""

    z: np.ndarray          # forward convolution at every grid time
    germs: np.ndarray      # per-step germs, transported to the step's right end
    gval: np.ndarray       # G_R(Y) at the grid, the new Gubinelli derivative


def block_image(space: SpectralSpace, drift: Nonlinearity, diffusion: Nonlinearity,
                y: ControlledPath, R: float, germ: str = "exponential",
                mode: str = "auto") -> BlockImage:
    yc = cutoff(space, y, R, mode=mode)
    w, dw, dww = y.noise
    fv = drift.value(yc.u) if drift.kind != "zero" else None
    if diffusion.kind != "zero":
        gv = diffusion.value(yc.u)
        gd = diffusion.deriv(yc.u, yc.gub)
    else:
        gv = np.zeros_like(y.u)
        gd = None
    z, germs = convolution_path(space, y.step, fv, gv if gd is not None else None, gd, dw, dww, germ)
    return BlockImage(z=z, germs=germs, gval=gv)


@dataclass
class UnitSolution:
    path: ControlledPath
    iterations: int
    residual: float
    distances: list = field(default_factory=list)


def picard_unit(space: SpectralSpace, drift: Nonlinearity, diffusion: Nonlinearity,
                radius: TruncationRadius, xi: np.ndarray, rp: RoughPath, alpha: float = 0.0,
                span: float = 1.0, tol: float = 1e-12, max_iter: int = 200,
                germ: str = "exponential", mode: str = "auto") -> UnitSolution:
    """Picard iteration (Y, Y') -> (S xi + T_R(Y), G_R(Y)) on [0, span].

    Starts from (S xi, 0).  The step is damped to 1/2 whenever a distance
    fails to decrease.  Returns the first iterate whose image lies within
    ``tol`` in the controlled norm.
    """
    xi = np.asarray(xi, dtype=float)
    n = int(round(span / rp.step))
    free = space.propagate(rp.step * np.arange(n + 1)[:, None], xi)
    y = ControlledPath(free, np.zeros_like(free), alpha, rp.gamma, rp, span)
    dists: list[float] = []
    theta = 1.0
    for it in range(1, max_iter + 1):
        img = block_image(space, drift, diffusion, y, radius.r, germ, mode)
        ty = ControlledPath(free + img.z, img.gval, alpha, rp.gamma, rp, span)
        d = crp_distance(space, ty, y, mode)
        dists.append(d)
        if not math.isfinite(d) or (len(dists) > 3 and d > 1e3 * max(dists[0], tol)):
            raise SolverError("Picard iterates diverge", dists[-2:])
        if d <= tol:
            return UnitSolution(y, it, d, dists)
        if len(dists) >= 2 and d >= dists[-2]:
            theta = 0.5
        y = ty if theta == 1.0 else y + (ty - y).scaled(theta)
    raise SolverError(f"no convergence in {max_iter} iterations (residual {dists[-1]:.3e})", dists[-2:])


def solve_unit(space, drift, diffusion, radius, xi, rp, tol=1e-12, max_iter=200, **kw) -> ControlledPath:
    return picard_unit(space, drift, diffusion, radius, xi, rp, tol=tol, max_iter=max_iter, **kw).path


@dataclass
class Trajectory:
    blocks: list
    initial: np.ndarray
    rough: RoughPath
    radii: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.blocks[-1].u[-1]


def solve_flow(space: SpectralSpace, drift: Nonlinearity, diffusion: Nonlinearity,
               rule: RadiusRule, xi: np.ndarray, rp: RoughPath, n_blocks: int,
               alpha: float = 0.0, **kw) -> Trajectory:
    """Concatenate unit blocks; block k is driven by the shift of ``rp`` by k."""
    rp.index(float(n_blocks))
    traj = Trajectory(blocks=[], initial=np.asarray(xi, dtype=float), rough=rp)
    state = traj.initial
    for k in range(n_blocks):
        noise = shift(rp, float(k))
        rad = rule.for_rough(noise)
        sol = picard_unit(space, drift, diffusion, rad, state, noise, alpha=alpha, **kw)
        traj.blocks.append(sol.path)
        traj.radii.append(rad)
        traj.iterations.append(sol.iterations)
        traj.residuals.append(sol.residual)
        state = sol.path.u[-1]
    return traj


def cocycle_defect(space, drift, diffusion, rule: RadiusRule, xi, rp: RoughPath, t: int, tau: int,
                   alpha: float = 0.0, direct: bool = True, **kw) -> float:
    """|phi(t + tau, W, xi) - phi(t, shift_tau W, phi(tau, W, xi))|_alpha.

    With ``direct`` the left side is one Picard solve over [0, t + tau] rather
    than a concatenation of unit blocks.
    """
    if tau == 0:
        return 0.0
    if direct:
        span = float(t + tau)
        rad = rule.for_rough(rp, span)
        lhs = picard_unit(space, drift, diffusion, rad, xi, rp, alpha=alpha, span=span, **kw).path.u[-1]
    else:
        lhs = solve_flow(space, drift, diffusion, rule, xi, rp, t + tau, alpha, **kw).final
    mid = solve_flow(space, drift, diffusion, rule, xi, rp, tau, alpha, **kw).final
    if t == 0:
        rhs = mid
    else:
        rhs = solve_flow(space, drift, diffusion, rule, mid, shift(rp, float(tau)), t, alpha, **kw).final
    return float(space.norm(lhs - rhs, alpha))


def write_trajectory_csv(traj: Trajectory, fname) -> None:
    with open(fname, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["block", "time", "mode", "coeff", "gub_coeff"])
        for b, blk in enumerate(traj.blocks):
            for k, t in enumerate(blk.times):
                for m in range(blk.u.shape[1]):
                    out.writerow([b, format(b + t, ".17g"), m, format(blk.u[k, m], ".17g"),
                                  format(blk.gub[k, m], ".17g")])


def calibrate_constants(space: SpectralSpace, drift: Nonlinearity, diffusion: Nonlinearity,
                        rp: RoughPath, alpha: float = 0.0, n_pairs: int = 20, seed: int = 0):
    """C_F and C_G as empirical Lipschitz constants of the truncated maps at R = 1."""
    from .controlled import empirical_lipschitz

    c_f = empirical_lipschitz(space, "drift", 1.0, n_pairs, seed, drift, diffusion, rp, alpha)
    c_g = empirical_lipschitz(space, "diffusion", 1.0, n_pairs, seed, drift, diffusion, rp, alpha)
    return c_f, c_g
