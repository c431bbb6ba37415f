"""Discrete Lyapunov-Perron fixed point and the local center manifold graph.

A sequence holds unit blocks j = -1, -2, ..., -K_past, block j being driven
by the shift of the master rough path by j.  List position m stores block
j = -m - 1.  The map combines, for every block,

* the center part transported back from the anchor value xi^c at time 0,
  minus the center integrals of all later blocks and of the rest of the own
  block;
* the stable part fed forward from all earlier blocks plus the own block's
  integral up to the current time.

The tail of stable forcing older than the window is dropped and bounded.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .controlled import ControlledPath, Nonlinearity, crp_norm
from .dynamics import RadiusRule, TruncationRadius, block_image, picard_unit
from .integrate import backward_sum, step_factors
from .roughpath import RoughPath, shift
from .spectral import DichotomyData, SpectralSpace


class GapError(ValueError):
    pass


class ContractionError(RuntimeError):
    def __init__(self, message, distances=()):
        super().__init__(message)
        self.distances = list(distances)


def gap_lhs(d: DichotomyData, c_s: float, eta: float, k: float) -> float:
    """Left side of the gap inequality (must stay below 1/4)."""
    bs, gs = d.beta_star, d.gamma_star
    stable = math.exp(bs + eta) * (d.m_s * math.exp(-eta) + 1.0) / (1.0 - math.exp(-(bs + eta)))
    center = math.exp(gs - eta) * (d.m_c * math.exp(-eta) + 1.0) / (1.0 - math.exp(-(gs - eta)))
    return k * c_s * (stable + center)


def closed_form_k(d: DichotomyData, c_s: float) -> float:
    """K from the midpoint choice eta = (gamma* - beta*) / 2, as usually quoted."""
    bs, gs = d.beta_star, d.gamma_star
    inv = 4.0 * c_s * math.exp((bs + gs) / 2) * (
        (math.exp((bs - gs) / 2) * (d.m_s + d.m_c) + 1.0) / (1.0 - math.exp(-(bs + gs) / 2)))
    return 1.0 / inv


@dataclass(frozen=True)
class GapParams:
    eta: float
    k_gap: float
    c_s: float
    dichotomy: DichotomyData
    k_closed_form: float = math.nan
    lhs: float = math.nan

    def __post_init__(self):
        if not (-self.dichotomy.beta_star < self.eta < 0.0):
            raise GapError("eta must lie in (-beta*, 0)")
        lhs = gap_lhs(self.dichotomy, self.c_s, self.eta, self.k_gap)
        if not lhs < 0.25:
            raise GapError(f"gap condition fails: left side {lhs:.6g} >= 1/4")
        object.__setattr__(self, "lhs", lhs)


def gap_k(d: DichotomyData, c_s: float = 1.0, margin: float = 0.99) -> GapParams:
    """Gap parameters at eta = (gamma* - beta*) / 2.

    The quoted closed form lands slightly above 1/4 on the gap inequality
    (its "+1" should read "+2" at this eta), so the working K is the value
    that makes the left side exactly 1/4, times ``margin``.
    """
    if d.beta_star == d.gamma_star:
        raise GapError("degenerate dichotomy: beta* == gamma*")
    eta = (d.gamma_star - d.beta_star) / 2.0
    k_cf = closed_form_k(d, c_s)
    k_edge = 0.25 / gap_lhs(d, c_s, eta, 1.0)
    return GapParams(eta=eta, k_gap=margin * k_edge, c_s=c_s, dichotomy=d, k_closed_form=k_cf)


@dataclass
class LPSequence:
    blocks: list
    eta: float
    tail_estimate: float = 0.0

    @property
    def k_past(self) -> int:
        return len(self.blocks)

    def block_index(self, m: int) -> int:
        """Block label j of list position m."""
        return -m - 1


def bc_eta_norm(space: SpectralSpace, seq: LPSequence, mode: str = "auto") -> float:
    """sup_j exp(-eta j) |block_j| with j = -1, -2, ..."""
    best = 0.0
    for m, blk in enumerate(seq.blocks):
        best = max(best, math.exp(-seq.eta * (-m - 1)) * crp_norm(space, blk, mode=mode).total)
    return best


def bc_eta_distance(space, a: LPSequence, b: LPSequence, mode: str = "auto") -> float:
    diff = LPSequence([x - y for x, y in zip(a.blocks, b.blocks)], a.eta)
    return bc_eta_norm(space, diff, mode)


@dataclass
class LPWindow:
    """Noise and radii for the blocks of one window ending at time 0 of ``rough``."""

    rough: RoughPath
    k_past: int
    radii: list
    noises: list

    @classmethod
    def build(cls, rough: RoughPath, k_past: int, rule: RadiusRule) -> "LPWindow":
        noises = [shift(rough, float(-m - 1)) for m in range(k_past)]
        for nz in noises:
            nz.index(1.0)
        radii = [rule.for_rough(nz) for nz in noises]
        return cls(rough, k_past, radii, noises)


def zero_sequence(space: SpectralSpace, window: LPWindow, alpha: float, eta: float) -> LPSequence:
    blocks = []
    for nz in window.noises:
        n = int(round(1.0 / nz.step))
        z = np.zeros((n + 1, space.N))
        blocks.append(ControlledPath(z, z.copy(), alpha, nz.gamma, nz, 1.0))
    return LPSequence(blocks, eta)


@dataclass
class _Images:
    images: list
    endpoints: list


def _block_images(space, drift, diffusion, seq, window, germ, mode):
    imgs = [block_image(space, drift, diffusion, blk, window.radii[m].r, germ, mode)
            for m, blk in enumerate(seq.blocks)]
    return _Images(imgs, [img.z[-1] for img in imgs])


def _tail_bound(space, gap: GapParams | None, eta, endpoints, alpha) -> float:
    if gap is None:
        return 0.0
    d = gap.dichotomy
    k = len(endpoints)
    stable = space.stable_mask
    wt = max(math.exp(-eta * (-m - 1)) * float(space.norm(np.where(stable, e, 0.0), alpha))
             for m, e in enumerate(endpoints))
    rate = d.beta_star + eta
    return d.m_s * math.exp(-rate * (k - 1)) * wt / (1.0 - math.exp(-rate))


def lp_apply(space: SpectralSpace, drift: Nonlinearity, diffusion: Nonlinearity,
             window: LPWindow, seq: LPSequence, xi_c: np.ndarray, gap: GapParams | None = None,
             alpha: float = 0.0, germ: str = "exponential", mode: str = "auto") -> LPSequence:
    """One application of the discrete Lyapunov-Perron map."""
    xi_c = np.asarray(xi_c, dtype=float)
    if np.any(xi_c[space.stable_mask] != 0):
        raise ValueError("xi_c must be center-only")
    if seq.k_past != window.k_past:
        raise ValueError("sequence and window lengths differ")
    cm, sm = space.center_mask, space.stable_mask
    lam = space.eigenvalues
    imgs = _block_images(space, drift, diffusion, seq, window, germ, mode)
    k = seq.k_past

    # center parts, anchored at xi_c and swept back from j = -1
    center_end = [None] * k
    anchor = np.where(cm, xi_c, 0.0)
    for m in range(k):
        if m == 0:
            center_end[m] = anchor
        else:
            prev = center_end[m - 1] - imgs.endpoints[m - 1]
            center_end[m] = np.where(cm, np.exp(-lam) * prev, 0.0)

    # stable parts, fed forward from the oldest block
    stable_start = [None] * k
    x = np.zeros(space.N)
    for m in range(k - 1, -1, -1):
        stable_start[m] = x
        x = np.where(sm, np.exp(lam) * x + imgs.endpoints[m], 0.0)

    blocks = []
    for m, blk in enumerate(seq.blocks):
        img = imgs.images[m]
        n = img.z.shape[0] - 1
        t = blk.step * np.arange(n + 1)[:, None]
        fac = step_factors(space, blk.step, germ)
        partial = backward_sum(fac.decay, img.germs)
        cpart = np.exp(lam * (t - 1.0)) * center_end[m] - partial
        spart = np.exp(lam * t) * stable_start[m] + img.z
        u = np.where(cm, cpart, np.where(sm, spart, 0.0))
        blocks.append(ControlledPath(u, img.gval, alpha, blk.gamma, blk.rough, blk.span))
    tail = _tail_bound(space, gap, seq.eta, imgs.endpoints, alpha)
    return LPSequence(blocks, seq.eta, tail)


@dataclass
class LPResult:
    sequence: LPSequence
    iterations: int
    distances: list
    window: LPWindow


def lp_solve(space, drift, diffusion, window: LPWindow, gap: GapParams, xi_c, alpha: float = 0.0,
             tol: float = 1e-14, max_iter: int = 60, germ: str = "exponential",
             mode: str = "auto") -> LPResult:
    """Iterate the map from the zero sequence until the BC^eta step is below tol.

    Raises :class:`ContractionError` when three consecutive distance ratios
    exceed 1/2 while the distances are still above round-off.
    """
    xi_c = np.asarray(xi_c, dtype=float)
    if float(space.norm(xi_c, alpha)) > window.radii[0].r * (1 + 1e-12):
        raise ValueError("xi_c lies outside the truncation ball")
    seq = zero_sequence(space, window, alpha, gap.eta)
    dists: list[float] = []
    bad = 0
    floor = 1e-13 * max(float(space.norm(xi_c, alpha)), 1e-300)
    for it in range(1, max_iter + 1):
        new = lp_apply(space, drift, diffusion, window, seq, xi_c, gap, alpha, germ, mode)
        d = bc_eta_distance(space, new, seq, mode)
        dists.append(d)
        seq = new
        if d <= tol or d <= floor:
            return LPResult(seq, it, dists, window)
        if len(dists) >= 2 and d > 0.5 * dists[-2]:
            bad += 1
            if bad >= 3:
                raise ContractionError("Lyapunov-Perron iteration is not contracting", dists)
        else:
            bad = 0
    raise ContractionError(f"no convergence in {max_iter} iterations", dists)


def graph_hc(space: SpectralSpace, seq: LPSequence) -> np.ndarray:
    """Stable part of the anchor value (block -1 at its right end)."""
    return np.where(space.stable_mask, seq.blocks[0].u[-1], 0.0)


def graph_hc_backward_sum(space, drift, diffusion, window: LPWindow, seq: LPSequence,
                          germ: str = "exponential", mode: str = "auto") -> np.ndarray:
    """Same value from sum_j S^s_{-1-j} (stable integral of block j)."""
    imgs = _block_images(space, drift, diffusion, seq, window, germ, mode)
    lam = space.eigenvalues
    total = np.zeros(space.N)
    for m, e in enumerate(imgs.endpoints):
        total = total + np.exp(lam * m) * e
    return np.where(space.stable_mask, total, 0.0)


def center_directions(space: SpectralSpace, n_directions: int = 8) -> np.ndarray:
    """Unit directions in the center subspace: +-1 in 1-D, evenly spaced angles in 2-D."""
    idx = np.flatnonzero(space.center_mask)
    if len(idx) == 1:
        dirs = [space.unit(idx[0]), space.unit(idx[0], -1.0)]
    else:
        dirs = []
        for a in 2 * np.pi * np.arange(n_directions) / n_directions:
            e = np.zeros(space.N)
            e[idx[0]], e[idx[1]] = math.cos(a), math.sin(a)
            dirs.append(e)
    return np.array(dirs)


@dataclass
class ManifoldGraph:
    center_points: np.ndarray
    h_values: np.ndarray
    radius: TruncationRadius
    direction_index: np.ndarray
    radii: np.ndarray
    iterations: list = field(default_factory=list)
    tail_estimates: list = field(default_factory=list)
    consistency: list = field(default_factory=list)


def sample_graph(space, drift, diffusion, window: LPWindow, gap: GapParams, alpha: float = 0.0,
                 n_directions: int = 8, n_radii: int = 6, tol: float = 1e-14, **kw) -> ManifoldGraph:
    """h^c on a radial grid of the truncation ball, plus the origin."""
    rad = window.radii[0]
    dirs = center_directions(space, n_directions)
    pts, hs, di, rr, its, tails, cons = [np.zeros(space.N)], [np.zeros(space.N)], [-1], [0.0], [0], [0.0], [0.0]
    for d_i, e in enumerate(dirs):
        for k in range(1, n_radii + 1):
            r = rad.r * k / n_radii
            xi = e * r / float(space.norm(e, alpha))
            res = lp_solve(space, drift, diffusion, window, gap, xi, alpha, tol, **kw)
            h = graph_hc(space, res.sequence)
            alt = graph_hc_backward_sum(space, drift, diffusion, window, res.sequence)
            pts.append(xi)
            hs.append(h)
            di.append(d_i)
            rr.append(r)
            its.append(res.iterations)
            tails.append(res.sequence.tail_estimate)
            cons.append(float(np.abs(h - alt).max()))
    return ManifoldGraph(np.array(pts), np.array(hs), rad, np.array(di), np.array(rr), its, tails, cons)


def tangency_probe(space, drift, diffusion, window: LPWindow, gap: GapParams, radii,
                   alpha: float = 0.0, direction: np.ndarray | None = None, **kw) -> list:
    """|h^c(r e)|_alpha / |r e|_alpha for each radius r."""
    e = center_directions(space)[0] if direction is None else direction
    e = e / float(space.norm(e, alpha))
    out = []
    for r in radii:
        res = lp_solve(space, drift, diffusion, window, gap, r * e, alpha, **kw)
        out.append(float(space.norm(graph_hc(space, res.sequence), alpha)) / r)
    return out


@dataclass
class InvarianceReport:
    defect: float
    per_sample: list
    excluded: int


def invariance_defect(space, drift, diffusion, rule: RadiusRule, rough: RoughPath, k_past: int,
                      gap: GapParams, center_points, alpha: float = 0.0, lp_tol: float = 1e-14,
                      flow_tol: float = 1e-14, **kw) -> InvarianceReport:
    """Distance of phi(1, W, graph point) to the graph over the shifted noise.

    For each center point the graph value over W is computed, the point is
    flowed over [0, 1] and its stable part compared with h^c evaluated over
    shift_1 W at the flowed point's center coordinate; normalised by the norm
    of the flowed point.  Samples whose center coordinate leaves the ball are
    counted and excluded.
    """
    win0 = LPWindow.build(rough, k_past, rule)
    win1 = LPWindow.build(shift(rough, 1.0), k_past, rule)
    r1 = win1.radii[0].r
    flow_rad = rule.for_rough(rough)
    per, excluded = [], 0
    cm = space.center_mask
    for xi in center_points:
        xi = np.asarray(xi, dtype=float)
        if not np.any(xi):
            per.append(0.0)
            continue
        res0 = lp_solve(space, drift, diffusion, win0, gap, xi, alpha, lp_tol, **kw)
        p = res0.sequence.blocks[0].u[-1]
        q = picard_unit(space, drift, diffusion, flow_rad, p, rough, alpha=alpha, tol=flow_tol).path.u[-1]
        qc = np.where(cm, q, 0.0)
        if float(space.norm(qc, alpha)) > r1:
            excluded += 1
            continue
        res1 = lp_solve(space, drift, diffusion, win1, gap, qc, alpha, lp_tol, **kw)
        h1 = graph_hc(space, res1.sequence)
        per.append(float(space.norm(np.where(cm, 0.0, q) - h1, alpha)) / float(space.norm(q, alpha)))
    return InvarianceReport(max(per) if per else math.nan, per, excluded)


def write_graph(graph: ManifoldGraph, csv_name, json_name=None, meta: dict | None = None) -> None:
    with open(csv_name, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["direction_index", "radius", "mode", "h_coeff"])
        for d, r, h in zip(graph.direction_index, graph.radii, graph.h_values):
            for m, c in enumerate(h):
                out.writerow([int(d), format(r, ".17g"), m, format(c, ".17g")])
    if json_name is not None:
        with open(json_name, "w") as fh:
            json.dump(meta or {}, fh, indent=2, sort_keys=True)
