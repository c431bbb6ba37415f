"""Reference computations that do not go through the rough integration code.

* stationary Ornstein-Uhlenbeck path driven by a sampled path;
* the pathwise conjugation u = v exp(sigma z) that turns linear multiplicative
  noise into a random ODE, integrated by a Lawson Runge-Kutta scheme;
* the order-by-order polynomial expansion of the deterministic center
  manifold of the cubic Dirichlet model, and its reduced equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.signal

from .roughpath import SampledPath
from .spectral import SpectralSpace

MIN_BURN_IN = 10.0


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OuPath:
    times: np.ndarray
    z: np.ndarray
    step: float

    def at(self, t: float) -> float:
        k = int(round((t - self.times[0]) / self.step))
        return float(self.z[k])


def ou_path(driver: SampledPath, burn_in: float = MIN_BURN_IN) -> OuPath:
    """z with dz = -z dt + dB, started at zero at time -burn_in, returned on [0, T].

    Per step the driver is linear, so the stochastic convolution over the step
    is exactly dB (1 - e^-h) / h.
    """
    if burn_in < MIN_BURN_IN:
        raise OracleError(f"burn_in must be at least {MIN_BURN_IN}")
    h = driver.step
    start = int(round((-burn_in - driver.times[0]) / h))
    origin = int(round(-driver.times[0] / h))
    if start < 0 or driver.times[0] > -burn_in + 1e-9 * h:
        raise OracleError("driver does not cover the burn-in window")
    db = np.diff(driver.values[start:])
    decay = math.exp(-h)
    gain = -math.expm1(-h) / h
    z = np.concatenate([[0.0], scipy.signal.lfilter([gain], [1.0, -decay], db)])
    z = z[origin - start:]
    return OuPath(times=driver.times[origin:], z=z, step=h)


def _ou_inside_step(z0: float, slope: float, s: float) -> float:
    """OU value a time s into a step whose driver increment rate is ``slope``."""
    return math.exp(-s) * z0 - math.expm1(-s) * slope


@dataclass(frozen=True)
class DossResult:
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray


def doss_sussmann_solve(space: SpectralSpace, a: float, sigma: float, xi: np.ndarray,
                        driver: SampledPath, t_end: float = 1.0, burn_in: float = MIN_BURN_IN) -> DossResult:
    """Solve du = (Au - a u^3) dt + sigma u dB through v = u exp(-sigma z).

    v solves v' = Av + sigma z v - a exp(2 sigma z) v^3 pathwise; it is
    integrated with classical RK4 in the integrating-factor variable
    exp(-At) v at the driver's step, with z evaluated exactly inside steps.
    """
    ou = ou_path(driver, burn_in)
    h = driver.step
    n = int(round(t_end / h))
    if n > len(ou.z) - 1:
        raise OracleError("driver too short for t_end")
    lam = space.eigenvalues
    e_half, e_full = np.exp(lam * h / 2), np.exp(lam * h)
    origin = int(round(-driver.times[0] / h))
    db = np.diff(driver.values[origin: origin + n + 1])

    def rhs(v, zt):
        return sigma * zt * v - a * math.exp(2 * sigma * zt) * space.from_nodes(space.to_nodes(v) ** 3)

    v = np.zeros((n + 1, space.N))
    v[0] = np.asarray(xi, dtype=float) * math.exp(-sigma * ou.z[0])
    for k in range(n):
        z0, slope = ou.z[k], db[k] / h
        zm, z1 = _ou_inside_step(z0, slope, h / 2), ou.z[k + 1]
        x = v[k]
        k1 = rhs(x, z0)
        k2 = rhs(e_half * (x + 0.5 * h * k1), zm)
        k3 = rhs(e_half * x + 0.5 * h * k2, zm)
        k4 = rhs(e_full * x + h * e_half * k3, z1)
        v[k + 1] = e_full * x + (h / 6) * (e_full * k1 + 2 * e_half * (k2 + k3) + k4)
        if not np.all(np.isfinite(v[k + 1])):
            raise OracleError(f"integrator blew up at step {k}")
    z = ou.z[: n + 1]
    u = v * np.exp(sigma * z)[:, None]
    return DossResult(times=h * np.arange(n + 1), u=u, v=v, z=z)


@dataclass(frozen=True)
class CenterExpansion:
    b_samples: np.ndarray
    coeffs: np.ndarray          # c_n(b), one row per b sample
    order_terms: np.ndarray     # H_p, row p is the b**p coefficient vector
    reduced_terms: np.ndarray   # g_p of the reduced equation b' = sum g_p b**p
    leading_c3: float


def _poly_cube(vals: np.ndarray, order: int) -> np.ndarray:
    """Cube of a polynomial in b with nodal coefficient rows, truncated at ``order``."""
    sq = np.zeros_like(vals)
    for p in range(order + 1):
        for q in range(p + 1):
            sq[p] += vals[q] * vals[p - q]
    cu = np.zeros_like(vals)
    for p in range(order + 1):
        for q in range(p + 1):
            cu[p] += sq[q] * vals[p - q]
    return cu


def deterministic_center_coeffs(space: SpectralSpace, a: float, b_samples, order: int = 5) -> CenterExpansion:
    """Polynomial center manifold of u' = Au - a u^3 over the sin x mode.

    With u = b e + H(b) and b' = g(b), invariance gives per order p

        A_s H_p = sum_q q H_q g_{p-q+1} - [P^s N]_p,   g_p = [P^c N]_p,

    where N(u) = -a u^3 is evaluated on polynomial nodal values.
    """
    if space.model.kind != "dirichlet_rd":
        raise OracleError("expansion is built for the Dirichlet model")
    cm = space.center_mask
    if space.center_dim != 1:
        raise OracleError("expected a one-dimensional center")
    lam_s = np.where(cm, 1.0, space.eigenvalues)
    if np.any(lam_s == 0):
        raise OracleError("ansatz system singular")
    e = cm.astype(float)
    coef = np.zeros((order + 1, space.N))
    coef[1] = e
    g = np.zeros(order + 1)
    for p in range(2, order + 1):
        nodal = space.to_nodes(coef)
        nonlin = -a * space.from_nodes(_poly_cube(nodal, order))[p]
        g[p] = float(nonlin[cm][0])
        acc = np.zeros(space.N)
        for q in range(2, p):
            acc += q * coef[q] * g[p - q + 1]
        coef[p] = np.where(cm, 0.0, (acc - nonlin) / lam_s)
    bs = np.asarray(list(b_samples), dtype=float)
    powers = bs[:, None] ** np.arange(order + 1)[None, :]
    coeffs = powers[:, 2:] @ coef[2:]
    i3 = space.mode_index(3)
    return CenterExpansion(bs, coeffs, coef, g, float(coef[3, i3]))


def reduced_center_rhs(b: float, z: float, sigma: float, a: float) -> float:
    """sigma z b - (3/4) a b^3 exp(2 sigma z)."""
    return sigma * z * b - 0.75 * a * b ** 3 * math.exp(2 * sigma * z)


def reduced_center_solve(b0: float, times, a: float = 1.0, sigma: float = 0.0,
                         z_of_t=None) -> np.ndarray:
    """Integrate the truncated reduced equation; z defaults to zero."""
    zf = (lambda t: 0.0) if z_of_t is None else z_of_t
    times = np.asarray(times, dtype=float)
    sol = scipy.integrate.solve_ivp(lambda t, y: [reduced_center_rhs(y[0], zf(t), sigma, a)],
                                    (times[0], times[-1]), [b0], t_eval=times,
                                    rtol=1e-12, atol=1e-15, method="DOP853")
    if not sol.success:
        raise OracleError(sol.message)
    return sol.y[0]
