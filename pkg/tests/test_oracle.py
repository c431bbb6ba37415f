import math

import numpy as np
import pytest
import scipy.stats

from conftest import oracle
from roughcm.controlled import make_nonlinearity
from roughcm.dynamics import RadiusRule, solve_flow
from roughcm.oracle import (OracleError, deterministic_center_coeffs, doss_sussmann_solve, ou_path,
                            reduced_center_rhs, reduced_center_solve)
from roughcm.roughpath import SampledPath, lift_piecewise_linear, sample_gaussian_path
from roughcm.suites import dirichlet

SP = dirichlet(16)


def linear_driver(start, end, step, slope=1.0):
    t = start + step * np.arange(int(round((end - start) / step)) + 1)
    return SampledPath(t, slope * t, step)


def test_ou_zero_driver():
    drv = SampledPath(np.arange(-12.0, 2.0 + 1e-9, 0.25), np.zeros(57), 0.25)
    assert not ou_path(drv).z.any()


def test_ou_stationary_variance():
    n = 10_000
    z = np.array([ou_path(sample_gaussian_path(0.5, -10.0, 5.0, 2.0 ** -6, s)).at(5.0) for s in range(n)])
    assert abs(z.var() - 0.5) <= 3 * 0.5 * math.sqrt(2.0 / n)


def test_ou_linear_driver_limit():
    ou = ou_path(linear_driver(-10.0, 3.0, 2.0 ** -8))
    assert ou.at(3.0) == pytest.approx(1.0 - math.exp(-13.0), rel=1e-12)
    assert abs(ou.at(0.0) - 1.0) <= 1e-4


def test_ou_window_errors():
    with pytest.raises(OracleError):
        ou_path(linear_driver(-10.0, 1.0, 0.25), burn_in=5.0)
    with pytest.raises(OracleError):
        ou_path(linear_driver(-5.0, 1.0, 0.25))


def test_ou_step_halving():
    changes = {}
    for e in (10, 11, 12, 13):
        worst = 0.0
        for s in range(5):
            fine = sample_gaussian_path(0.5, -10.0, 5.0, 2.0 ** -(e + 1), s)
            coarse = SampledPath(fine.times[::2], fine.values[::2], 2.0 ** -e)
            worst = max(worst, float(np.abs(ou_path(fine).z[::2] - ou_path(coarse).z).max()))
        changes[e] = worst
    assert changes[13] <= 1e-4
    order = -scipy.stats.linregress(list(changes), np.log2(list(changes.values()))).slope
    assert order >= 0.5


def test_doss_zero_initial_value():
    drv = sample_gaussian_path(0.5, -10.0, 1.0, 2.0 ** -8, 0)
    assert not doss_sussmann_solve(SP, 1.0, 0.1, np.zeros(SP.N), drv).u.any()


def test_doss_without_noise_matches_pde_solver():
    h = 2.0 ** -10
    drv = linear_driver(-10.0, 1.0, h, slope=0.0)
    xi = SP.unit(0, 0.05) + SP.unit(2, 0.01)
    doss = doss_sussmann_solve(SP, 1.0, 0.0, xi, drv).u[-1]
    rp = lift_piecewise_linear(drv, 0.45)
    zero = make_nonlinearity(SP, "zero")
    pde = solve_flow(SP, make_nonlinearity(SP, "cubic_drift"), zero, RadiusRule(override=1.0), xi, rp, 1).final
    assert np.linalg.norm(doss - pde) <= 1e-6 * np.linalg.norm(doss)


def test_doss_requires_driver_length():
    drv = sample_gaussian_path(0.5, -10.0, 0.5, 2.0 ** -6, 0)
    with pytest.raises(OracleError):
        doss_sussmann_solve(SP, 1.0, 0.1, SP.unit(0, 0.05), drv)


def test_expansion_parity_and_linear_case():
    exp = deterministic_center_coeffs(SP, 1.0, [0.1, 0.05, 0.025])
    even = SP.wavenumbers % 2 == 0
    # zero up to collocation round-off
    assert np.abs(exp.coeffs[:, even]).max() <= 1e-12 * np.abs(exp.coeffs).max()
    assert np.abs(exp.order_terms[2:, even]).max() <= 1e-12 * np.abs(exp.order_terms[2:]).max()
    flat = deterministic_center_coeffs(SP, 0.0, [0.1, 0.05])
    assert not flat.coeffs.any()


def test_expansion_matches_fixture():
    b = [0.1, 0.05, 0.025]
    exp = deterministic_center_coeffs(SP, 1.0, b)
    i3 = SP.mode_index(3)
    ratios = exp.coeffs[:, i3] / np.array(b) ** 3
    assert (ratios.max() - ratios.min()) / ratios.mean() <= 0.02
    lead = oracle("c3_leading")
    assert abs(exp.leading_c3 - lead["value"]) / lead["value"] <= lead["tolerance"]
    for bb, r in zip(b, ratios):
        row = oracle("c3_over_b3", b=bb)
        assert abs(r - row["value"]) / row["value"] <= row["tolerance"]


def test_expansion_reduced_terms():
    g = deterministic_center_coeffs(SP, 1.0, [0.1]).reduced_terms
    assert g[3] == pytest.approx(-0.75, rel=1e-12)
    assert g[2] == 0.0 and g[4] == 0.0


def test_expansion_needs_dirichlet():
    from roughcm.spectral import SpectralModel, build_space
    with pytest.raises(OracleError):
        deterministic_center_coeffs(build_space(SpectralModel("torus_rd", 4)), 1.0, [0.1])


def test_reduced_rhs_examples():
    assert reduced_center_rhs(0.1, 0.0, 1.0, 1.0) == pytest.approx(-7.5e-4, rel=1e-14)
    assert reduced_center_rhs(0.0, 0.3, 1.0, 1.0) == 0.0
    assert reduced_center_rhs(0.1, 0.0, 0.0, 1.0) == pytest.approx(-7.5e-4, rel=1e-14)


def test_reduced_equation_tracks_full_pde():
    b0 = 0.1
    exp = deterministic_center_coeffs(SP, 1.0, [b0])
    xi = SP.unit(0, b0) + exp.coeffs[0]
    h = 2.0 ** -8
    drv = linear_driver(-10.0, 5.0, h, slope=0.0)
    rp = lift_piecewise_linear(drv, 0.45)
    zero = make_nonlinearity(SP, "zero")
    traj = solve_flow(SP, make_nonlinearity(SP, "cubic_drift"), zero, RadiusRule(override=1.0), xi, rp, 5)
    full = np.concatenate([[xi[0]]] + [blk.u[1:, 0] for blk in traj.blocks])
    times = h * np.arange(len(full))
    reduced = reduced_center_solve(b0, times)
    assert np.abs(full - reduced).max() <= 1e-3
