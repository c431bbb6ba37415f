import csv

import numpy as np
import pytest

from roughcm.controlled import make_nonlinearity
from roughcm.dynamics import (RadiusRule, SolverError, TruncationRadius, cocycle_defect, fixed_radius,
                              picard_unit, solve_flow, solve_unit, truncation_radius, write_trajectory_csv)
from roughcm.roughpath import holder_seminorms
from roughcm.suites import brownian_lift, dirichlet

SP = dirichlet(8)
RP = brownian_lift(0, -1.0, 3.0, 2.0 ** -8)
ZERO = make_nonlinearity(SP, "zero")
DRIFT = make_nonlinearity(SP, "cubic_drift")
DIFF = make_nonlinearity(SP, "poly_diffusion", 0.5, gamma=0.45)
RULE = RadiusRule(override=1.0)
XI = SP.unit(0, 0.05) + SP.unit(2, 0.01)


def test_zero_coefficients_give_free_flow():
    sol = picard_unit(SP, ZERO, ZERO, fixed_radius(1.0), XI, RP)
    assert sol.iterations == 1
    assert np.allclose(sol.path.u, SP.propagate(sol.path.times[:, None], XI), rtol=1e-15, atol=0)
    assert not sol.path.gub.any()


def test_origin_is_a_steady_state():
    for diff in (DIFF, make_nonlinearity(SP, "kernel_diffusion", 0.5, gamma=0.45)):
        traj = solve_flow(SP, DRIFT, diff, RULE, np.zeros(SP.N), RP, 2)
        assert all(not b.u.any() and not b.gub.any() for b in traj.blocks)


def test_fixed_point_residual_and_start():
    sol = picard_unit(SP, DRIFT, DIFF, fixed_radius(1.0), XI, RP, tol=1e-12)
    assert sol.residual <= 1e-12
    assert np.array_equal(sol.path.u[0], XI)
    d = sol.distances
    assert all(b < a for a, b in zip(d[1:], d[2:]))


def test_single_block_flow_matches_unit_solve():
    traj = solve_flow(SP, DRIFT, DIFF, RULE, XI, RP, 1)
    unit = solve_unit(SP, DRIFT, DIFF, fixed_radius(1.0), XI, RP)
    assert np.array_equal(traj.blocks[0].u, unit.u)


def test_blocks_chain_exactly():
    traj = solve_flow(SP, DRIFT, DIFF, RULE, XI, RP, 3)
    for a, b in zip(traj.blocks, traj.blocks[1:]):
        assert np.array_equal(a.u[-1], b.u[0])


def test_flow_is_deterministic():
    a = solve_flow(SP, DRIFT, DIFF, RULE, XI, RP, 2)
    b = solve_flow(SP, DRIFT, DIFF, RULE, XI, brownian_lift(0, -1.0, 3.0, 2.0 ** -8), 2)
    assert all(np.array_equal(x.u, y.u) for x, y in zip(a.blocks, b.blocks))


def test_cocycle_examples():
    assert cocycle_defect(SP, DRIFT, DIFF, RULE, XI, RP, 1, 0) == 0.0
    assert cocycle_defect(SP, ZERO, ZERO, RULE, XI, RP, 1, 1) <= 1e-12
    phi2 = solve_flow(SP, DRIFT, DIFF, RULE, XI, RP, 2).final
    d = cocycle_defect(SP, DRIFT, DIFF, RULE, XI, RP, 1, 1)
    assert d <= 1e-6 * SP.norm(phi2, 0.0)


def test_flow_needs_noise_window():
    with pytest.raises(KeyError):
        solve_flow(SP, DRIFT, DIFF, RULE, XI, RP, 5)


def test_non_contraction_is_reported():
    big = make_nonlinearity(SP, "cubic_drift", 1e2)
    with pytest.raises(SolverError) as info:
        picard_unit(SP, big, ZERO, fixed_radius(1.0), SP.unit(0, 0.3), RP, max_iter=20)
    assert len(info.value.distances) == 2


def test_truncation_radius_arithmetic():
    k, one = 0.2, (lambda rho: 1.0)
    r = truncation_radius(1.0, k, c_f=k, c_g=9 * k, c_tilde_fit=one)
    assert r.r == pytest.approx(0.1, rel=1e-14)
    assert r.denominator * r.r_tilde == pytest.approx(k, rel=1e-15)
    capped = truncation_radius(1.0, k, c_f=k / 4, c_g=k / 4, c_tilde_fit=one)
    assert capped.r == 1.0 and capped.r_tilde == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(ZeroDivisionError):
        truncation_radius(1.0, k, 0.0, 0.0)
    with pytest.raises(ValueError):
        truncation_radius(1.0, -1.0, 1.0, 1.0)


def test_radius_rule_uses_block_norm():
    rule = RadiusRule(k_target=0.01, c_f=0.5, c_g=0.3)
    rho = holder_seminorms(RP, (0.0, 1.0)).rho
    r = rule.for_rough(RP)
    assert isinstance(r, TruncationRadius)
    assert r.r_tilde == pytest.approx(0.01 / (0.5 + 0.3 * (1 + rho + rho * rho)), rel=1e-14)


def test_trajectory_csv(tmp_path):
    traj = solve_flow(SP, DRIFT, DIFF, RULE, XI, RP, 2)
    fn = tmp_path / "traj.csv"
    write_trajectory_csv(traj, fn)
    with open(fn) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["block", "time", "mode", "coeff", "gub_coeff"]
    n = len(traj.blocks[0].times)
    assert len(rows) - 1 == 2 * n * SP.N
    last = rows[-1]
    assert float(last[1]) == 2.0 and float(last[3]) == traj.final[-1]
