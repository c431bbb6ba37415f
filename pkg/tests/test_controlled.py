import numpy as np
import pytest
from hypothesis import given, strategies as st

from roughcm.controlled import (DEFAULT_PROFILE, ControlledPath, Nonlinearity, compose, crp_norm, cutoff,
                                empirical_lipschitz, make_nonlinearity, random_controlled, remainder,
                                zero_controlled)
from roughcm.roughpath import holder_seminorms, linear_path
from roughcm.suites import brownian_lift, dirichlet

SP = dirichlet(8)
RP = brownian_lift(3, 0.0, 1.0, 2.0 ** -7)


def rand_cp(seed, rp=RP, alpha=0.5):
    return random_controlled(SP, rp, alpha, np.random.default_rng(seed))


def constant_cp(v, rp=RP, alpha=0.0):
    n = int(round(1.0 / rp.step)) + 1
    u = np.tile(v, (n, 1))
    return ControlledPath(u, np.zeros_like(u), alpha, rp.gamma, rp)


def test_remainder_examples():
    v = SP.unit(2, 0.7)
    assert not remainder(constant_cp(v), 0.25, 0.75).any()
    w = RP.window(0.0, 1.0)[0]
    w = w - w[0]
    exact = ControlledPath(w[:, None] * v, np.tile(v, (len(w), 1)), 0.0, RP.gamma, RP)
    assert np.abs(remainder(exact, 0.125, 0.875)).max() <= 1e-15
    assert not remainder(rand_cp(0), 0.5, 0.5).any()
    with pytest.raises(KeyError):
        remainder(exact, 0.5, 0.25)


@given(st.integers(0, 1000), st.integers(0, 1000))
def test_remainder_is_additive(s1, s2):
    a, b = rand_cp(s1), rand_cp(s2)
    for s, t in ((0.0, 1.0), (0.25, 0.5)):
        assert np.allclose(remainder(a + b, s, t), remainder(a, s, t) + remainder(b, s, t), atol=1e-14)


def test_crp_norm_examples():
    z = crp_norm(SP, zero_controlled(SP, RP, 0.5))
    assert z.total == 0.0
    v = SP.unit(1) / SP.weights[1] ** 0.5
    n = crp_norm(SP, constant_cp(v, alpha=0.5))
    assert n.total == pytest.approx(1.0, rel=1e-14)
    parts = crp_norm(SP, rand_cp(5))
    assert parts.total == (parts.sup_u_alpha + parts.sup_gub_alpha_minus_gamma
                           + parts.holder_gub_alpha_minus_2gamma + parts.holder2_rem_alpha_minus_2gamma)


@pytest.mark.parametrize("theta_mult", [1, 2])
def test_derived_holder_bound(theta_mult):
    rp = brownian_lift(8, 0.0, 1.0, 2.0 ** -6)
    w = rp.window(0.0, 1.0)[0]
    w_gamma = holder_seminorms(rp, mode="exhaustive").w_gamma
    g = rp.gamma
    rng = np.random.default_rng(1)
    for _ in range(100):
        cp = random_controlled(SP, rp, 0.5, rng)
        a = cp.alpha - theta_mult * g
        i, j = np.triu_indices(len(w), 1)
        dt = (j - i) * rp.step
        du = SP.norm(cp.u[j] - cp.u[i], a) / dt ** g
        rem = SP.norm(cp.u[j] - cp.u[i] - cp.gub[i] * (w[j] - w[i])[:, None], a) / dt ** g
        bound = SP.norm(cp.gub, a).max() * w_gamma + rem.max()
        assert du.max() <= bound * (1 + 1e-12)


def test_cutoff_profile_boundary_conditions():
    f = DEFAULT_PROFILE
    assert f(0.5) == pytest.approx(1.0, abs=1e-12) and f(1.0) == pytest.approx(0.0, abs=1e-12)
    for order in (1, 2, 3):
        for x in (0.5, 1.0):
            assert abs(f.derivative(x, order)) <= 1e-9
    xs = np.linspace(0.5, 1.0, 201)
    vals = np.array([f(x) for x in xs])
    assert np.all(np.diff(vals) <= 1e-15) and vals.min() >= 0.0


def test_cutoff_cases():
    cp = rand_cp(2)
    m = crp_norm(SP, cp).total
    assert cutoff(SP, cp, 2.0 * m) is cp
    assert not cutoff(SP, cp, m).u.any()
    out = cutoff(SP, cp, m / 0.75)
    fac = DEFAULT_PROFILE(0.75)
    assert 0.0 < fac < 1.0
    assert np.allclose(out.u, fac * cp.u, rtol=1e-15, atol=0)
    assert np.allclose(remainder(out, 0.25, 0.75), fac * remainder(cp, 0.25, 0.75), rtol=1e-14, atol=1e-16)
    with pytest.raises(ValueError):
        cutoff(SP, cp, 0.0)


@given(st.integers(0, 500), st.floats(0.05, 5.0))
def test_cutoff_does_not_increase_norm(seed, ratio):
    cp = rand_cp(seed)
    m = crp_norm(SP, cp).total
    assert crp_norm(SP, cutoff(SP, cp, ratio * m)).total <= m * (1 + 1e-12)


def test_compose_examples():
    cp = rand_cp(4)
    zero = compose(make_nonlinearity(SP, "zero"), cp)
    assert not zero.u.any() and not zero.gub.any()
    lin = compose(Nonlinearity("linear_diffusion", SP, coeff=0.3), cp)
    assert np.array_equal(lin.u, 0.3 * cp.u) and np.array_equal(lin.gub, 0.3 * cp.gub)
    cub = make_nonlinearity(SP, "poly_diffusion", 1.0, gamma=0.45)
    const = compose(cub, constant_cp(SP.unit(0, 0.2)))
    assert np.allclose(const.u[0], cub.value(SP.unit(0, 0.2)), rtol=1e-14, atol=1e-17)
    assert not const.gub.any()
    assert const.alpha == pytest.approx(-0.045)


def test_linear_compose_commutes_with_cutoff():
    cp = rand_cp(6)
    lin = Nonlinearity("linear_diffusion", SP, coeff=0.7)
    r = 1.3 * crp_norm(SP, cp).total
    a = compose(lin, cutoff(SP, cp, r))
    b = cutoff(SP, cp, r).scaled(0.7)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.gub, b.gub)


def test_cubic_sine_identity():
    # sin^3 x = (3 sin x - sin 3x) / 4
    g = Nonlinearity("poly_diffusion", SP)
    out = g.value(SP.unit(0))
    expect = np.zeros(SP.N)
    expect[0], expect[2] = 0.75, -0.25
    assert np.allclose(out, expect, atol=1e-14)


@pytest.mark.parametrize("kind", ["poly_diffusion", "kernel_diffusion", "cubic_drift"])
def test_third_order_vanishing_at_origin(kind):
    g = make_nonlinearity(SP, kind)
    assert max(g.origin_conditions()) <= 1e-14
    rng = np.random.default_rng(0)
    for _ in range(5):
        v = rng.standard_normal(SP.N)
        v /= np.linalg.norm(v)
        ratios = [np.linalg.norm(g.value(eps * v)) / eps ** 3 for eps in (1e-1, 1e-2, 1e-3)]
        assert max(ratios) <= 10.0
        assert ratios[0] == pytest.approx(ratios[2], rel=1e-9)


def test_derivatives_match_finite_differences():
    g = make_nonlinearity(SP, "kernel_diffusion")
    rng = np.random.default_rng(2)
    u, v = rng.standard_normal(SP.N) * 0.3, rng.standard_normal(SP.N)
    h = 1e-6
    fd = (g.value(u + h * v) - g.value(u - h * v)) / (2 * h)
    assert np.allclose(g.deriv(u, v), fd, atol=1e-8)


def test_unknown_kind():
    with pytest.raises(ValueError):
        Nonlinearity("quartic", SP)


def test_lipschitz_of_zero_diffusion():
    zero = make_nonlinearity(SP, "zero")
    assert empirical_lipschitz(SP, "diffusion", 1.0, 10, 0, zero, zero, RP) == 0.0
    with pytest.raises(ValueError):
        empirical_lipschitz(SP, "diffusion", 1.0, 5, 0, zero, zero, RP)


@pytest.mark.parametrize("which", ["drift", "diffusion"])
def test_lipschitz_decays_with_radius(which):
    drift = make_nonlinearity(SP, "cubic_drift")
    diff = make_nonlinearity(SP, "poly_diffusion", 0.5, gamma=0.45)
    rp = linear_path(0.0, 1.0, 2.0 ** -6, gamma=0.45) if which == "drift" else RP
    est = [empirical_lipschitz(SP, which, r, 10, 0, drift, diff, rp) for r in (1.0, 0.5, 0.25, 0.125)]
    assert all(b <= a for a, b in zip(est, est[1:]))
