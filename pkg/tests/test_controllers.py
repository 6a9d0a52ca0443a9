import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import boostlab as bl


def test_pi_control_at_equilibrium():
    u, xc_dot = bl.pi_control(bl.PIGains(2.0, 1.0, 0.5), 2.0, 2.0, 0.0)
    assert u == pytest.approx(0.5)
    assert xc_dot == 0.0


@given(st.floats(0, 10), st.floats(0.01, 10), st.floats(-2, 2), st.floats(0.1, 5))
def test_pi_control_zero_error_returns_bias(K_P, K_I, u0, y):
    u, _ = bl.pi_control(bl.PIGains(K_P, K_I, u0), y, y, 0.0)
    assert u == pytest.approx(u0)


def test_pi_control_matches_stable_equilibrium():
    u, _ = bl.pi_control(bl.PIGains(2.0, 1.0, 0.5), 1.0, 1.0, -0.25)
    high = bl.assignable_equilibria(bl.ScaledParams(0.25, 0.75), 1.0)[1]
    assert u == pytest.approx(0.25)
    assert u == pytest.approx(high.u_bar)


def test_pi_control_vectorized():
    g = bl.PIGains(1.0, 2.0)
    u, xc_dot = bl.pi_control(g, 1.0, np.array([0.5, 1.0, 1.5]), np.array([0.0, 1.0, -1.0]))
    np.testing.assert_allclose(u, [0.5, 2.0, -2.5])
    np.testing.assert_allclose(xc_dot, [0.5, 0.0, -0.5])


@pytest.mark.parametrize('kwargs', [dict(K_P=-1, K_I=1), dict(K_P=1, K_I=0), dict(K_P=1, K_I=1, u0=float('nan'))])
def test_pi_gains_domain(kwargs):
    with pytest.raises(bl.ParameterDomainError):
        bl.PIGains(**kwargs)


@given(st.floats(0.01, 0.99), st.floats(0.1, 5))
def test_ida_alpha_equilibrium_value(alpha, y):
    assert bl.ida_alpha_control(alpha, y, y) == pytest.approx(1 / y)


def test_ida_alpha_example():
    assert bl.ida_alpha_control(0.5, 2.0, 8.0) == pytest.approx(1.0)


def test_ida_alpha_small_exponent_limit():
    x2 = np.array([0.1, 1.0, 10.0])
    np.testing.assert_allclose(bl.ida_alpha_control(1e-9, 2.0, x2), 0.5, rtol=1e-6)


@pytest.mark.parametrize('x2', [0.0, -1.0, np.array([1.0, -0.1])])
def test_ida_alpha_domain(x2):
    with pytest.raises(bl.ControlDomainError):
        bl.ida_alpha_control(0.5, 1.0, x2)


@pytest.mark.parametrize('alpha', [0.0, 1.0, 1.5])
def test_ida_alpha_exponent_domain(alpha):
    with pytest.raises(bl.ParameterDomainError):
        bl.ida_alpha_control(alpha, 1.0, 1.0)


@given(st.floats(3.01, 50), st.floats(0.1, 5))
def test_ida_k_equilibrium_value(k, y):
    assert bl.ida_k_control(k, y, y) == pytest.approx(1 / y)


@pytest.mark.parametrize('x2, expected', [(2.0, 8 / 7), (0.0, 0.0)])
def test_ida_k_examples(x2, expected):
    assert bl.ida_k_control(4.0, 1.0, x2) == pytest.approx(expected)


def test_ida_k_gain_domain():
    with pytest.raises(bl.ParameterDomainError):
        bl.ida_k_control(3.0, 1.0, 1.0)


def test_passive_output():
    assert bl.passive_output(1.0, 1.0, 1.2, 0.8) == pytest.approx(0.4)


def test_pid_pbc_example():
    cfg = bl.PbcConfig(x1_star=1.0, K_P=1.0, K_I=1.0, bias='literal').resolve(bl.ScaledParams(0.0, 1.0), 1.0)
    u, y_pi = bl.pid_pbc_control(cfg, 1.0, 1.2, 0.8, 0.0)
    assert y_pi == pytest.approx(0.4)
    assert u == pytest.approx(-0.4)


def test_pid_pbc_zero_action_at_equilibrium():
    cfg = bl.PbcConfig(x1_star=1.0, bias='literal').resolve(bl.ScaledParams(0.0, 1.0), 1.0)
    u, y_pi = bl.pid_pbc_control(cfg, 1.0, 1.0, 1.0, 0.0)
    assert y_pi == 0.0
    assert u == 0.0


def test_pbc_resolve_defaults():
    sp = bl.ScaledParams(0.0, 1.0)
    cfg = bl.PbcConfig().resolve(sp, 2.0)
    assert cfg.x1_star == pytest.approx(4.0)
    assert cfg.u_ff == pytest.approx(0.5)
    assert bl.PbcConfig(bias=bl.Bias.LITERAL).resolve(sp, 2.0).u_ff == 0.0


def test_pid_pbc_needs_resolved_reference():
    with pytest.raises(bl.ParameterDomainError):
        bl.pid_pbc_control(bl.PbcConfig(), 1.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize('kwargs', [dict(alpha=1.0), dict(k=3.0), dict(x1_star=-1.0), dict(K_P=0.0), dict(bias='other')])
def test_pbc_config_domain(kwargs):
    with pytest.raises(ValueError):
        bl.PbcConfig(**kwargs)


def test_controllers_accept_integrator_state():
    g = bl.PIGains(2.0, 1.0, 0.5)
    assert bl.pi_control(g, 1.0, 1.0, bl.ControllerState(-0.25)) == bl.pi_control(g, 1.0, 1.0, -0.25)
    cfg = bl.PbcConfig(x1_star=1.0).resolve(bl.ScaledParams(0.0, 1.0), 1.0)
    u, _ = bl.pid_pbc_control(cfg, 1.0, 1.0, 1.0, bl.ControllerState(0.5))
    assert u == pytest.approx(cfg.u_ff - 0.5)


def _slope(f, x, i, h):
    lo, hi = list(x), list(x)
    lo[i] -= h
    hi[i] += h
    curvature = f(*hi) - 2 * f(*x) + f(*lo)
    return (f(*hi) - f(*lo)) / (2 * h), curvature


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 1.0))
def test_pi_control_is_affine(x2, xc, h):
    g = bl.PIGains(2.0, 1.0, 0.5)

    def u(a, b):
        return float(bl.pi_control(g, 1.0, a, b).u)

    for i, expected in ((0, -g.K_P), (1, g.K_I)):
        slope, curvature = _slope(u, (x2, xc), i, h)
        assert slope == pytest.approx(expected, abs=1e-9)
        assert curvature == pytest.approx(0.0, abs=1e-9)


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-5, 5), st.floats(0.01, 1.0))
def test_pid_pbc_control_is_affine(x2, x1_hat, xc, h):
    cfg = bl.PbcConfig(x1_star=2.0, K_P=0.7, K_I=1.3).resolve(bl.ScaledParams(0.0, 1.0), 1.5)

    def u(a, b, c):
        return float(bl.pid_pbc_control(cfg, 1.5, a, b, c).u)

    for i, expected in ((0, -cfg.K_P * cfg.x1_star), (1, cfg.K_P * 1.5), (2, -cfg.K_I)):
        slope, curvature = _slope(u, (x2, x1_hat, xc), i, h)
        assert slope == pytest.approx(expected, abs=1e-9)
        assert curvature == pytest.approx(0.0, abs=1e-9)
