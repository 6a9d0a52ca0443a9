import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import boostlab as bl

SP_D0 = bl.ScaledParams(0.0, 1.0)
SP_D1 = bl.ScaledParams(0.25, 0.75)
GAINS = bl.PIGains(2.0, 1.0, 0.5)


def test_existence_condition_margin():
    check = bl.existence_condition(SP_D1, 1.0)
    assert check
    assert check.margin == pytest.approx(0.0625)


@given(st.floats(0.05, 5.0), st.floats(0.1, 10.0))
def test_existence_always_holds_without_resistance(d2, y):
    check = bl.existence_condition(bl.ScaledParams(0.0, d2), y)
    assert check.satisfied
    assert check.margin == pytest.approx(1 / (4 * y ** 2))


def test_existence_boundary_is_rejected():
    assert not bl.existence_condition(bl.ScaledParams(0.25, 1.0), 1.0)


@pytest.mark.parametrize('y', [0.0, -1.0])
def test_existence_needs_positive_reference(y):
    with pytest.raises(bl.ParameterDomainError):
        bl.existence_condition(SP_D1, y)


def test_physical_existence_condition():
    p = bl.PhysicalParams(L=1e-3, C=1e-3, R=0.5, G=0.5, E=10.0)
    assert bl.physical_existence_condition(p, 9.0)
    bad = bl.physical_existence_condition(p, 11.0)
    assert not bad
    assert bad.margin == pytest.approx(100 / (4 * 121) - 0.25)


def test_unique_equilibrium():
    (eq,) = bl.assignable_equilibria(SP_D0, 2.0)
    assert eq.branch is bl.Branch.UNIQUE
    assert (eq.x1_bar, eq.x2_bar, eq.u_bar) == pytest.approx((4.0, 2.0, 0.5))


def test_two_branches():
    low, high = bl.assignable_equilibria(SP_D1, 1.0)
    assert low.branch is bl.Branch.MINIMAL and high.branch is bl.Branch.MAXIMAL
    assert (low.x1_bar, low.x2_bar) == pytest.approx((1.0, 1.0))
    assert (high.x1_bar, high.x2_bar) == pytest.approx((3.0, 1.0))
    assert low.u_bar == pytest.approx(0.75)
    assert high.u_bar == pytest.approx(0.25)
    for eq in (low, high):
        np.testing.assert_allclose(bl.vector_field(SP_D1, (eq.x1_bar, eq.x2_bar), eq.u_bar), 0.0, atol=1e-14)


def test_no_equilibrium_carries_margin():
    with pytest.raises(bl.NoEquilibriumError) as info:
        bl.assignable_equilibria(bl.ScaledParams(0.25, 1.0), 1.0)
    assert info.value.margin == pytest.approx(0.0)
    assert info.value.exit_code == 3


@given(st.floats(1e-3, 2.0), st.floats(0.2, 5.0), st.floats(1e-3, 0.999))
def test_equilibria_are_fixed_points(d1, y, fraction):
    sp = bl.ScaledParams(d1, fraction / (4 * d1 * y ** 2))
    low, high = bl.assignable_equilibria(sp, y)
    assert low.x1_bar <= high.x1_bar
    for eq in (low, high):
        scale = max(1.0, eq.x1_bar)
        np.testing.assert_allclose(bl.vector_field(sp, (eq.x1_bar, y), eq.u_bar), 0.0, atol=1e-9 * scale)
        assert eq.u_bar == pytest.approx(bl.equilibrium_control(sp, eq.x1_bar, y))


def test_branches_merge_at_boundary():
    d1, y = 0.5, 1.0
    sp = bl.ScaledParams(d1, (1 - 1e-12) / (4 * d1 * y ** 2))
    low, high = bl.assignable_equilibria(sp, y)
    assert low.x1_bar == pytest.approx(1 / (2 * d1), rel=1e-5)
    assert high.x1_bar == pytest.approx(1 / (2 * d1), rel=1e-5)


@pytest.mark.parametrize('sp, y, expected', [
    (SP_D0, 2.0, [(4.0, 2.0, 0.0)]),
    (SP_D1, 1.0, [(1.0, 1.0, 0.25), (3.0, 1.0, -0.25)]),
])
def test_pi_equilibria(sp, y, expected):
    points = bl.pi_equilibria(sp, y, GAINS)
    assert [tuple(eq.vector) for eq in points] == [pytest.approx(e) for e in expected]


def test_pi_equilibrium_control_matches_plant():
    for eq in bl.pi_equilibria(SP_D1, 1.0, GAINS):
        u, xc_dot = bl.pi_control(GAINS, 1.0, eq.x2_bar, eq.x3_bar)
        assert u == pytest.approx(eq.u_bar)
        assert xc_dot == 0.0


@pytest.mark.parametrize('bias, x3', [('deviation', 0.0), ('literal', -1.0)])
def test_pid_pbc_equilibrium(bias, x3):
    eq = bl.pid_pbc_equilibrium(SP_D0, 1.0, bl.PbcConfig(x1_star=1.0, bias=bias))
    assert eq.branch is bl.Branch.UNIQUE
    assert tuple(eq.vector) == pytest.approx((1.0, 1.0, x3))


def test_pid_pbc_equilibrium_picks_branch():
    eq = bl.pid_pbc_equilibrium(SP_D1, 1.0, bl.PbcConfig(x1_star=1.0))
    assert eq.branch is bl.Branch.MINIMAL
    with pytest.raises(bl.NoEquilibriumError):
        bl.pid_pbc_equilibrium(SP_D1, 1.0, bl.PbcConfig(x1_star=2.0))


@pytest.mark.parametrize('sp, x, value, side', [
    (SP_D0, (3.9, 2.0), -0.1, 'below'),
    (SP_D0, (4.1, 2.0), 0.1, 'above'),
    (SP_D1, (1.0, 1.0), 0.0, 'on'),
])
def test_separatrix_residual(sp, x, value, side):
    res = bl.separatrix_residual(sp, x)
    assert float(res.value) == pytest.approx(value, abs=1e-12)
    assert res.side == side


@given(st.floats(0.0, 2.0), st.floats(0.05, 5.0), st.floats(-10, 10), st.floats(-10, 10))
def test_separatrix_is_zero_set_of_power_balance(d1, d2, x1, x2):
    sp = bl.ScaledParams(d1, d2)
    surface = bl.Surface.SU
    assert float(bl.separatrix_residual(sp, (x1, x2), surface).value) == pytest.approx(bl.power_balance(sp, (x1, x2)), abs=1e-9)


@given(st.floats(0.05, 5.0), st.floats(-10, 10), st.floats(-10, 10))
def test_lossless_separatrix_is_zero_set_of_power_balance(d2, x1, x2):
    sp = bl.ScaledParams(0.0, d2)
    res = bl.separatrix_residual(sp, (x1, x2))
    assert float(res.value) == pytest.approx(float(bl.separatrix_residual(sp, (x1, x2), bl.Surface.S0).value))
    assert float(res.value) == pytest.approx(bl.power_balance(sp, (x1, x2)), abs=1e-9)
