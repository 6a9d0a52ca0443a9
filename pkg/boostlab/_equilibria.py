######################################################
# EQUILIBRIA : Assignable and closed-loop equilibria #
######################################################
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from ._errors import NoEquilibriumError, ParameterDomainError
from ._model import vector_field

__all__ = [
    'Branch',
    'EquilibriumPoint',
    'ExistenceCheck',
    'Surface',
    'SeparatrixResidual',
    'existence_condition',
    'physical_existence_condition',
    'equilibrium_control',
    'assignable_equilibria',
    'pi_equilibria',
    'pid_pbc_equilibrium',
    'separatrix_residual',
]
log = logging.getLogger(__name__)


class Branch(Enum):
    """ Equilibrium branch, named after the inductor current it carries. """
    UNIQUE = 'unique'
    MINIMAL = 'minimal-current'
    MAXIMAL = 'maximal-current'


@dataclass(frozen=True)
class EquilibriumPoint:
    """
    Equilibrium of the plant or of a closed loop.

    Args:
        x1_bar (float):
            Scaled current
        x2_bar (float):
            Scaled voltage, equal to the reference y*
        u_bar (float):
            Constant control that holds the plant at (x1_bar, x2_bar)
        branch (Branch):
            Which assignable equilibrium this is
        x3_bar (float, optional):
            Integrator state, only for loops with an integrator
    """
    x1_bar: float
    x2_bar: float
    u_bar: float
    branch: Branch
    x3_bar: Optional[float] = None

    @property
    def vector(self):
        if self.x3_bar is None:
            return np.array([self.x1_bar, self.x2_bar])
        return np.array([self.x1_bar, self.x2_bar, self.x3_bar])

    def __str__(self):
        coords = ', '.join(f'{v:.6g}' for v in self.vector)
        return f'{self.branch.value}({coords})'


class ExistenceCheck(NamedTuple):
    """ Outcome of the existence test, truthy when equilibria exist. """
    satisfied: bool
    margin: float

    def __bool__(self):
        return bool(self.satisfied)


def _check_reference(y_star, name='y_star'):
    if not (math.isfinite(y_star) and y_star > 0):
        raise ParameterDomainError(f'{name} must be finite and > 0, got {y_star!r}')


def existence_condition(sp, y_star):
    """
    Check that constant controls can assign x2 = y*, ie. d1*d2 < 1/(4y*^2).
    Equality is rejected: the two branches merge there and the double root is excluded.

    Args:
        sp (ScaledParams):
            Scaled parameters
        y_star (float):
            Voltage reference, > 0

    Returns:
        ExistenceCheck: flag and margin 1/(4y*^2) - d1*d2
    """
    _check_reference(y_star)
    margin = 1.0 / (4.0 * y_star ** 2) - sp.d1 * sp.d2
    return ExistenceCheck(margin > 0, margin)


def physical_existence_condition(p, v_star):
    """
    Same test in circuit quantities: R*G < E^2/(4 v*^2).

    Args:
        p (PhysicalParams):
            Circuit constants
        v_star (float):
            Capacitor voltage reference [V]
    """
    _check_reference(v_star, 'v_star')
    margin = p.E ** 2 / (4.0 * v_star ** 2) - p.R * p.G
    return ExistenceCheck(margin > 0, margin)


def equilibrium_control(sp, x1_bar, y_star):
    """ Constant control ``-[(d1 - d2)*x1 - 1]*y* / (x1^2 + y*^2)`` of the equilibrium (x1_bar, y*). """
    return -((sp.d1 - sp.d2) * x1_bar - 1.0) * y_star / (x1_bar ** 2 + y_star ** 2)


def assignable_equilibria(sp, y_star):
    """
    Equilibria of the plant with x2 = y*, reachable with a constant control.

    For d1 = 0 there is a single point (d2*y*^2, y*) with u = 1/y*.
    For d1 > 0 there are two, with x1 = (1/2 -+ r)/d1 and r = sqrt(1 - 4*d1*d2*y*^2)/2.

    Args:
        sp (ScaledParams):
            Scaled parameters
        y_star (float):
            Voltage reference, > 0

    Returns:
        list: EquilibriumPoint objects, minimal current branch first

    Raises:
        NoEquilibriumError: if d1 > 0 and the existence condition fails
    """
    check = existence_condition(sp, y_star)
    if sp.d1 == 0:
        return [EquilibriumPoint(sp.d2 * y_star ** 2, y_star, 1.0 / y_star, Branch.UNIQUE)]

    if not check:
        raise NoEquilibriumError(
            f'd1*d2 = {sp.d1 * sp.d2:.6g} must be below 1/(4y*^2) = {1 / (4 * y_star ** 2):.6g} (margin {check.margin:.3g})',
            margin=check.margin,
        )

    r = 0.5 * math.sqrt(1.0 - 4.0 * sp.d1 * sp.d2 * y_star ** 2)
    # (1/2 - r)/d1 rewritten to avoid cancellation for small d1
    x1_min = sp.d2 * y_star ** 2 / (0.5 + r)
    x1_max = (0.5 + r) / sp.d1
    return [
        EquilibriumPoint(x1_min, y_star, equilibrium_control(sp, x1_min, y_star), Branch.MINIMAL),
        EquilibriumPoint(x1_max, y_star, equilibrium_control(sp, x1_max, y_star), Branch.MAXIMAL),
    ]


def pi_equilibria(sp, y_star, gains):
    """
    Equilibria of the PI loop, ie. the assignable equilibria extended with
    the integrator state x3 = (1 - d1*x1 - u0*y*) / (K_I*y*).

    Args:
        sp (ScaledParams):
            Scaled parameters
        y_star (float):
            Voltage reference
        gains (PIGains):
            PI gains

    Returns:
        list: 3-state EquilibriumPoint objects
    """
    points = []
    for eq in assignable_equilibria(sp, y_star):
        x3 = (1.0 - sp.d1 * eq.x1_bar - gains.u0 * y_star) / (gains.K_I * y_star)
        points.append(EquilibriumPoint(eq.x1_bar, eq.x2_bar, eq.u_bar, eq.branch, x3))
    return points


def pid_pbc_equilibrium(sp, y_star, cfg):
    """
    Equilibrium (x1*, y*, xc) of the PID-PBC loop.
    The integrator settles at 0 when the controller adds the feedforward u_ff = u_bar,
    and at -u_bar/K_I when it runs without feedforward.

    Args:
        sp (ScaledParams):
            Scaled parameters
        y_star (float):
            Voltage reference
        cfg (PbcConfig):
            Controller configuration, resolved or not

    Raises:
        NoEquilibriumError: if (x1*, y*) is not an assignable equilibrium of the plant
    """
    cfg = cfg.resolve(sp, y_star)
    u_bar = sp.d2 * y_star / cfg.x1_star
    residual = float(vector_field(sp, (cfg.x1_star, y_star), u_bar)[0])
    if abs(residual) > 1e-9 * max(1.0, cfg.x1_star):
        raise NoEquilibriumError(
            f'x1* = {cfg.x1_star:.6g} is not an assignable current for y* = {y_star:.6g} (residual {residual:.3g})',
            margin=residual,
        )

    branch = Branch.UNIQUE
    if sp.d1 > 0:
        candidates = assignable_equilibria(sp, y_star)
        branch = min(candidates, key=lambda eq: abs(eq.x1_bar - cfg.x1_star)).branch

    # u_ff - K_I*xc = u_bar once the passive output vanishes
    x3 = (cfg.u_ff - u_bar) / cfg.K_I
    return EquilibriumPoint(cfg.x1_star, y_star, u_bar, branch, x3)


class Surface(Enum):
    """ Separatrix surfaces of the PI loop in the (x1, x2) plane. """
    S0 = 'S0'
    SU = 'Su'


class SeparatrixResidual(NamedTuple):
    """ Signed distance-like value, positive above the surface. """
    value: float
    surface: Surface

    @property
    def side(self):
        value = float(self.value)
        if value > 0:
            return 'above'
        if value < 0:
            return 'below'
        return 'on'


def separatrix_residual(sp, x, surface=None):
    """
    Residual of the separatrix surface at x.

    Args:
        sp (ScaledParams):
            Scaled parameters
        x (array-like):
            State (x1, x2), or shape (2, N) samples
        surface (Surface, optional):
            ``S0`` gives x1 - d2*x2^2 and ``Su`` gives x1 - d1*x1^2 - d2*x2^2;
            Default **S0 if d1 = 0 else Su**

    Note:
        Both surfaces are the zero set of the power balance, which is why
        the PI trajectories split along them.
    """
    x = np.asarray(x, dtype=float)
    if surface is None:
        surface = Surface.S0 if sp.d1 == 0 else Surface.SU
    surface = Surface(surface)

    if surface is Surface.S0:
        value = x[0] - sp.d2 * x[1] ** 2
    else:
        value = x[0] - sp.d1 * x[0] ** 2 - sp.d2 * x[1] ** 2

    return SeparatrixResidual(value, surface)
