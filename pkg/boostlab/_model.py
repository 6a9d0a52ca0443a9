########################################
# MODEL : Scaled boost converter model #
########################################
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._errors import ParameterDomainError

__all__ = [
    'PhysicalParams',
    'ScaledParams',
    'ScaledState',
    'PhRepresentation',
    'to_scaled',
    'unscale',
    'scale_state',
    'unscale_state',
    'scale_time',
    'unscale_time',
    'interconnection_matrix',
    'vector_field',
    'power_balance',
    'hamiltonian',
]
log = logging.getLogger(__name__)


def _check_finite(owner, **values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ParameterDomainError(f'{owner}.{name} must be finite, got {value!r}')


@dataclass(frozen=True)
class PhysicalParams:
    """
    Circuit constants of the average boost converter model.

    Args:
        L (float):
            Inductance [H], > 0
        C (float):
            Capacitance [F], > 0
        R (float):
            Series resistance of the inductor [Ohm], >= 0
        G (float):
            Load conductance [S], > 0
        E (float):
            Source voltage [V], > 0
    """
    L: float
    C: float
    R: float
    G: float
    E: float

    def __post_init__(self):
        _check_finite('PhysicalParams', L=self.L, C=self.C, R=self.R, G=self.G, E=self.E)
        for name in ('L', 'C', 'G', 'E'):
            if getattr(self, name) <= 0:
                raise ParameterDomainError(f'PhysicalParams.{name} must be > 0, got {getattr(self, name)!r}')
        if self.R < 0:
            raise ParameterDomainError(f'PhysicalParams.R must be >= 0, got {self.R!r}')


@dataclass(frozen=True)
class ScaledParams:
    """
    Dimensionless parameters of the scaled model.

    Args:
        d1 (float):
            Resistive damping R*sqrt(C/L), >= 0
        d2 (float):
            Load G*sqrt(L/C), > 0
    """
    d1: float
    d2: float

    def __post_init__(self):
        _check_finite('ScaledParams', d1=self.d1, d2=self.d2)
        if self.d1 < 0:
            raise ParameterDomainError(f'ScaledParams.d1 must be >= 0, got {self.d1!r}')
        if self.d2 <= 0:
            raise ParameterDomainError(f'ScaledParams.d2 must be > 0, got {self.d2!r}')


class ScaledState(NamedTuple):
    """ Scaled inductor current and capacitor voltage. """
    x1: float
    x2: float


def to_scaled(p):
    """
    Scaled parameters (d1, d2) = (R*sqrt(C/L), G*sqrt(L/C)).

    Args:
        p (PhysicalParams):
            Circuit constants

    Returns:
        ScaledParams
    """
    return ScaledParams(p.R * math.sqrt(p.C / p.L), p.G * math.sqrt(p.L / p.C))


def unscale(sp, L, C, E):
    """
    Physical parameters that map onto ``sp`` for the given L, C and E.
    Scaling loses three degrees of freedom, so they have to be supplied.
    """
    return PhysicalParams(L=L, C=C, R=sp.d1 * math.sqrt(L / C), G=sp.d2 * math.sqrt(C / L), E=E)


def scale_state(p, i_L, v_C):
    """ Map inductor current and capacitor voltage to (x1, x2) = (sqrt(L/C)*i_L/E, v_C/E). """
    return ScaledState(math.sqrt(p.L / p.C) * i_L / p.E, v_C / p.E)


def unscale_state(p, x1, x2):
    """ Inverse of :func:`scale_state`, returns (i_L, v_C). """
    return (x1 * p.E * math.sqrt(p.C / p.L), x2 * p.E)


def scale_time(p, t):
    """ Scaled time tau = t / sqrt(LC). """
    return t / math.sqrt(p.L * p.C)


def unscale_time(p, tau):
    return tau * math.sqrt(p.L * p.C)


def interconnection_matrix(sp, u):
    """
    Matrix F(u) of the port-Hamiltonian form, with the control in the skew-symmetric part only.

    Args:
        sp (ScaledParams):
            Scaled parameters
        u (float):
            Duty cycle

    Returns:
        np.ndarray: 2x2 matrix [[-d1, -u], [u, -d2]]
    """
    return np.array([[-sp.d1, -u], [u, -sp.d2]], dtype=float)


def hamiltonian(x):
    """ Stored energy H(x) = |x|^2 / 2, broadcast over trailing sample axes. """
    x = np.asarray(x, dtype=float)
    return 0.5 * (x[0] ** 2 + x[1] ** 2)


def vector_field(sp, x, u):
    """
    Right hand side of the scaled model
    ``dx1 = -d1*x1 + 1 - x2*u`` and ``dx2 = -d2*x2 + x1*u``.

    Args:
        sp (ScaledParams):
            Scaled parameters
        x (array-like):
            State (x1, x2); a shape (2, N) array evaluates N states at once
        u (float or array-like):
            Duty cycle, broadcast against the state samples

    Returns:
        np.ndarray: Derivative with the same shape as ``x``
    """
    x = np.asarray(x, dtype=float)
    x1, x2 = x[0], x[1]
    return np.stack((
        -sp.d1 * x1 + 1.0 - x2 * u,
        -sp.d2 * x2 + x1 * u,
    ))


def power_balance(sp, x):
    """
    Energy rate dH/dtau = -d1*x1^2 - d2*x2^2 + x1 along the model, whatever the control.

    Args:
        sp (ScaledParams):
            Scaled parameters
        x (array-like):
            State (x1, x2) or shape (2, N) array of states
    """
    x = np.asarray(x, dtype=float)
    return -sp.d1 * x[0] ** 2 - sp.d2 * x[1] ** 2 + x[0]


@dataclass(frozen=True)
class PhRepresentation:
    """
    Port-Hamiltonian view ``dx = F(u) grad H(x) + g`` of the scaled model, with H = |x|^2/2 and g = (1, 0).

    Args:
        sp (ScaledParams):
            Scaled parameters
    """
    sp: ScaledParams

    g = np.array([1.0, 0.0])

    def F(self, u):
        return interconnection_matrix(self.sp, u)

    def H(self, x):
        return hamiltonian(x)

    def grad_H(self, x):
        return np.asarray(x, dtype=float)

    def field(self, x, u):
        """ Evaluate F(u) grad H(x) + g for a single state. """
        return self.F(u) @ self.grad_H(x) + self.g

    def dissipation(self):
        """ Symmetric part of F(u), which does not depend on u. """
        return -np.diag([self.sp.d1, self.sp.d2])
