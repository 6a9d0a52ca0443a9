#################################
# CONTROLLERS : Duty cycle laws #
#################################
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from ._errors import ControlDomainError, ParameterDomainError

__all__ = [
    'PIGains',
    'ControllerState',
    'Bias',
    'PbcConfig',
    'DynamicControl',
    'pi_control',
    'ida_alpha_control',
    'ida_k_control',
    'passive_output',
    'pid_pbc_control',
]
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PIGains:
    """
    Gains of ``u = u0 + K_I*xc + K_P*(y* - x2)``.

    Args:
        K_P (float):
            Proportional gain, >= 0
        K_I (float):
            Integral gain, > 0
        u0 (float):
            Bias; Default **0**
    """
    K_P: float
    K_I: float
    u0: float = 0.0

    def __post_init__(self):
        for name in ('K_P', 'K_I', 'u0'):
            if not math.isfinite(getattr(self, name)):
                raise ParameterDomainError(f'PIGains.{name} must be finite, got {getattr(self, name)!r}')
        if self.K_P < 0:
            raise ParameterDomainError(f'PIGains.K_P must be >= 0, got {self.K_P!r}')
        if self.K_I <= 0:
            raise ParameterDomainError(f'PIGains.K_I must be > 0, got {self.K_I!r}')


class ControllerState(NamedTuple):
    """ Integrator state of the dynamic controllers. """
    x_c: float


def _integrator(x_c):
    if isinstance(x_c, ControllerState):
        x_c = x_c.x_c
    return np.asarray(x_c, dtype=float)


class Bias(Enum):
    """
    How the PID-PBC reaches the nonzero equilibrium duty cycle.

    - deviation : u is a deviation from u_bar, which is added as feedforward
    - literal : no feedforward, the integrator settles at -u_bar/K_I
    """
    DEVIATION = 'deviation'
    LITERAL = 'literal'


@dataclass(frozen=True)
class PbcConfig:
    """
    Tuning of the passivity-based controllers.

    Args:
        alpha (float):
            Exponent of the alpha-law, in (0, 1); Default **0.5**
        k (float):
            Gain of the k-law, > 3; Default **4**
        x1_star (float, optional):
            Current reference of the PID-PBC; Default **d2*y*^2 after resolve()**
        K_P (float):
            PID-PBC proportional gain, > 0
        K_I (float):
            PID-PBC integral gain, > 0
        bias (Bias):
            Interpretation of the PID-PBC duty cycle; Default **deviation**
        u_ff (float):
            Feedforward added to the PID-PBC output, filled in by resolve()
    """
    alpha: float = 0.5
    k: float = 4.0
    x1_star: Optional[float] = None
    K_P: float = 1.0
    K_I: float = 1.0
    bias: Bias = Bias.DEVIATION
    u_ff: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterDomainError(f'PbcConfig.alpha must lie in (0, 1), got {self.alpha!r}')
        if not (math.isfinite(self.k) and self.k > 3):
            raise ParameterDomainError(f'PbcConfig.k must be > 3, got {self.k!r}')
        if self.x1_star is not None and not (math.isfinite(self.x1_star) and self.x1_star > 0):
            raise ParameterDomainError(f'PbcConfig.x1_star must be > 0, got {self.x1_star!r}')
        for name in ('K_P', 'K_I'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterDomainError(f'PbcConfig.{name} must be > 0, got {value!r}')
        object.__setattr__(self, 'bias', Bias(self.bias))

    def resolve(self, sp, y_star):
        """
        Fill in the plant dependent fields: x1* defaults to d2*y*^2 and,
        in deviation mode, u_ff becomes the equilibrium duty cycle d2*y*/x1*.

        Returns:
            PbcConfig: new configuration
        """
        x1_star = self.x1_star if self.x1_star is not None else sp.d2 * y_star ** 2
        u_ff = sp.d2 * y_star / x1_star if self.bias is Bias.DEVIATION else 0.0
        return replace(self, x1_star=x1_star, u_ff=u_ff)


class DynamicControl(NamedTuple):
    """ Duty cycle and integrator derivative of a dynamic controller. """
    u: float
    xc_dot: float


def _out(value):
    value = np.asarray(value, dtype=float)
    return value[()] if value.ndim == 0 else value


def pi_control(g, y_star, x2, x_c):
    """
    PI voltage controller ``u = u0 + K_I*xc + K_P*(y* - x2)`` with ``dxc = y* - x2``.

    Args:
        g (PIGains):
            PI gains
        y_star (float):
            Voltage reference
        x2 (float or np.ndarray):
            Scaled voltage
        x_c (float, np.ndarray or ControllerState):
            Integrator state

    Returns:
        DynamicControl
    """
    error = np.subtract(y_star, x2)
    return DynamicControl(_out(g.u0 + g.K_I * _integrator(x_c) + g.K_P * error), _out(error))


def ida_alpha_control(alpha, y_star, x2):
    """
    Static IDA-PBC law ``u = (1/y*) * (x2/y*)^alpha``.

    Raises:
        ControlDomainError: if any x2 <= 0, the law is only defined on positive voltages
    """
    if not 0 < alpha < 1:
        raise ParameterDomainError(f'alpha must lie in (0, 1), got {alpha!r}')
    x2 = np.asarray(x2, dtype=float)
    if np.any(x2 <= 0):
        raise ControlDomainError(f'alpha-law needs x2 > 0, got min(x2) = {np.min(x2):.6g}')
    return _out((x2 / y_star) ** alpha / y_star)


def ida_k_control(k, y_star, x2):
    """ Static IDA-PBC law ``u = k*x2 / (x2^2 + (k - 1)*y*^2)``. """
    if not k > 3:
        raise ParameterDomainError(f'k must be > 3, got {k!r}')
    x2 = np.asarray(x2, dtype=float)
    return _out(k * x2 / (x2 ** 2 + (k - 1) * y_star ** 2))


def passive_output(x1_star, y_star, x2, x1_hat):
    """ Passive output ``y_PI = x1*·x2 - y*·x1_hat`` of the error system. """
    return _out(x1_star * np.asarray(x2, dtype=float) - y_star * np.asarray(x1_hat, dtype=float))


def pid_pbc_control(cfg, y_star, x2, x1_hat, x_c):
    """
    PI wrapped around the passive output: ``u = u_ff - K_P*y_PI - K_I*xc`` and ``dxc = y_PI``.

    Args:
        cfg (PbcConfig):
            Controller configuration with x1_star set
        y_star (float):
            Voltage reference
        x2 (float or np.ndarray):
            Measured voltage
        x1_hat (float or np.ndarray):
            Current estimate, or the true current in full-state mode
        x_c (float, np.ndarray or ControllerState):
            Integrator state

    Returns:
        DynamicControl
    """
    if cfg.x1_star is None:
        raise ParameterDomainError('PbcConfig.x1_star is not set, call cfg.resolve(sp, y_star) first')
    y_pi = passive_output(cfg.x1_star, y_star, x2, x1_hat)
    u = cfg.u_ff - cfg.K_P * y_pi - cfg.K_I * _integrator(x_c)
    return DynamicControl(_out(u), y_pi)
