#####################################################
# OBSERVER : Finite convergence time state observer #
#####################################################
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._errors import ParameterDomainError
from ._model import interconnection_matrix

__all__ = [
    'Innovation',
    'ObserverConfig',
    'ObserverState',
    'FctEstimate',
    'ExcitationReport',
    'observer_derivative',
    'fct_estimate',
    'excitation_threshold',
    'excitation_monitor',
]
log = logging.getLogger(__name__)


class Innovation(Enum):
    """
    Sign of the output injection in the regressor filter.

    - corrected : y - C*xi, the estimate converges to x(0) - xi(0)
    - as-written : C*xi - y, the estimate converges to xi(0) - x(0)
    """
    CORRECTED = 'corrected'
    AS_WRITTEN = 'as-written'


@dataclass(frozen=True)
class ObserverConfig:
    """
    Observer tuning, in scaled time.

    Args:
        lam (float):
            Filter gain lambda, > 0; Default **1**
        gamma (float):
            Adaptation gain, > 0; Default **1000**
        mu (float):
            Clipping constant of omega, in (0, 1); Default **0.05**
        innovation (Innovation):
            Sign of the output injection; Default **corrected**

    Note:
        The convergence time only exists when the threshold -ln(1-mu)/gamma lies below
        the excitation energy of the run. That energy levels off around 4e-4 for the
        ``observer`` preset, which rules out gamma = 10.
    """
    lam: float = 1.0
    gamma: float = 1000.0
    mu: float = 0.05
    innovation: Innovation = Innovation.CORRECTED

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterDomainError(f'ObserverConfig.lam must be > 0, got {self.lam!r}')
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterDomainError(f'ObserverConfig.gamma must be > 0, got {self.gamma!r}')
        if not 0 < self.mu < 1:
            raise ParameterDomainError(f'ObserverConfig.mu must lie in (0, 1), got {self.mu!r}')
        object.__setattr__(self, 'innovation', Innovation(self.innovation))


@dataclass(frozen=True)
class ObserverState:
    """
    Observer state, also used for its derivative.

    The flat layout used inside the closed loop is
    ``[xi1, xi2, Phi11, Phi12, Phi21, Phi22, Y1, Y2, Omega11, Omega12, Omega21, Omega22, omega, theta1, theta2, int(Delta^2)]``.
    The initial estimate theta_hat0 is kept outside of that vector.
    """
    xi: np.ndarray
    Phi: np.ndarray
    Y: np.ndarray
    Omega: np.ndarray
    omega: float
    theta_hat: np.ndarray
    theta_hat0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    excitation: float = 0.0

    SIZE = 16
    LABELS = (
        'xi1', 'xi2', 'Phi11', 'Phi12', 'Phi21', 'Phi22', 'Y1', 'Y2',
        'Omega11', 'Omega12', 'Omega21', 'Omega22', 'omega', 'theta_hat1', 'theta_hat2', 'excitation',
    )

    @classmethod
    def initial(cls, xi0=(0.0, 0.0), theta_hat0=(0.0, 0.0)):
        """ Start state: Phi = I, Y = 0, Omega = 0, omega = 1 and theta_hat = theta_hat0. """
        theta_hat0 = np.array(theta_hat0, dtype=float)
        return cls(
            xi=np.array(xi0, dtype=float),
            Phi=np.eye(2),
            Y=np.zeros(2),
            Omega=np.zeros((2, 2)),
            omega=1.0,
            theta_hat=theta_hat0.copy(),
            theta_hat0=theta_hat0,
        )

    def to_vector(self):
        return np.concatenate((
            self.xi, self.Phi.ravel(), self.Y, self.Omega.ravel(),
            [self.omega], self.theta_hat, [self.excitation],
        ))

    @classmethod
    def from_vector(cls, v, theta_hat0=(0.0, 0.0)):
        v = np.asarray(v, dtype=float)
        if v.shape != (cls.SIZE,):
            raise ValueError(f'observer vector must have shape ({cls.SIZE},), got {v.shape}')
        return cls(
            xi=v[0:2],
            Phi=v[2:6].reshape(2, 2),
            Y=v[6:8],
            Omega=v[8:12].reshape(2, 2),
            omega=float(v[12]),
            theta_hat=v[13:15],
            theta_hat0=np.asarray(theta_hat0, dtype=float),
            excitation=float(v[15]),
        )

    @property
    def delta(self):
        """ Excitation signal, the determinant of Omega. """
        return self.Omega[0, 0] * self.Omega[1, 1] - self.Omega[0, 1] * self.Omega[1, 0]


class FctEstimate(NamedTuple):
    x_hat: np.ndarray
    theta_fct: np.ndarray
    omega_c: float


class ExcitationReport(NamedTuple):
    satisfied: bool
    t_c: float = None


def _adjugate(M):
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]])


def observer_derivative(cfg, sp, os, u, y):
    """
    Time derivative of the observer.

    The observer copies the plant in xi, propagates the error transition matrix Phi,
    filters the output error through Phi into (Y, Omega) and runs a gradient estimator
    on the mixed regression ``adj(Omega)·Y = Delta·theta`` with ``Delta = det(Omega)``.

    Args:
        cfg (ObserverConfig):
            Observer tuning
        sp (ScaledParams):
            Plant parameters, assumed known
        os (ObserverState):
            Current observer state
        u (float):
            Applied duty cycle
        y (float):
            Measured voltage x2

    Returns:
        ObserverState: derivative blocks, with ``excitation`` holding Delta^2
    """
    F = interconnection_matrix(sp, u)
    c_phi = os.Phi[1, :]

    innovation = y - os.xi[1]
    if cfg.innovation is Innovation.AS_WRITTEN:
        innovation = -innovation

    delta = os.delta
    mixed = _adjugate(os.Omega) @ os.Y

    return ObserverState(
        xi=F @ os.xi + np.array([1.0, 0.0]),
        Phi=F @ os.Phi,
        Y=-cfg.lam * os.Y + cfg.lam * c_phi * innovation,
        Omega=-cfg.lam * os.Omega + cfg.lam * np.outer(c_phi, c_phi),
        omega=-cfg.gamma * delta ** 2 * os.omega,
        theta_hat=cfg.gamma * delta * (mixed - delta * os.theta_hat),
        theta_hat0=os.theta_hat0,
        excitation=delta ** 2,
    )


def fct_estimate(cfg, os):
    """
    State estimate of the observer.

    ``omega_c`` is omega clipped at 1-mu, ``theta_fct = (theta_hat - omega_c*theta_hat0) / (1 - omega_c)``
    and ``x_hat = xi + Phi·theta_fct``.
    Once omega drops below 1-mu the estimate equals the true state.

    Returns:
        FctEstimate
    """
    omega_c = os.omega if os.omega <= 1.0 - cfg.mu else 1.0 - cfg.mu
    theta_fct = (os.theta_hat - omega_c * os.theta_hat0) / (1.0 - omega_c)
    return FctEstimate(os.xi + os.Phi @ theta_fct, theta_fct, omega_c)


def excitation_threshold(cfg):
    """ Energy ``-ln(1-mu)/gamma`` that Delta^2 has to accumulate. """
    return -math.log1p(-cfg.mu) / cfg.gamma


def excitation_monitor(cfg, times, delta=None, *, integral=None):
    """
    Find the first time the excitation energy reaches the threshold.

    Args:
        cfg (ObserverConfig):
            Observer tuning
        times (array-like):
            Increasing sample times
        delta (array-like, optional):
            Delta samples, integrated with the trapezoidal rule
        integral (array-like, optional):
            Running integral of Delta^2, eg. the last observer slot of a simulation

    Returns:
        ExcitationReport: whether the threshold is reached and the interpolated time t_c
    """
    times = np.asarray(times, dtype=float)
    if integral is None:
        if delta is None:
            raise ValueError('excitation_monitor needs either delta or integral samples')
        integral = cumulative_trapezoid(np.asarray(delta, dtype=float) ** 2, times, initial=0.0)
    integral = np.asarray(integral, dtype=float)

    threshold = excitation_threshold(cfg)
    hits = np.flatnonzero(integral >= threshold)
    if hits.size == 0:
        log.debug('excitation %.3g below threshold %.3g', integral[-1] if integral.size else 0.0, threshold)
        return ExcitationReport(False, None)

    i = hits[0]
    if i == 0:
        return ExcitationReport(True, float(times[0]))

    t_c = float(np.interp(threshold, integral[i - 1:i + 1], times[i - 1:i + 1]))
    return ExcitationReport(True, t_c)
