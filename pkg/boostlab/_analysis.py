#######################################################
# ANALYSIS : Local stability and attraction estimates #
#######################################################
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_continuous_lyapunov, solve_triangular
from scipy.stats import norm, qmc

from ._equilibria import Branch, existence_condition, pi_equilibria
from ._errors import DegenerateDoaError, NoEquilibriumError, NotApplicableError, NotHurwitzError, ParameterDomainError
from ._sim import ClosedLoopSystem, ControllerKind
from ._time import Time

__all__ = [
    'MARGINAL_BAND',
    'CharPoly3',
    'Verdict',
    'StabilityReport',
    'GainConditions',
    'AppendixACheck',
    'ZeroDynamicsPoint',
    'ZeroDynamics',
    'DoaOptions',
    'DoaEstimate',
    'SweepResult',
    'charpoly_from_matrix',
    'routh_hurwitz',
    'pi_jacobian',
    'pi_charpoly',
    'maximal_branch_charpoly',
    'pi_stability',
    'gain_conditions',
    'appendix_a_check',
    'zero_dynamics',
    'lyapunov_solve',
    'numerical_jacobian',
    'estimate_region',
    'estimate_doa',
    'estimate_pbc_doa',
    'sweep_no_resistance',
    'sweep_minimal_branch',
    'sweep_appendix_a',
    'sweep_oracles',
    'SWEEPS',
]
log = logging.getLogger(__name__)

MARGINAL_BAND = 1e-9
RH_CONDITIONS = ('a0>0', 'a1>0', 'a2>0', 'a2a1>a0')


@dataclass(frozen=True)
class CharPoly3:
    """ Monic cubic ``lambda^3 + a2*lambda^2 + a1*lambda + a0``. """
    a0: float
    a1: float
    a2: float

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.a0, self.a1, self.a2)):
            raise ParameterDomainError(f'characteristic coefficients must be finite, got {self}')

    @property
    def coefficients(self):
        """ Coefficients in decreasing powers, as used by ``np.roots``. """
        return np.array([1.0, self.a2, self.a1, self.a0])

    @property
    def hurwitz_margin(self):
        return self.a2 * self.a1 - self.a0

    def roots(self):
        return np.roots(self.coefficients)

    def __call__(self, lam):
        return np.polyval(self.coefficients, lam)


def _charpoly_batch(A):
    a2 = -np.trace(A, axis1=-2, axis2=-1)
    a1 = (
        A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        + A[..., 0, 0] * A[..., 2, 2] - A[..., 0, 2] * A[..., 2, 0]
        + A[..., 1, 1] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 1]
    )
    a0 = -np.linalg.det(A)
    return a0, a1, a2


def charpoly_from_matrix(A):
    """
    Characteristic polynomial of a 3x3 matrix:
    a2 = -trace, a1 = sum of the principal 2x2 minors and a0 = -det.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ParameterDomainError(f'expected a 3x3 matrix, got shape {A.shape}')
    return CharPoly3(*(float(a) for a in _charpoly_batch(A)))


class Verdict(Enum):
    STABLE = 'stable'
    UNSTABLE = 'unstable'
    MARGINAL = 'marginal'


def _routh_batch(a0, a1, a2, band=MARGINAL_BAND):
    c = np.stack(np.broadcast_arrays(a0, a1, a2, a1 * a2 - a0))
    unstable = np.any(c < -band, axis=0)
    marginal = ~unstable & np.any(np.abs(c) <= band, axis=0)
    passed = np.all(c > 0, axis=0)
    return c, passed, unstable, marginal


class GainConditions(NamedTuple):
    """ ``K_P >= d1^2/2`` and ``K_I >= 5*d1/(16*y*^2)``, truthy when both hold. """
    proportional: bool
    integral: bool

    def __bool__(self):
        return bool(self.proportional and self.integral)


@dataclass(frozen=True)
class StabilityReport:
    """
    Routh-Hurwitz classification of a cubic, with the roots as cross-check.

    Args:
        charpoly (CharPoly3):
            Characteristic polynomial
        routh_pass (bool):
            All four strict Routh-Hurwitz inequalities hold
        failing_condition (str or None):
            First condition that is violated or within the marginal band
        eigenvalues (np.ndarray):
            The three roots
        verdict (Verdict):
            stable, unstable, or marginal when a condition sits within +-1e-9 of its boundary
        equilibrium (EquilibriumPoint, optional):
            Equilibrium the polynomial belongs to
        gain_conditions (GainConditions, optional):
            Status of the gain inequalities, when d1 > 0
    """
    charpoly: CharPoly3
    routh_pass: bool
    failing_condition: Optional[str]
    eigenvalues: np.ndarray
    verdict: Verdict
    equilibrium: Optional[object] = None
    gain_conditions: Optional[GainConditions] = None

    def to_dict(self):
        data = {
            'a0': self.charpoly.a0,
            'a1': self.charpoly.a1,
            'a2': self.charpoly.a2,
            'a2a1-a0': self.charpoly.hurwitz_margin,
            'routh_pass': bool(self.routh_pass),
            'failing_condition': self.failing_condition,
            'verdict': self.verdict.value,
            'eigenvalues': [[float(ev.real), float(ev.imag)] for ev in self.eigenvalues],
        }
        if self.equilibrium is not None:
            data['equilibrium'] = {
                'branch': self.equilibrium.branch.value,
                'state': [float(v) for v in self.equilibrium.vector],
                'u_bar': float(self.equilibrium.u_bar),
            }
        if self.gain_conditions is not None:
            data['gain_conditions'] = self.gain_conditions._asdict()
        return data


def routh_hurwitz(cp):
    """
    Routh-Hurwitz test ``a0 > 0, a1 > 0, a2 > 0, a2*a1 > a0`` of a cubic.

    Args:
        cp (CharPoly3):
            Characteristic polynomial

    Returns:
        StabilityReport
    """
    c, passed, unstable, marginal = _routh_batch(cp.a0, cp.a1, cp.a2)
    failing = next((name for name, value in zip(RH_CONDITIONS, c) if value <= MARGINAL_BAND), None)
    if unstable:
        verdict = Verdict.UNSTABLE
    elif marginal:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.STABLE
    return StabilityReport(cp, bool(passed), failing, cp.roots(), verdict)


def _pi_jacobian_batch(d1, d2, y, KP, KI, u0, c1, c2, c3):
    shape = np.broadcast(d1, d2, y, KP, KI, u0, c1, c2, c3).shape
    J = np.zeros(shape + (3, 3))
    J[..., 0, 0] = -d1
    J[..., 0, 1] = -u0 - KI * c3 - KP * y + 2 * KP * c2
    J[..., 0, 2] = -KI * c2
    J[..., 1, 0] = u0 + KI * c3 + KP * y - KP * c2
    J[..., 1, 1] = -d2 - KP * c1
    J[..., 1, 2] = KI * c1
    J[..., 2, 1] = -1.0
    return J


def _pi_field_batch(d1, d2, y, KP, KI, u0, x):
    u = u0 + KI * x[2] + KP * (y - x[1])
    return np.stack((-d1 * x[0] + 1 - x[1] * u, -d2 * x[1] + x[0] * u, y - x[1]))


def _pi_charpoly_batch(d1, d2, y, KP, KI, u0, c1, c3):
    a0 = -KI * (KI * c3 * y - d1 * c1 + u0 * y)
    a1 = KI ** 2 * c3 ** 2 + (2 * u0 * c3 + c1 - KP * c3 * y) * KI + (d1 * c1 - u0 * y) * KP + d1 * d2 + u0 ** 2
    a2 = KP * c1 + d1 + d2
    return a0, a1, a2


def _maximal_charpoly_batch(d1, d2, y, KP, KI, r):
    a0 = 2 * KI * r
    a1 = (4 * d1 ** 2 * d2 * y ** 2 + 8 * r * KP * y ** 2 * d1 + 4 * (r - 0.5) ** 2 * d1 + 4 * KI * y ** 2 * (0.5 + r)) / (4 * d1 * y ** 2)
    a2 = KP * (0.5 + r) / d1 + d1 + d2
    return a0, a1, a2


def pi_jacobian(sp, gains, y_star, chi):
    """
    Jacobian of the PI closed loop at chi = (x1, x2, xc).

    Args:
        sp (ScaledParams):
            Scaled parameters
        gains (PIGains):
            PI gains
        y_star (float):
            Voltage reference
        chi (array-like):
            Point of evaluation

    Returns:
        np.ndarray: 3x3 matrix, whose last row is always (0, -1, 0)
    """
    c1, c2, c3 = np.asarray(chi, dtype=float)
    return _pi_jacobian_batch(sp.d1, sp.d2, y_star, gains.K_P, gains.K_I, gains.u0, c1, c2, c3)


def pi_charpoly(sp, gains, y_star, eq):
    """
    Characteristic polynomial of the PI loop linearized at an equilibrium, from its closed form.

    Note:
        The closed form uses x2 = y*, so it only holds at equilibria.
        For d1 = 0 it reduces to a0 = -K_I and on the minimal current branch to a0 = -2*K_I*r.
    """
    c1, _, c3 = eq.vector
    return CharPoly3(*(float(a) for a in _pi_charpoly_batch(sp.d1, sp.d2, y_star, gains.K_P, gains.K_I, gains.u0, c1, c3)))


def maximal_branch_charpoly(sp, gains, y_star):
    """
    Coefficients on the maximal current branch, written with r = sqrt(1 - 4*d1*d2*y*^2)/2.
    Every term of a0 and a1 is nonnegative in this form.
    """
    if sp.d1 == 0:
        raise NotApplicableError('the maximal current branch only exists for d1 > 0')
    if not existence_condition(sp, y_star):
        raise NoEquilibriumError('no maximal current branch for these parameters')
    r = 0.5 * math.sqrt(1.0 - 4.0 * sp.d1 * sp.d2 * y_star ** 2)
    return CharPoly3(*(float(a) for a in _maximal_charpoly_batch(sp.d1, sp.d2, y_star, gains.K_P, gains.K_I, r)))


def gain_conditions(d1, y_star, K_P, K_I):
    """
    Gain inequalities that make the maximal current branch of the PI loop stable.

    Raises:
        NotApplicableError: for d1 = 0, where no gains stabilize the loop
    """
    if d1 == 0:
        raise NotApplicableError('gain conditions only apply for d1 > 0, the d1 = 0 PI loop is unstable for all gains')
    return GainConditions(bool(K_P >= 0.5 * d1 ** 2), bool(K_I >= 5.0 / 16.0 * d1 / y_star ** 2))


def pi_stability(sp, gains, y_star):
    """
    Stability report for every equilibrium of the PI loop.

    Returns:
        list: StabilityReport per equilibrium, minimal current branch first
    """
    gains_ok = gain_conditions(sp.d1, y_star, gains.K_P, gains.K_I) if sp.d1 > 0 else None
    reports = []
    for eq in pi_equilibria(sp, y_star, gains):
        report = routh_hurwitz(pi_charpoly(sp, gains, y_star, eq))
        reports.append(replace(report, equilibrium=eq, gain_conditions=gains_ok))
        log.debug('%s: %s (%s)', eq, report.verdict.value, report.failing_condition)
    return reports


@dataclass(frozen=True)
class AppendixACheck:
    """
    Numeric evaluation of a2*a1 - a0 on the maximal current branch, with the polynomial
    terms p1, p2, p3 and the two dominating terms 8*K_P*K_I*y*^2*r^2 and 8*K_P*K_I*y*^2*r.
    """
    value: float
    p1: float
    p2: float
    p3: float
    dominant_r2: float
    dominant_r: float
    closed_form_gap: float
    passed: bool


def _appendix_terms(d1, d2, y, KP, KI, r):
    quad = 8 * r ** 2 - 8 * r + 2
    p1 = d1 ** 3 * quad
    p2 = d2 * d1 ** 2 * quad + d1 ** 2 * (-8 * KI * y ** 2 * r + 4 * KI * y ** 2)
    p3 = 8 * KP * d1 * r * (r ** 2 - 0.5 * r - 0.25)
    return p1, p2, p3, 8 * KP * KI * y ** 2 * r ** 2, 8 * KP * KI * y ** 2 * r


def appendix_a_check(sp, gains, y_star):
    """
    Evaluate a2*a1 - a0 on the maximal current branch.

    The general coefficient formulas are compared against the branch specific closed form,
    and ``passed`` is true when the value is positive.

    Raises:
        NotApplicableError: for d1 = 0
        NoEquilibriumError: when the existence condition fails
    """
    if sp.d1 == 0:
        raise NotApplicableError('the maximal current branch only exists for d1 > 0')
    eq = next(e for e in pi_equilibria(sp, y_star, gains) if e.branch is Branch.MAXIMAL)
    cp = pi_charpoly(sp, gains, y_star, eq)
    closed = maximal_branch_charpoly(sp, gains, y_star)
    gap = max(abs(cp.a0 - closed.a0), abs(cp.a1 - closed.a1), abs(cp.a2 - closed.a2))

    r = 0.5 * math.sqrt(1.0 - 4.0 * sp.d1 * sp.d2 * y_star ** 2)
    p1, p2, p3, dom2, dom1 = _appendix_terms(sp.d1, sp.d2, y_star, gains.K_P, gains.K_I, r)
    value = cp.hurwitz_margin
    return AppendixACheck(value, p1, p2, p3, dom2, dom1, gap, value > 0)


class ZeroDynamicsPoint(NamedTuple):
    """
    Equilibrium of the zero dynamics.

    Args:
        u (float):
            Duty cycle
        slope (float):
            Derivative of the right hand side at u; positive means unstable
        tag (Verdict):
            Classification by the sign of the slope
        branch (Branch, optional):
            Assignable equilibrium that has this constant control
    """
    u: float
    slope: float
    tag: Verdict
    branch: Optional[Branch] = None


@dataclass(frozen=True)
class ZeroDynamics:
    """
    Zero dynamics ``du = (u/d2)*(u^2 - u/y* + d1*d2)`` of the voltage output.

    Args:
        d1, d2 (float):
            Scaled parameters
        y_star (float):
            Voltage reference
        equilibria (tuple):
            ZeroDynamicsPoint entries, u = 0 first and then the roots of ``u^2 - u/y* + d1*d2`` in decreasing order
        boundary (bool):
            True when d1*d2 = 1/(4y*^2) and the two roots merge at 1/(2y*)
    """
    d1: float
    d2: float
    y_star: float
    equilibria: tuple = field(default_factory=tuple)
    boundary: bool = False

    def rhs(self, u):
        u = np.asarray(u, dtype=float)
        return u / self.d2 * (u ** 2 - u / self.y_star + self.d1 * self.d2)

    def slope(self, u):
        u = np.asarray(u, dtype=float)
        return (3 * u ** 2 - 2 * u / self.y_star + self.d1 * self.d2) / self.d2

    @property
    def u_min(self):
        """ Minimizer of ``u^2 - u/y* + d1*d2``. """
        return 0.5 / self.y_star


def _tag(slope, band=MARGINAL_BAND):
    if slope > band:
        return Verdict.UNSTABLE
    if slope < -band:
        return Verdict.STABLE
    return Verdict.MARGINAL


def zero_dynamics(sp, y_star, band=1e-12):
    """
    Zero dynamics of the plant when x2 is held at y*, with its equilibria tagged.

    The point u = 0 always exists.
    When the existence condition holds, the two roots of ``u^2 - u/y* + d1*d2`` are added;
    the larger is the control of the minimal current equilibrium and is always unstable.
    On the boundary d1*d2 = 1/(4y*^2) (within ``band``) a double root at 1/(2y*) is reported as marginal.

    Args:
        sp (ScaledParams):
            Scaled parameters
        y_star (float):
            Voltage reference, > 0
        band (float):
            Tolerance on the discriminant for the boundary case; Default **1e-12**
    """
    check = existence_condition(sp, y_star)
    zd = ZeroDynamics(sp.d1, sp.d2, y_star)

    slope0 = sp.d1
    points = [ZeroDynamicsPoint(0.0, slope0, Verdict.UNSTABLE if sp.d1 > 0 else Verdict.MARGINAL)]
    disc = 1.0 / y_star ** 2 - 4.0 * sp.d1 * sp.d2

    boundary = False
    if abs(disc) <= band and sp.d1 > 0:
        boundary = True
        u = 0.5 / y_star
        points.append(ZeroDynamicsPoint(u, float(zd.slope(u)), Verdict.MARGINAL, None))
    elif disc > 0:
        large = 0.5 * (1.0 / y_star + math.sqrt(disc))
        small = sp.d1 * sp.d2 / large
        branches = (Branch.UNIQUE, None) if sp.d1 == 0 else (Branch.MINIMAL, Branch.MAXIMAL)
        for u, branch in zip((large, small), branches):
            if u == 0:
                continue
            slope = u * (2 * u - 1.0 / y_star) / sp.d2
            points.append(ZeroDynamicsPoint(u, slope, _tag(slope), branch))
    else:
        log.debug('zero dynamics: no nonzero equilibrium, margin %.3g', check.margin)

    return replace(zd, equilibria=tuple(points), boundary=boundary)


def lyapunov_solve(A, Q=None):
    """
    Solve ``A^T P + P A = -Q`` for the symmetric positive definite P.

    Args:
        A (array-like):
            Hurwitz matrix
        Q (array-like, optional):
            Symmetric positive definite matrix; Default **identity**

    Returns:
        np.ndarray: P

    Raises:
        NotHurwitzError: if A is not Hurwitz; for 3x3 matrices the Routh-Hurwitz report is attached
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    Q = np.eye(n) if Q is None else np.asarray(Q, dtype=float)
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ParameterDomainError(f'A and Q must be square and of equal size, got {A.shape} and {Q.shape}')
    if not np.allclose(Q, Q.T):
        raise ParameterDomainError('Q must be symmetric')
    try:
        cholesky(Q, lower=True)
    except LinAlgError:
        raise ParameterDomainError('Q must be positive definite') from None

    if n == 3:
        report = routh_hurwitz(charpoly_from_matrix(A))
        if report.verdict is not Verdict.STABLE:
            cp = report.charpoly
            raise NotHurwitzError(
                f'linearization is {report.verdict.value}: {report.failing_condition} fails '
                f'(a0={cp.a0:.6g}, a1={cp.a1:.6g}, a2={cp.a2:.6g})',
                report,
            )
    else:
        worst = np.max(np.linalg.eigvals(A).real)
        if worst >= -MARGINAL_BAND:
            raise NotHurwitzError(f'linearization is not Hurwitz, max real part {worst:.6g}')

    eye = np.eye(n)
    cond = np.linalg.cond(np.kron(eye, A.T) + np.kron(A.T, eye))
    if cond > 1e10:
        log.warning('Lyapunov equation is ill-conditioned (cond %.3g)', cond)

    P = solve_continuous_lyapunov(A.T, -Q)
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(A.T @ P + P @ A + Q)
    if residual > 1e-9 * max(1.0, np.linalg.norm(A) * np.linalg.norm(P)):
        log.warning('Lyapunov residual %.3g is above tolerance', residual)
    return P


def numerical_jacobian(fn, x, eps=1e-6):
    """ Central difference Jacobian of fn: R^n -> R^n at x. """
    x = np.asarray(x, dtype=float)
    J = np.empty((x.size, x.size))
    for i in range(x.size):
        dx = np.zeros_like(x)
        dx[i] = eps
        J[:, i] = (np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2 * eps)
    return J


@dataclass(frozen=True)
class DoaOptions:
    """
    Settings of the sampled region estimate.

    Args:
        samples (int):
            Boundary samples per tested level; Default **4096**
        iterations (int):
            Bisection steps over log(rho); Default **40**
        safety (float):
            Factor applied to the largest accepted level; Default **0.9**
        floor (float):
            Smallest level tried; Default **1e-8**
        ceiling (float):
            Largest level tried; Default **1e4**
        require_positive (bool):
            Count samples outside the positive (x1, x2) quadrant as violations; Default **False**
        seed (int):
            Seed of the scrambled Sobol sequence; Default **0**
    """
    samples: int = 4096
    iterations: int = 40
    safety: float = 0.9
    floor: float = 1e-8
    ceiling: float = 1e4
    require_positive: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1 or self.iterations < 1:
            raise ParameterDomainError('DoaOptions.samples and DoaOptions.iterations must be >= 1')
        if not 0 < self.safety <= 1:
            raise ParameterDomainError(f'DoaOptions.safety must lie in (0, 1], got {self.safety!r}')
        if not 0 < self.floor < self.ceiling:
            raise ParameterDomainError('DoaOptions needs 0 < floor < ceiling')


@dataclass(frozen=True)
class DoaEstimate:
    """
    Sampled estimate ``{x : (x-c)^T P (x-c) <= rho}`` of a domain of attraction.

    Args:
        P (np.ndarray):
            Symmetric positive definite matrix
        rho (float):
            Level, already multiplied by the safety factor
        sample_count (int):
            Boundary samples per tested level
        violation_count (int):
            Violating samples at the smallest rejected level, 0 if the ceiling was accepted
        center (np.ndarray):
            Equilibrium c
    """
    P: np.ndarray
    rho: float
    sample_count: int
    violation_count: int
    center: np.ndarray

    def level(self, x):
        """ V(x) = (x-c)^T P (x-c), for a state or a shape (n, N) array. """
        d = np.asarray(x, dtype=float) - (self.center if np.ndim(x) == 1 else self.center[:, None])
        return np.einsum('i...,ij,j...->...', d, self.P, d)

    def contains(self, x):
        return self.level(x) <= self.rho

    def boundary_samples(self, n, seed=1):
        """ n points on the boundary {V = rho}, shape (n_states, n). """
        L = cholesky(self.P, lower=True)
        return self.center[:, None] + math.sqrt(self.rho) * _ellipsoid_directions(L, n, seed)


def _ellipsoid_directions(L, samples, seed):
    n = L.shape[0]
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(samples))))
    z = norm.ppf(sampler.random_base2(m)[:samples])
    s = z / np.linalg.norm(z, axis=1, keepdims=True)
    # x = L^-T s satisfies x^T P x = |s|^2 = 1
    return solve_triangular(L.T, s.T, lower=False)


def estimate_region(fn, center, P, opts=None):
    """
    Largest level set of V(x) = (x-c)^T P (x-c) whose sampled boundary has dV < 0.

    The boundary of each tested level is sampled with a scrambled Sobol sequence,
    mapped through the inverse normal CDF onto the unit sphere and through the Cholesky
    factor of P onto the ellipsoid. A bisection over log(rho) finds the largest accepted level.

    Args:
        fn (callable):
            Vectorized vector field, shape (n, N) states to shape (n, N) derivatives
        center (array-like):
            Equilibrium c
        P (array-like):
            Symmetric positive definite matrix
        opts (DoaOptions, optional):
            Estimation settings

    Returns:
        DoaEstimate

    Raises:
        DegenerateDoaError: when even the floor level fails
    """
    opts = opts or DoaOptions()
    center = np.asarray(center, dtype=float)
    P = np.asarray(P, dtype=float)
    P = 0.5 * (P + P.T)
    try:
        L = cholesky(P, lower=True)
    except LinAlgError:
        raise ParameterDomainError('P must be positive definite') from None

    unit = _ellipsoid_directions(L, opts.samples, opts.seed)

    def violations(rho):
        pts = center[:, None] + math.sqrt(rho) * unit
        ok = np.ones(pts.shape[1], dtype=bool)
        if opts.require_positive:
            ok &= np.all(pts[:2] > 0, axis=0)
        if not ok.any():
            return pts.shape[1]
        inside = pts[:, ok]
        with np.errstate(all='ignore'):
            vdot = 2 * np.einsum('in,ij,jn->n', inside - center[:, None], P, fn(inside))
        return int(np.count_nonzero(~ok) + np.count_nonzero(~(vdot < 0)))

    with Time('region estimate'):
        if violations(opts.floor):
            raise DegenerateDoaError(f'no level above {opts.floor:g} passes the decrease test')

        worst = violations(opts.ceiling)
        if worst == 0:
            rho = opts.ceiling
        else:
            lo, hi = math.log(opts.floor), math.log(opts.ceiling)
            for _ in range(opts.iterations):
                mid = 0.5 * (lo + hi)
                bad = violations(math.exp(mid))
                if bad == 0:
                    lo = mid
                else:
                    hi, worst = mid, bad
            rho = math.exp(lo)

    log.debug('region estimate: rho=%.6g, %d/%d violations above it', rho, worst, opts.samples)
    return DoaEstimate(P, opts.safety * rho, opts.samples, worst, center)


def estimate_doa(sp, gains, y_star, P=None, opts=None, Q=None):
    """
    Domain of attraction of the maximal current equilibrium of the PI loop.

    Args:
        sp (ScaledParams):
            Scaled parameters
        gains (PIGains):
            PI gains
        y_star (float):
            Voltage reference
        P (array-like, optional):
            Lyapunov matrix; Default **solution of A^T P + P A = -Q at the equilibrium**
        opts (DoaOptions, optional):
            Estimation settings
        Q (array-like, optional):
            Right hand side used when P is not given; Default **identity**

    Raises:
        NotHurwitzError: when the linearization is not Hurwitz, eg. for d1 = 0
    """
    eqs = pi_equilibria(sp, y_star, gains)
    eq = next(e for e in eqs if e.branch in (Branch.MAXIMAL, Branch.UNIQUE))
    if P is None:
        P = lyapunov_solve(pi_jacobian(sp, gains, y_star, eq.vector), Q)

    system = ClosedLoopSystem.pi(sp, y_star, gains)
    return estimate_region(lambda x: system.rhs(0.0, x), eq.vector, P, opts)


def estimate_pbc_doa(sp, y_star, kind, pbc=None, Q=None, opts=None):
    """
    Domain of attraction of a static IDA-PBC loop, from its numerical linearization.
    Samples outside the positive quadrant count as violations unless ``opts`` says otherwise.
    The alpha-law is only defined for x2 > 0, so it always restricts to the positive quadrant.

    Args:
        sp (ScaledParams):
            Scaled parameters, with d1 = 0
        y_star (float):
            Voltage reference
        kind (ControllerKind or str):
            ``ida-alpha`` or ``ida-k``
        pbc (PbcConfig, optional):
            Controller tuning
    """
    kind = ControllerKind(kind)
    if kind not in (ControllerKind.IDA_ALPHA, ControllerKind.IDA_K):
        raise NotApplicableError(f'{kind.value} is not a static IDA-PBC law')
    system = ClosedLoopSystem(sp, y_star, kind, pbc=pbc)
    eqs = system.equilibria()
    if not eqs:
        raise NotApplicableError('the static IDA-PBC loop has no tracked equilibrium for d1 > 0')

    center = eqs[0].vector
    A = numerical_jacobian(lambda x: system.rhs(0.0, x), center)
    P = lyapunov_solve(A, Q)

    opts = opts or DoaOptions(require_positive=True)
    if kind is ControllerKind.IDA_ALPHA and not opts.require_positive:
        log.debug('alpha-law region: counting samples with x1 <= 0 or x2 <= 0 as violations')
        opts = replace(opts, require_positive=True)
    return estimate_region(lambda x: system.rhs(0.0, x), center, P, opts)


@dataclass(frozen=True)
class SweepResult:
    """ Outcome of a randomized property sweep. """
    name: str
    draws: int
    violations: int
    max_error: float
    seed: int
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.violations == 0


def _draw_gains(rng, n):
    K_P = rng.uniform(0.0, 10.0, n)
    K_I = 10.0 - rng.uniform(0.0, 10.0, n)
    u0 = rng.uniform(-2.0, 2.0, n)
    return K_P, K_I, u0


def _draw_admissible(rng, n):
    """ d1 > 0 and d2 with d1*d2*4*y*^2 in (0, 1). """
    d1 = rng.uniform(0.01, 2.0, n)
    y = rng.uniform(0.2, 5.0, n)
    d2 = rng.uniform(1e-3, 0.999, n) / (4 * d1 * y ** 2)
    r = 0.5 * np.sqrt(1.0 - 4.0 * d1 * d2 * y ** 2)
    return d1, d2, y, r


def sweep_no_resistance(n=10_000, seed=0):
    """ With d1 = 0, every gain choice gives a0 = -K_I and an unstable PI loop. """
    rng = np.random.default_rng(seed)
    d2 = rng.uniform(0.05, 5.0, n)
    y = rng.uniform(0.2, 5.0, n)
    KP, KI, u0 = _draw_gains(rng, n)

    c1 = d2 * y ** 2
    c3 = (1 - u0 * y) / (KI * y)
    a0, a1, a2 = _pi_charpoly_batch(0.0, d2, y, KP, KI, u0, c1, c3)
    err = np.abs(a0 + KI)
    _, _, unstable, _ = _routh_batch(a0, a1, a2)

    bad = (err > 1e-10 * (1 + KI)) | ~unstable
    return SweepResult('no-resistance', n, int(np.count_nonzero(bad)), float(err.max()), seed, {'not_unstable': int(np.count_nonzero(~unstable))})


def sweep_minimal_branch(n=10_000, seed=0):
    """ With d1 > 0, the minimal current branch has a0 = -2*K_I*r and is unstable. """
    rng = np.random.default_rng(seed)
    d1, d2, y, r = _draw_admissible(rng, n)
    KP, KI, u0 = _draw_gains(rng, n)

    c1 = d2 * y ** 2 / (0.5 + r)
    c3 = (0.5 + r - u0 * y) / (KI * y)
    a0, a1, a2 = _pi_charpoly_batch(d1, d2, y, KP, KI, u0, c1, c3)
    err = np.abs(a0 + 2 * KI * r)
    _, _, unstable, _ = _routh_batch(a0, a1, a2)

    bad = (err > 1e-8) | ~unstable
    return SweepResult('minimal', n, int(np.count_nonzero(bad)), float(err.max()), seed, {'not_unstable': int(np.count_nonzero(~unstable))})


def sweep_appendix_a(n=100_000, seed=0, grid=10_000, grid_draws=100):
    """
    Draws that satisfy the existence condition and both gain conditions: the maximal current
    branch must pass all four Routh-Hurwitz conditions, and its closed form must match the general one.
    On an r-grid, p1(r) >= 0 and p3(r) >= -(5/2)*K_P*d1*r are checked for the first ``grid_draws`` draws.
    """
    rng = np.random.default_rng(seed)
    d1, d2, y, r = _draw_admissible(rng, n)
    _, _, u0 = _draw_gains(rng, n)
    KP = 0.5 * d1 ** 2 + rng.uniform(0.0, 10.0, n)
    KI = 5.0 / 16.0 * d1 / y ** 2 + rng.uniform(0.0, 10.0, n)

    c1 = (0.5 + r) / d1
    c3 = (0.5 - r - u0 * y) / (KI * y)
    general = _pi_charpoly_batch(d1, d2, y, KP, KI, u0, c1, c3)
    closed = _maximal_charpoly_batch(d1, d2, y, KP, KI, r)
    gap = np.max([np.abs(g - c) / np.maximum(1.0, np.abs(c)) for g, c in zip(general, closed)], axis=0)
    _, passed, _, _ = _routh_batch(*general)

    k = min(n, grid_draws)
    rg = np.linspace(0.0, 0.5, grid + 2)[1:-1]
    gd1, gKP = d1[:k, None], KP[:k, None]
    p1, _, p3, _, _ = _appendix_terms(gd1, d2[:k, None], y[:k, None], gKP, KI[:k, None], rg[None, :])
    p1_bad = np.count_nonzero(p1 < -1e-12 * np.maximum(1.0, gd1 ** 3))
    p3_bad = np.count_nonzero(p3 + 2.5 * gKP * gd1 * rg < -1e-12 * np.maximum(1.0, gKP * gd1))

    rh_bad = int(np.count_nonzero(~passed))
    form_bad = int(np.count_nonzero(gap > 1e-8))
    violations = rh_bad + form_bad + int(p1_bad) + int(p3_bad)
    details = {'routh_hurwitz': rh_bad, 'closed_form': form_bad, 'p1_grid': int(p1_bad), 'p3_grid': int(p3_bad)}
    return SweepResult('appendix-a', n, violations, float(gap.max()), seed, details)


def sweep_oracles(n=1000, seed=0, lyapunov_draws=100):
    """
    Cross-check the closed forms against independent computations on random PI setups:
    Jacobian against central differences, coefficients against trace/minors/determinant,
    Routh-Hurwitz against eigenvalue signs and the Lyapunov residual.
    """
    rng = np.random.default_rng(seed)
    d1, d2, y, r = _draw_admissible(rng, n)
    zero = rng.random(n) < 0.25
    d1 = np.where(zero, 0.0, d1)
    d2 = np.where(zero, rng.uniform(0.05, 5.0, n), d2)
    r = np.where(zero, 0.5, r)
    KP, KI, u0 = _draw_gains(rng, n)

    maximal = ~zero & (rng.random(n) < 0.5)
    c1 = np.where(maximal, (0.5 + r) / np.where(zero, 1.0, d1), d2 * y ** 2 / (0.5 + r))
    c3 = (1 - d1 * c1 - u0 * y) / (KI * y)

    J = _pi_jacobian_batch(d1, d2, y, KP, KI, u0, c1, y, c3)
    closed = _pi_charpoly_batch(d1, d2, y, KP, KI, u0, c1, c3)
    oracle = _charpoly_batch(J)
    coeff_err = np.max([np.abs(a - b) / np.maximum(1.0, np.abs(b)) for a, b in zip(closed, oracle)], axis=0)

    _, passed, _, marginal = _routh_batch(*closed)
    worst_re = np.max(np.linalg.eigvals(J).real, axis=1)
    decided = ~marginal & (np.abs(worst_re) > 1e-8)
    disagree = decided & (passed != (worst_re < 0))

    # field is quadratic in the state, so central differences are exact up to rounding
    chi = rng.uniform(-5.0, 5.0, (3, n))
    h = 1e-4
    fd = np.empty((n, 3, 3))
    for i in range(3):
        step = np.zeros((3, 1))
        step[i] = h
        fd[:, :, i] = ((_pi_field_batch(d1, d2, y, KP, KI, u0, chi + step) - _pi_field_batch(d1, d2, y, KP, KI, u0, chi - step)) / (2 * h)).T
    jac_err = np.max(np.abs(fd - _pi_jacobian_batch(d1, d2, y, KP, KI, u0, *chi)), axis=(1, 2))

    lyap_bad, lyap_err = 0, 0.0
    for i in np.flatnonzero(passed & ~marginal)[:lyapunov_draws]:
        A = J[i]
        P = lyapunov_solve(A, np.eye(3))
        rel = np.linalg.norm(A.T @ P + P @ A + np.eye(3)) / max(1.0, np.linalg.norm(A) * np.linalg.norm(P))
        lyap_err = max(lyap_err, rel)
        lyap_bad += int(rel > 1e-9 or np.min(np.linalg.eigvalsh(P)) <= 0)

    details = {
        'coefficients': int(np.count_nonzero(coeff_err > 1e-8)),
        'routh_vs_eigenvalues': int(np.count_nonzero(disagree)),
        'jacobian': int(np.count_nonzero(jac_err > 1e-6)),
        'lyapunov': lyap_bad,
        'max_jacobian_error': float(jac_err.max()),
        'max_lyapunov_residual': float(lyap_err),
        'undecided': int(np.count_nonzero(~decided)),
    }
    violations = details['coefficients'] + details['routh_vs_eigenvalues'] + details['jacobian'] + lyap_bad
    return SweepResult('oracles', n, violations, float(coeff_err.max()), seed, details)


SWEEPS = {
    'no-resistance': sweep_no_resistance,
    'minimal': sweep_minimal_branch,
    'appendix-a': sweep_appendix_a,
    'oracles': sweep_oracles,
}
