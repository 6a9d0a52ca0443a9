##############################################
# SIM : Closed-loop assembly and integration #
##############################################
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import partial
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from ._controllers import PbcConfig, PIGains, ida_alpha_control, ida_k_control, pi_control, pid_pbc_control
from ._equilibria import Branch, EquilibriumPoint, pi_equilibria, pid_pbc_equilibrium
from ._errors import NoEquilibriumError, ParameterDomainError, StiffnessError
from ._model import ScaledParams, hamiltonian, power_balance, vector_field
from ._observer import ObserverConfig, ObserverState, fct_estimate, observer_derivative

__all__ = [
    'Method',
    'IntegratorOptions',
    'ControllerKind',
    'StateLayout',
    'ClosedLoopSystem',
    'OutcomeKind',
    'Outcome',
    'Tolerances',
    'Trajectory',
    'integrate',
    'classify_outcome',
    'grid_points',
    'phase_portrait',
    'energy_audit',
    'replay_open_loop',
    'run_many',
    'write_csv',
]
log = logging.getLogger(__name__)


class Method(Enum):
    ADAPTIVE = 'adaptive-RK45'
    FIXED = 'fixed-RK4'


@dataclass(frozen=True)
class IntegratorOptions:
    """
    Integration settings.

    Args:
        method (Method):
            Adaptive Dormand-Prince or fixed step RK4; Default **adaptive-RK45**
        rtol, atol (float):
            Tolerances of the adaptive method; Default **1e-8**
        step (float):
            Step of the fixed method; Default **1e-3**
        sample_dt (float):
            Spacing of the recorded samples; Default **1e-2**
        divergence_bound (float):
            Integration halts once the norm of plant and integrator states exceeds this; Default **1e6**
        stop_at_origin (float):
            If positive, integration stops once (x1, x2) enters this radius; Default **0 (disabled)**
    """
    method: Method = Method.ADAPTIVE
    rtol: float = 1e-8
    atol: float = 1e-8
    step: float = 1e-3
    sample_dt: float = 1e-2
    divergence_bound: float = 1e6
    stop_at_origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'method', Method(self.method))
        for name in ('rtol', 'atol', 'step', 'sample_dt', 'divergence_bound'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterDomainError(f'IntegratorOptions.{name} must be > 0, got {value!r}')
        if not (math.isfinite(self.stop_at_origin) and self.stop_at_origin >= 0):
            raise ParameterDomainError(f'IntegratorOptions.stop_at_origin must be >= 0, got {self.stop_at_origin!r}')


class ControllerKind(Enum):
    PI = 'pi'
    IDA_ALPHA = 'ida-alpha'
    IDA_K = 'ida-k'
    PID_PBC = 'pid-pbc'


class StateLayout(NamedTuple):
    """
    Slots of the closed-loop state vector:
    plant (x1, x2), then the integrator xc for dynamic controllers,
    then the 16 observer slots of :class:`ObserverState`.
    """
    size: int
    integrator: Optional[int] = None
    observer: Optional[slice] = None

    @property
    def core(self):
        """ Plant and integrator slots. """
        return slice(0, 2 if self.integrator is None else 3)

    @property
    def labels(self):
        labels = ['x1', 'x2']
        if self.integrator is not None:
            labels.append('xc')
        if self.observer is not None:
            labels.extend(ObserverState.LABELS)
        return tuple(labels)


@dataclass(frozen=True)
class ClosedLoopSystem:
    """
    Plant, controller and optional observer composed into one autonomous system.
    Use the ``pi``, ``ida_alpha``, ``ida_k`` and ``pid_pbc`` constructors.

    Args:
        plant (ScaledParams):
            Scaled plant parameters
        y_star (float):
            Voltage reference
        kind (ControllerKind):
            Control law
        gains (PIGains, optional):
            PI gains, for the PI loop
        pbc (PbcConfig, optional):
            Passivity-based controller tuning
        observer (ObserverConfig, optional):
            Observer feeding x1_hat to the PID-PBC; full-state feedback when missing
        clamp (bool):
            Saturate u to [0, 1]; Default **False**
        xi0, theta_hat0 (tuple):
            Observer initialization; Default **zero**
    """
    plant: ScaledParams
    y_star: float
    kind: ControllerKind
    gains: Optional[PIGains] = None
    pbc: Optional[PbcConfig] = None
    observer: Optional[ObserverConfig] = None
    clamp: bool = False
    xi0: tuple = (0.0, 0.0)
    theta_hat0: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, 'kind', ControllerKind(self.kind))
        if not (math.isfinite(self.y_star) and self.y_star > 0):
            raise ParameterDomainError(f'y_star must be finite and > 0, got {self.y_star!r}')
        if self.kind is ControllerKind.PI and self.gains is None:
            raise ParameterDomainError('the PI loop needs PIGains')
        if self.kind is not ControllerKind.PI and self.pbc is None:
            object.__setattr__(self, 'pbc', PbcConfig())
        if self.kind is ControllerKind.PID_PBC:
            object.__setattr__(self, 'pbc', self.pbc.resolve(self.plant, self.y_star))
        elif self.observer is not None:
            raise ParameterDomainError('an observer can only be attached to the PID-PBC loop')
        if self.kind in (ControllerKind.IDA_ALPHA, ControllerKind.IDA_K) and self.plant.d1 != 0:
            log.warning('the static IDA-PBC laws target d1 = 0, no closed-loop equilibrium is tracked for d1 = %g', self.plant.d1)

    @classmethod
    def pi(cls, sp, y_star, gains, clamp=False):
        return cls(sp, y_star, ControllerKind.PI, gains=gains, clamp=clamp)

    @classmethod
    def ida_alpha(cls, sp, y_star, alpha=0.5, clamp=False):
        return cls(sp, y_star, ControllerKind.IDA_ALPHA, pbc=PbcConfig(alpha=alpha), clamp=clamp)

    @classmethod
    def ida_k(cls, sp, y_star, k=4.0, clamp=False):
        return cls(sp, y_star, ControllerKind.IDA_K, pbc=PbcConfig(k=k), clamp=clamp)

    @classmethod
    def pid_pbc(cls, sp, y_star, cfg=None, observer=None, clamp=False, xi0=(0.0, 0.0), theta_hat0=(0.0, 0.0)):
        return cls(
            sp, y_star, ControllerKind.PID_PBC, pbc=cfg or PbcConfig(), observer=observer,
            clamp=clamp, xi0=tuple(xi0), theta_hat0=tuple(theta_hat0),
        )

    @property
    def layout(self):
        if self.kind in (ControllerKind.IDA_ALPHA, ControllerKind.IDA_K):
            return StateLayout(2)
        if self.observer is None:
            return StateLayout(3, 2)
        return StateLayout(3 + ObserverState.SIZE, 2, slice(3, 3 + ObserverState.SIZE))

    def _control(self, x, x1_hat=None):
        x1, x2 = x[0], x[1]
        xc_dot = None
        if self.kind is ControllerKind.PI:
            u, xc_dot = pi_control(self.gains, self.y_star, x2, x[2])
        elif self.kind is ControllerKind.IDA_ALPHA:
            u = ida_alpha_control(self.pbc.alpha, self.y_star, x2)
        elif self.kind is ControllerKind.IDA_K:
            u = ida_k_control(self.pbc.k, self.y_star, x2)
        else:
            u, xc_dot = pid_pbc_control(self.pbc, self.y_star, x2, x1 if x1_hat is None else x1_hat, x[2])

        if self.clamp:
            u = np.clip(u, 0.0, 1.0)
        return u, xc_dot

    def _observer_state(self, x):
        return ObserverState.from_vector(x[self.layout.observer], self.theta_hat0)

    def rhs(self, t, x):
        """
        Closed-loop vector field, with the signature expected by ``solve_ivp``.
        Without observer, a shape (n, N) array evaluates N states at once.
        """
        x = np.asarray(x, dtype=float)
        if self.observer is None:
            u, xc_dot = self._control(x)
            dx = vector_field(self.plant, x[:2], u)
            if xc_dot is None:
                return dx
            return np.concatenate((dx, np.asarray(xc_dot)[None, ...]))

        os = self._observer_state(x)
        x1_hat = fct_estimate(self.observer, os).x_hat[0]
        u, xc_dot = self._control(x, x1_hat)
        dos = observer_derivative(self.observer, self.plant, os, u, x[1])
        return np.concatenate((vector_field(self.plant, x[:2], u), [xc_dot], dos.to_vector()))

    def control(self, states):
        """ Duty cycle along a (n, T) array of states. """
        states = np.asarray(states, dtype=float)
        if self.observer is None:
            return np.broadcast_to(self._control(states)[0], states.shape[1:]).astype(float)

        x_hat = self.estimates(states)
        return np.array([float(self._control(states[:, i], x_hat[0, i])[0]) for i in range(states.shape[1])])

    def estimates(self, states):
        """ Observer estimate x_hat along a (n, T) array of states. """
        if self.observer is None:
            raise ParameterDomainError('this loop has no observer')
        states = np.asarray(states, dtype=float)
        return np.stack([fct_estimate(self.observer, self._observer_state(states[:, i])).x_hat for i in range(states.shape[1])], axis=1)

    def equilibria(self):
        """ Equilibria of plant and integrator, used to classify trajectories. """
        try:
            if self.kind is ControllerKind.PI:
                return pi_equilibria(self.plant, self.y_star, self.gains)
            if self.kind is ControllerKind.PID_PBC:
                return [pid_pbc_equilibrium(self.plant, self.y_star, self.pbc)]
        except NoEquilibriumError as err:
            log.warning('no closed-loop equilibrium: %s', err)
            return []

        if self.plant.d1 != 0:
            return []
        return [EquilibriumPoint(self.plant.d2 * self.y_star ** 2, self.y_star, 1.0 / self.y_star, Branch.UNIQUE)]

    def initial_state(self, x0):
        """
        Full state vector from a plant (or plant and integrator) initial condition.
        A missing integrator state starts at 0 and the observer starts from ``xi0``, ``theta_hat0``.
        """
        x0 = np.asarray(x0, dtype=float).ravel()
        core = self.layout.core.stop
        if x0.size == 2 and core == 3:
            x0 = np.append(x0, 0.0)
        if x0.size != core:
            raise ParameterDomainError(f'{self.kind.value} loop needs {core} initial states, got {x0.size}')
        if self.observer is None:
            return x0
        return np.concatenate((x0, ObserverState.initial(self.xi0, self.theta_hat0).to_vector()))


class OutcomeKind(Enum):
    CONVERGED = 'converged'
    DIVERGED = 'diverged'
    ORIGIN = 'origin-collapse'
    TIMEOUT = 'timeout'


class Outcome(NamedTuple):
    kind: OutcomeKind
    equilibrium: Optional[EquilibriumPoint] = None
    clamped: bool = False

    def __str__(self):
        label = self.kind.value
        if self.equilibrium is not None:
            label = f'{label}:{self.equilibrium.branch.value}'
        if self.clamped:
            label = f'{label}:clamped'
        return label


class Tolerances(NamedTuple):
    """ Classification thresholds. """
    converged: float = 1e-3
    speed: float = 1e-4
    origin: float = 1e-3


@dataclass(frozen=True)
class Trajectory:
    """
    Sampled closed-loop run.

    Args:
        times (np.ndarray):
            Strictly increasing scaled times
        states (np.ndarray):
            Shape (n, T) states, laid out as described by ``layout``
        controls (np.ndarray):
            Duty cycle samples
        H, dH (np.ndarray):
            Stored energy and its analytic rate
        outcome (Outcome):
            Classification of the run
        layout (StateLayout):
            State slots
        clamped (bool):
            Whether the control was saturated
        halted (bool):
            Whether the divergence guard stopped the run
        collapsed (bool):
            Whether the origin guard stopped the run
        final_speed (float):
            Norm of the plant and integrator derivative at the last sample
        x_hat (np.ndarray, optional):
            Observer estimates, shape (2, T)
    """
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    outcome: Optional[Outcome]
    layout: StateLayout
    clamped: bool = False
    halted: bool = False
    collapsed: bool = False
    final_speed: float = float('nan')
    x_hat: Optional[np.ndarray] = None

    @property
    def x1(self):
        return self.states[0]

    @property
    def x2(self):
        return self.states[1]

    @property
    def xc(self):
        return None if self.layout.integrator is None else self.states[self.layout.integrator]

    @property
    def core(self):
        return self.states[self.layout.core]

    @property
    def observer_states(self):
        return None if self.layout.observer is None else self.states[self.layout.observer]


def classify_outcome(traj, known_equilibria, tolerances=Tolerances()):
    """
    Label a trajectory by its last sample.

    The rules are applied in order:
        - converged(eq) : final plant and integrator states within ``tolerances.converged`` of eq and speed below ``tolerances.speed``
        - origin-collapse : the origin guard stopped the run, or (x1, x2) is within ``tolerances.origin`` of the origin
        - diverged : the divergence guard stopped the run
        - timeout : anything else
    """
    final = traj.core[:, -1]
    for eq in known_equilibria:
        target = eq.vector
        k = min(target.size, final.size)
        if np.linalg.norm(final[:k] - target[:k]) < tolerances.converged and traj.final_speed < tolerances.speed:
            return Outcome(OutcomeKind.CONVERGED, eq, traj.clamped)

    if traj.collapsed or math.hypot(final[0], final[1]) < tolerances.origin:
        return Outcome(OutcomeKind.ORIGIN, None, traj.clamped)
    if traj.halted:
        return Outcome(OutcomeKind.DIVERGED, None, traj.clamped)
    return Outcome(OutcomeKind.TIMEOUT, None, traj.clamped)


def _sample_times(t_end, dt):
    n = int(math.floor(t_end / dt + 1e-9))
    times = np.arange(n + 1) * dt
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times = np.append(times, t_end)
    return times


def _integrate_adaptive(sys, y0, t_end, opts):
    core = sys.layout.core

    def guard(t, x):
        return opts.divergence_bound - np.linalg.norm(x[core])
    guard.terminal = True

    events = [guard]
    if opts.stop_at_origin > 0:
        def origin(t, x):
            return math.hypot(x[0], x[1]) - opts.stop_at_origin
        origin.terminal = True
        origin.direction = -1
        events.append(origin)

    sol = solve_ivp(
        sys.rhs, (0.0, t_end), y0, method='RK45', t_eval=_sample_times(t_end, opts.sample_dt),
        events=events, rtol=opts.rtol, atol=opts.atol,
    )
    log.debug('RK45 %s: status=%d nfev=%d samples=%d', sys.kind.value, sol.status, sol.nfev, sol.t.size)

    times, states = sol.t, sol.y
    if sol.status == -1:
        raise StiffnessError(f'adaptive integration failed at tau={times[-1] if times.size else 0.0:.6g}: {sol.message}', _finish(sys, times, states, False))

    halted = collapsed = False
    if sol.status == 1:
        for i, (t_ev, y_ev) in enumerate(zip(sol.t_events, sol.y_events)):
            if len(t_ev) == 0:
                continue
            if times.size == 0 or t_ev[0] > times[-1]:
                times = np.append(times, t_ev[0])
                states = np.column_stack((states, y_ev[0]))
            halted, collapsed = i == 0, i == 1
            break

    return times, states, halted, collapsed


def _integrate_fixed(sys, y0, t_end, opts):
    f = sys.rhs
    core = sys.layout.core
    h = opts.step
    stride = max(1, int(round(opts.sample_dt / h)))
    n_steps = int(math.ceil(t_end / h - 1e-9))

    x = y0.copy()
    times, states = [0.0], [x.copy()]
    halted = collapsed = False
    for i in range(1, n_steps + 1):
        t = (i - 1) * h
        hi = min(h, t_end - t)
        k1 = f(t, x)
        k2 = f(t + hi / 2, x + hi / 2 * k1)
        k3 = f(t + hi / 2, x + hi / 2 * k2)
        k4 = f(t + hi, x + hi * k3)
        x = x + hi / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + hi

        if not np.all(np.isfinite(x)):
            raise StiffnessError(f'fixed step integration produced a non-finite state at tau={t:.6g}', _finish(sys, np.array(times), np.array(states).T, False))

        stop = np.linalg.norm(x[core]) > opts.divergence_bound
        at_origin = opts.stop_at_origin > 0 and math.hypot(x[0], x[1]) < opts.stop_at_origin
        if stop or at_origin or i % stride == 0 or i == n_steps:
            times.append(t)
            states.append(x.copy())
        if stop or at_origin:
            halted, collapsed = stop, not stop
            break

    return np.array(times), np.array(states).T, halted, collapsed


def _finish(sys, times, states, halted=False, collapsed=False):
    layout = sys.layout
    if times.size == 0:
        return Trajectory(times, states, np.empty(0), np.empty(0), np.empty(0), None, layout, sys.clamp, halted, collapsed)

    x_hat = sys.estimates(states) if sys.observer is not None else None
    traj = Trajectory(
        times=times,
        states=states,
        controls=sys.control(states),
        H=hamiltonian(states[:2]),
        dH=power_balance(sys.plant, states[:2]),
        outcome=None,
        layout=layout,
        clamped=sys.clamp,
        halted=halted,
        collapsed=collapsed,
        final_speed=float(np.linalg.norm(sys.rhs(times[-1], states[:, -1])[layout.core])),
        x_hat=x_hat,
    )
    return replace(traj, outcome=classify_outcome(traj, sys.equilibria()))


def integrate(sys, x0, t_end, opts=None):
    """
    Integrate a closed loop from ``x0`` over [0, t_end].

    Args:
        sys (ClosedLoopSystem):
            Closed loop
        x0 (array-like):
            Plant state, optionally followed by the integrator state
        t_end (float):
            Final scaled time, > 0
        opts (IntegratorOptions, optional):
            Integration settings

    Returns:
        Trajectory: samples every ``opts.sample_dt``, plus the stopping state when a guard fires

    Raises:
        StiffnessError: when the integrator cannot proceed; ``err.partial`` holds the samples so far
    """
    opts = opts or IntegratorOptions()
    if not (math.isfinite(t_end) and t_end > 0):
        raise ParameterDomainError(f't_end must be > 0, got {t_end!r}')

    y0 = sys.initial_state(x0)
    if opts.method is Method.FIXED:
        times, states, halted, collapsed = _integrate_fixed(sys, y0, t_end, opts)
    else:
        times, states, halted, collapsed = _integrate_adaptive(sys, y0, t_end, opts)

    traj = _finish(sys, times, states, halted, collapsed)
    log.debug('%s from %s: %s', sys.kind.value, np.array2string(y0[sys.layout.core], precision=4), traj.outcome)
    return traj


def run_many(system, initial_conditions, t_end, opts=None, jobs=1):
    """
    Integrate independent runs from several initial conditions, on a process pool when ``jobs > 1``.

    Returns:
        list: Trajectory per initial condition, in order
    """
    task = partial(integrate, system, t_end=t_end, opts=opts)
    initial_conditions = [np.asarray(ic, dtype=float) for ic in initial_conditions]
    if jobs > 1 and len(initial_conditions) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(task, initial_conditions))
    return [task(ic) for ic in initial_conditions]


def grid_points(x1_range, x2_range, n):
    """ n x n grid of (x1, x2) initial conditions, endpoints included, as a shape (n*n, 2) array. """
    g1, g2 = np.meshgrid(np.linspace(*x1_range, n), np.linspace(*x2_range, n), indexing='ij')
    return np.column_stack((g1.ravel(), g2.ravel()))


def phase_portrait(system, grid, t_end, opts=None, jobs=1):
    """
    One trajectory per grid point of the (x1, x2) plane.

    Args:
        system (ClosedLoopSystem):
            Closed loop, typically one of the static laws
        grid (array-like):
            Shape (N, 2) initial conditions, see :func:`grid_points`
        t_end (float):
            Final scaled time
    """
    return run_many(system, np.asarray(grid, dtype=float), t_end, opts, jobs)


def energy_audit(traj, sp, relative=False):
    """
    Largest gap between the sampled rate of H and the analytic power balance.
    The rate is taken with a five point central stencil on the uniformly spaced samples,
    so the sampling has to resolve the trajectory.

    Args:
        traj (Trajectory):
            Run to audit
        sp (ScaledParams):
            Plant parameters
        relative (bool):
            Divide each gap by max(1, |dH|); Default **False**
    """
    t = traj.times
    H = hamiltonian(traj.states[:2])
    dH = power_balance(sp, traj.states[:2])
    if t.size < 2:
        return 0.0

    spacing = np.diff(t)
    dt = spacing[0]
    # a stopping event appends one off-grid sample
    uneven = np.flatnonzero(np.abs(spacing - dt) > 1e-9 * dt)
    m = t.size if uneven.size == 0 else int(uneven[0]) + 1
    if m < 5:
        gap = np.abs(np.gradient(H, t) - dH)
        scale = np.maximum(1.0, np.abs(dH))
    else:
        fd = (-H[4:m] + 8 * H[3:m - 1] - 8 * H[1:m - 3] + H[0:m - 4]) / (12 * dt)
        gap = np.abs(fd - dH[2:m - 2])
        scale = np.maximum(1.0, np.abs(dH[2:m - 2]))

    if relative:
        gap = gap / scale
    return float(np.max(gap)) if gap.size else 0.0


def replay_open_loop(traj, sp, opts=None):
    """
    Drive the bare plant with the recorded duty cycle (cubic spline through the samples).

    Returns:
        np.ndarray: shape (2, T) plant states at ``traj.times``
    """
    opts = opts or IntegratorOptions()
    u = CubicSpline(traj.times, traj.controls)
    sol = solve_ivp(
        lambda t, x: vector_field(sp, x, u(t)), (traj.times[0], traj.times[-1]), traj.states[:2, 0],
        method='RK45', t_eval=traj.times, rtol=opts.rtol, atol=opts.atol,
    )
    if sol.status == -1:
        raise StiffnessError(f'open-loop replay failed: {sol.message}')
    return sol.y


def write_csv(traj, path, extended=False):
    """
    Export a trajectory as ``tau,x1,x2,xc,u,H,dH,outcome``.
    ``xc`` is empty for static controllers.
    The extended variant appends the 16 observer slots followed by ``x1_hat,x2_hat``.
    """
    header = ['tau', 'x1', 'x2', 'xc', 'u', 'H', 'dH', 'outcome']
    if extended:
        if traj.layout.observer is None:
            raise ParameterDomainError('extended CSV needs a trajectory with observer states')
        header += list(ObserverState.LABELS) + ['x1_hat', 'x2_hat']

    outcome = str(traj.outcome) if traj.outcome is not None else ''
    xc = traj.xc
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for i, tau in enumerate(traj.times):
            row = [
                format(tau, '.17g'), format(traj.x1[i], '.17g'), format(traj.x2[i], '.17g'),
                '' if xc is None else format(xc[i], '.17g'),
                format(traj.controls[i], '.17g'), format(traj.H[i], '.17g'), format(traj.dH[i], '.17g'),
                outcome,
            ]
            if extended:
                row += [format(v, '.17g') for v in traj.observer_states[:, i]]
                row += [format(v, '.17g') for v in traj.x_hat[:, i]]
            writer.writerow(row)
    log.debug('wrote %d samples to %s', traj.times.size, path)
