###############################
# CLI : boostlab command line #
###############################
import argparse
import json
import logging
import os
import sys

import matplotlib
import numpy as np

from ._analysis import (
    SWEEPS, DoaOptions, estimate_doa, estimate_pbc_doa, pi_stability, zero_dynamics,
)
from ._config import ExperimentConfig
from ._equilibria import assignable_equilibria, existence_condition, physical_existence_condition, pi_equilibria
from ._errors import BoostLabError, ConfigError, NoEquilibriumError, NotApplicableError, NotHurwitzError
from ._log import set_verbosity
from ._model import unscale_state
from ._observer import excitation_monitor
from ._plot import plot_phase_plane, plot_time_series, plot_zero_dynamics
from ._presets import PRESETS, preset
from ._sim import ControllerKind, OutcomeKind, grid_points, run_many, write_csv
from ._time import Time
from ._version import __version__

__all__ = ['build_parser', 'main']
log = logging.getLogger(__name__)

SWEEP_VIOLATION = 4


def _configs(args):
    if args.config is not None:
        configs = [ExperimentConfig.load(args.config)]
    elif args.preset is not None:
        configs = list(preset(args.preset))
    else:
        raise ConfigError('one of --config or --preset is required')
    return configs


def _outdir(args, cfg):
    path = args.out if args.out is not None else cfg.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _csv(args):
    return args.format in ('csv', 'both')


def _svg(args):
    return args.format in ('svg', 'both')


def _fmt(values):
    return '(' + ', '.join(f'{v:.6g}' for v in values) + ')'


def cmd_equilibria(args):
    """ Print the assignable equilibria and the existence margin. """
    for cfg in _configs(args):
        sp, y = cfg.sp, cfg.reference
        check = existence_condition(sp, y)
        print(f'[{cfg.name}] d1={sp.d1:.6g} d2={sp.d2:.6g} y*={y:.6g}')
        print(f'  existence margin 1/(4y*^2) - d1*d2 = {check.margin:.6g}')
        if cfg.physical is not None:
            pcheck = physical_existence_condition(cfg.physical, y * cfg.physical.E)
            print(f'  physical margin E^2/(4v*^2) - RG = {pcheck.margin:.6g}')

        try:
            equilibria = assignable_equilibria(sp, y)
        except NoEquilibriumError as err:
            print(f'  no equilibrium (margin {err.margin:.6g})')
            continue

        for eq in equilibria:
            line = f'  {eq.branch.value:<16} x=({eq.x1_bar:.6g}, {eq.x2_bar:.6g}) u={eq.u_bar:.6g}'
            if cfg.physical is not None:
                i_L, v_C = unscale_state(cfg.physical, eq.x1_bar, eq.x2_bar)
                line += f'  i_L={i_L:.6g}A v_C={v_C:.6g}V'
            print(line)

        if cfg.controller is not None and cfg.controller.kind is ControllerKind.PI:
            for eq in pi_equilibria(sp, y, cfg.controller.gains):
                print(f'  PI {eq.branch.value:<13} chi={_fmt(eq.vector)}')
    return 0


def _simulate_zero_dynamics(args, configs):
    zds = [zero_dynamics(cfg.sp, cfg.reference) for cfg in configs]
    for cfg, zd in zip(configs, zds):
        points = ', '.join(f'u={pt.u:.6g} {pt.tag.value}' for pt in zd.equilibria)
        print(f'[{cfg.name}] zero dynamics: {points}')
    if _svg(args):
        path = os.path.join(_outdir(args, configs[0]), f'{configs[0].name.split("-")[0]}_zero_dynamics.svg')
        plot_zero_dynamics(zds, path)
        print(f'  wrote {path}')


def cmd_simulate(args):
    """ Run every initial condition (and grid point) of each configuration. """
    configs = _configs(args)
    static = [cfg for cfg in configs if cfg.controller is None]
    if static:
        _simulate_zero_dynamics(args, static)

    for cfg in configs:
        if cfg.controller is None:
            continue
        system = cfg.build_system()
        outdir = _outdir(args, cfg)
        ics = list(cfg.initial_conditions)
        if cfg.grid is not None:
            ics += [tuple(p) for p in grid_points(cfg.grid.x1, cfg.grid.x2, cfg.grid.n)]
        if not ics:
            raise ConfigError(f'{cfg.name}: no initial conditions')

        with Time(f'{cfg.name} simulation', level=logging.INFO):
            trajectories = run_many(system, ics, cfg.t_end, cfg.integrator, args.jobs)

        counts = {}
        for i, (ic, traj) in enumerate(zip(ics, trajectories)):
            counts[traj.outcome.kind] = counts.get(traj.outcome.kind, 0) + 1
            if i < len(cfg.initial_conditions):
                print(f'[{cfg.name}] run {i} from {_fmt(ic)}: {traj.outcome} at tau={traj.times[-1]:.6g}')
            if _csv(args):
                write_csv(traj, os.path.join(outdir, f'{cfg.name}_{i}.csv'), extended=traj.x_hat is not None)
            if _svg(args) and i < len(cfg.initial_conditions):
                plot_time_series(traj, os.path.join(outdir, f'{cfg.name}_{i}.svg'), f'{cfg.name} run {i}: {traj.outcome}')

            if traj.x_hat is not None:
                report = excitation_monitor(cfg.controller.observer, traj.times, integral=traj.observer_states[-1])
                if report.satisfied:
                    after = traj.times >= report.t_c
                    err = np.max(np.abs(traj.x_hat[:, after] - traj.states[:2, after]))
                    print(f'  observer: t_c={report.t_c:.6g}, max |x_hat - x| after t_c = {err:.3g}')
                else:
                    print('  observer: excitation threshold not reached')

        if cfg.grid is not None:
            summary = ', '.join(f'{kind.value}={n}' for kind, n in counts.items())
            print(f'[{cfg.name}] {len(trajectories)} runs: {summary}')
        if _svg(args) and system.layout.integrator is None:
            path = os.path.join(outdir, f'{cfg.name}_phase.svg')
            plot_phase_plane(trajectories, path, system.equilibria(), title=cfg.name)
    return 0


def _run_sweep(name, n, seed):
    if name not in SWEEPS:
        raise ConfigError(f'unknown sweep {name!r}, choose from {", ".join(SWEEPS)}')
    kwargs = {'seed': seed}
    if n is not None:
        kwargs['n'] = n

    with Time(f'{name} sweep', level=logging.INFO):
        result = SWEEPS[name](**kwargs)

    status = 'passed' if result.passed else 'FAILED'
    print(f'{result.name}: {result.draws} draws, {result.violations} violations, max error {result.max_error:.3g} ({status})')
    for key, value in result.details.items():
        print(f'  {key}: {value}')
    return 0 if result.passed else SWEEP_VIOLATION


def cmd_stability(args):
    """ Routh-Hurwitz table per PI equilibrium, also written as JSON. """
    if args.sweep is not None:
        return _run_sweep(args.sweep, args.n, args.seed)

    for cfg in _configs(args):
        if cfg.controller is None or cfg.controller.kind is not ControllerKind.PI:
            raise NotApplicableError(f'{cfg.name}: stability tables are computed for the PI loop')
        reports = pi_stability(cfg.sp, cfg.controller.gains, cfg.reference)

        print(f'[{cfg.name}]')
        for report in reports:
            cp = report.charpoly
            print(f'  {report.equilibrium.branch.value:<16} a0={cp.a0:.6g} a1={cp.a1:.6g} a2={cp.a2:.6g} a2a1-a0={cp.hurwitz_margin:.6g}')
            print(f'  {"":<16} verdict={report.verdict.value} failing={report.failing_condition}')
            print(f'  {"":<16} eigenvalues={", ".join(f"{ev:.4g}" for ev in report.eigenvalues)}')
            if report.gain_conditions is not None:
                print(f'  {"":<16} gain conditions: K_P {report.gain_conditions.proportional}, K_I {report.gain_conditions.integral}')

        path = os.path.join(_outdir(args, cfg), f'{cfg.name}_stability.json')
        with open(path, 'w') as f:
            json.dump({'name': cfg.name, 'reports': [r.to_dict() for r in reports]}, f, indent=2)
        print(f'  wrote {path}')
    return 0


def cmd_zero_dynamics(args):
    """ Equilibria of the zero dynamics and their stability. """
    configs = _configs(args)
    zds = []
    for cfg in configs:
        zd = zero_dynamics(cfg.sp, cfg.reference)
        zds.append(zd)
        print(f'[{cfg.name}] d1*d2={cfg.sp.d1 * cfg.sp.d2:.6g} 1/(4y*^2)={0.25 / cfg.reference ** 2:.6g}{" (boundary)" if zd.boundary else ""}')
        for pt in zd.equilibria:
            branch = f' <- {pt.branch.value}' if pt.branch is not None else ''
            print(f'  u={pt.u:.6g} slope={pt.slope:.6g} {pt.tag.value}{branch}')
    if _svg(args):
        path = os.path.join(_outdir(args, configs[0]), f'{configs[0].name}_zero_dynamics.svg')
        plot_zero_dynamics(zds, path)
    return 0


def cmd_doa(args):
    """ Lyapunov region estimate, boundary samples and simulation cross-check. """
    rc = 0
    for cfg in _configs(args):
        c = cfg.controller
        if c is None:
            raise NotApplicableError(f'{cfg.name}: no controller configured')
        q_scale = args.q_scale if args.q_scale is not None else cfg.doa_q_scale
        seed = args.seed if args.seed is not None else cfg.doa_seed

        if c.kind is ControllerKind.PI:
            Q = q_scale * np.eye(3)
            opts = DoaOptions(samples=cfg.doa_samples, seed=seed)
            try:
                est = estimate_doa(cfg.sp, c.gains, cfg.reference, opts=opts, Q=Q)
            except NotHurwitzError as err:
                if cfg.sp.d1 == 0:
                    raise NotHurwitzError(
                        f'{cfg.name}: no region estimate, with d1 = 0 the PI equilibrium is unstable for every choice of gains '
                        f'since the constant coefficient a0 = -K_I of its characteristic polynomial is negative; {err}', err.report,
                    ) from None
                raise
        elif c.kind in (ControllerKind.IDA_ALPHA, ControllerKind.IDA_K):
            opts = DoaOptions(samples=cfg.doa_samples, seed=seed, require_positive=True)
            est = estimate_pbc_doa(cfg.sp, cfg.reference, c.kind, c.pbc, Q=q_scale * np.eye(2), opts=opts)
        else:
            raise NotApplicableError(f'{cfg.name}: region estimates cover the PI and static IDA-PBC loops')

        print(f'[{cfg.name}] center={_fmt(est.center)} rho={est.rho:.6g} ({est.violation_count}/{est.sample_count} violations above)')
        for row in est.P:
            print(f'  P: {_fmt(row)}')

        outdir = _outdir(args, cfg)
        n = args.validate if args.validate is not None else cfg.doa_validate
        samples = est.boundary_samples(max(n, 1), seed=seed + 1)
        if _csv(args):
            path = os.path.join(outdir, f'{cfg.name}_doa_boundary.csv')
            header = ','.join(['x1', 'x2', 'xc'][:samples.shape[0]])
            np.savetxt(path, samples.T, delimiter=',', header=header, comments='', fmt='%.17g')
            print(f'  wrote {path}')

        if n > 0:
            system = cfg.build_system()
            ics = [samples[:, i] for i in range(n)]
            with Time(f'{cfg.name} boundary check', level=logging.INFO):
                trajectories = run_many(system, ics, cfg.t_end, cfg.integrator, args.jobs)
            converged = sum(t.outcome.kind is OutcomeKind.CONVERGED for t in trajectories)
            print(f'  {converged}/{n} boundary samples converge')
            if converged < n:
                log.warning('%s: %d boundary samples do not converge within tau=%g', cfg.name, n - converged, cfg.t_end)
                rc = SWEEP_VIOLATION
            if _svg(args):
                plot_phase_plane(trajectories, os.path.join(outdir, f'{cfg.name}_doa.svg'), system.equilibria(), est, cfg.name)
    return rc


def cmd_sweep(args):
    """ Randomized property sweep. """
    return _run_sweep(args.name, args.n, args.seed if args.seed is not None else 0)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument('--config', help='JSON experiment configuration')
    source.add_argument('--preset', choices=list(PRESETS), help='built-in experiment')
    common.add_argument('--out', help='output directory; Default: output_dir of the configuration')
    common.add_argument('--format', choices=('csv', 'svg', 'both'), default='csv', help='artifacts to write')
    common.add_argument('--jobs', type=int, default=1, help='parallel simulation processes')
    common.add_argument('-v', '--verbose', action='count', default=0, help='more logging, repeatable')
    common.add_argument('-q', '--quiet', action='count', default=0, help='less logging, repeatable')

    parser = argparse.ArgumentParser(prog='boostlab', description='Boost converter control laboratory')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('equilibria', parents=[common], help='assignable equilibria and existence margin')
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser('simulate', parents=[common], help='closed-loop simulations')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('stability', parents=[common], help='Routh-Hurwitz classification of the PI loop')
    p.add_argument('--sweep', choices=list(SWEEPS), help='run a property sweep instead')
    p.add_argument('--n', type=int, help='number of sweep draws')
    p.add_argument('--seed', type=int, default=0, help='sweep seed')
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser('zero-dynamics', parents=[common], help='zero dynamics of the voltage output')
    p.set_defaults(func=cmd_zero_dynamics)

    p = sub.add_parser('doa', parents=[common], help='Lyapunov domain of attraction estimate')
    p.add_argument('--q-scale', type=float, help='scale of Q = q*I')
    p.add_argument('--validate', type=int, help='boundary samples to simulate')
    p.add_argument('--seed', type=int, help='sampling seed')
    p.set_defaults(func=cmd_doa)

    p = sub.add_parser('sweep', parents=[common], help='randomized property sweeps')
    p.add_argument('name', choices=list(SWEEPS))
    p.add_argument('--n', type=int, help='number of draws')
    p.add_argument('--seed', type=int, help='random seed')
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    """
    Entry point of the ``boostlab`` command.

    Returns:
        int: 0 on success, 2 for configuration errors, 3 for numerical failures, 4 for property violations
    """
    args = build_parser().parse_args(argv)
    matplotlib.use('Agg')
    set_verbosity(args.verbose, args.quiet)
    if args.jobs < 1:
        log.error('--jobs must be >= 1')
        return ConfigError.exit_code

    try:
        return args.func(args)
    except BoostLabError as err:
        log.error('%s', err)
        return err.exit_code


if __name__ == '__main__':
    sys.exit(main())
