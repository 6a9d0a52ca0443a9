import csv

import numpy as np
import pytest

import boostlab as bl

SP_D0 = bl.ScaledParams(0.0, 1.0)
SP_D1 = bl.ScaledParams(0.25, 0.75)
GAINS = bl.PIGains(2.0, 1.0, 0.5)


@pytest.fixture(scope='module')
def fig4_loop():
    return bl.ClosedLoopSystem.pi(SP_D1, 1.0, GAINS)


def test_equilibrium_start_stays_put():
    system = bl.ClosedLoopSystem.pi(SP_D0, 2.0, GAINS)
    traj = bl.integrate(system, (4.0, 2.0, 0.0), 50.0)
    np.testing.assert_allclose(traj.core[:, -1], [4.0, 2.0, 0.0], atol=1e-9)
    assert traj.outcome.kind is bl.OutcomeKind.CONVERGED
    assert traj.outcome.equilibrium.branch is bl.Branch.UNIQUE
    assert str(traj.outcome) == 'converged:unique'


def test_pi_converges_to_maximal_branch(fig4_loop):
    traj = bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 200.0)
    assert traj.outcome.kind is bl.OutcomeKind.CONVERGED
    assert traj.outcome.equilibrium.branch is bl.Branch.MAXIMAL
    np.testing.assert_allclose(traj.core[:, -1], [3.0, 1.0, -0.25], atol=1e-3)


def test_pi_leaves_minimal_branch(fig4_loop):
    traj = bl.integrate(fig4_loop, (1.1, 1.0, 0.25), 200.0)
    eq = traj.outcome.equilibrium
    assert eq is None or eq.branch is not bl.Branch.MINIMAL


def test_samples_are_uniform(fig4_loop):
    traj = bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 1.0, bl.IntegratorOptions(sample_dt=0.1))
    np.testing.assert_allclose(traj.times, np.linspace(0.0, 1.0, 11))
    assert traj.states.shape == (3, 11)
    assert traj.controls.shape == traj.H.shape == traj.dH.shape == (11,)
    np.testing.assert_allclose(traj.H, 0.5 * (traj.x1 ** 2 + traj.x2 ** 2))


def test_fixed_step_matches_adaptive(fig4_loop):
    adaptive = bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 5.0)
    fixed = bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 5.0, bl.IntegratorOptions(method='fixed-RK4'))
    np.testing.assert_allclose(fixed.times, adaptive.times, atol=1e-9)
    np.testing.assert_allclose(fixed.states, adaptive.states, atol=1e-6)


def test_ida_k_equilibrium_holds():
    system = bl.ClosedLoopSystem.ida_k(SP_D0, 1.0, k=4.0)
    traj = bl.integrate(system, (1.0, 1.0), 20.0)
    np.testing.assert_allclose(traj.states[:, -1], [1.0, 1.0], atol=1e-9)
    assert traj.xc is None
    assert traj.outcome.kind is bl.OutcomeKind.CONVERGED


def test_ida_alpha_reaches_reference():
    system = bl.ClosedLoopSystem.ida_alpha(SP_D0, 2.0, alpha=0.5)
    traj = bl.integrate(system, (4.5, 1.5), 300.0)
    assert traj.outcome.kind is bl.OutcomeKind.CONVERGED
    np.testing.assert_allclose(traj.states[:, -1], [4.0, 2.0], atol=1e-3)


def test_ida_laws_warn_with_resistance(boostlab_log):
    system = bl.ClosedLoopSystem.ida_k(SP_D1, 1.0)
    assert system.equilibria() == []
    assert 'd1 = 0' in boostlab_log.text


def test_energy_audit(fig4_loop):
    opts = bl.IntegratorOptions(rtol=1e-11, atol=1e-12)
    traj = bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 20.0, opts)
    assert bl.energy_audit(traj, SP_D1) < 1e-5
    assert bl.energy_audit(traj, SP_D1, relative=True) <= bl.energy_audit(traj, SP_D1)


@pytest.mark.parametrize('name', ['fig2', 'fig4'])
def test_energy_audit_on_preset_runs(name):
    (cfg,) = bl.preset(name)
    opts = bl.IntegratorOptions(rtol=1e-11, atol=1e-12, sample_dt=1e-3, divergence_bound=100.0, stop_at_origin=0.05)
    system = cfg.build_system()
    for x0 in cfg.initial_conditions:
        traj = bl.integrate(system, x0, 30.0, opts)
        assert bl.energy_audit(traj, system.plant, relative=True) < 1e-5


def test_fixed_step_is_fourth_order(fig4_loop):
    x0 = (2.5, 1.2, 0.0)
    exact = bl.integrate(fig4_loop, x0, 2.0, bl.IntegratorOptions(rtol=1e-12, atol=1e-13)).states[:, -1]
    errors = []
    for h in (0.05, 0.025):
        opts = bl.IntegratorOptions(method='fixed-RK4', step=h, sample_dt=0.1)
        errors.append(np.linalg.norm(bl.integrate(fig4_loop, x0, 2.0, opts).states[:, -1] - exact))
    assert 12 < errors[0] / errors[1] < 20


def test_replay_open_loop(fig4_loop):
    traj = bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 10.0)
    replay = bl.replay_open_loop(traj, SP_D1)
    np.testing.assert_allclose(replay, traj.states[:2], atol=1e-4)


def test_divergence_guard():
    system = bl.ClosedLoopSystem.pi(SP_D0, 2.0, GAINS)
    traj = bl.integrate(system, (4.1, 2.0, 0.0), 600.0, bl.IntegratorOptions(divergence_bound=20.0))
    assert traj.halted
    assert traj.outcome.kind is bl.OutcomeKind.DIVERGED
    assert traj.times[-1] < 600.0
    assert np.linalg.norm(traj.core[:, -1]) == pytest.approx(20.0, rel=1e-6)


def test_fixed_step_stops_at_origin():
    system = bl.ClosedLoopSystem.pi(SP_D1, 1.0, GAINS)
    opts = bl.IntegratorOptions(method='fixed-RK4', step=1e-2, stop_at_origin=10.0)
    traj = bl.integrate(system, (2.5, 1.2, 0.0), 50.0, opts)
    assert traj.collapsed and not traj.halted
    assert traj.outcome.kind is bl.OutcomeKind.ORIGIN
    np.testing.assert_allclose(traj.times, [0.0, 0.01])


def test_origin_guard_stops_collapsing_run():
    system = bl.ClosedLoopSystem.pi(SP_D0, 2.0, GAINS)
    traj = bl.integrate(system, (3.9, 2.0, 0.0), 600.0, bl.IntegratorOptions(divergence_bound=100.0, stop_at_origin=0.05))
    assert traj.collapsed
    assert traj.outcome.kind is bl.OutcomeKind.ORIGIN
    assert traj.times[-1] < 600.0
    assert np.hypot(traj.x1[-1], traj.x2[-1]) == pytest.approx(0.05, rel=1e-6)


def _trajectory(final, speed=0.0, halted=False, collapsed=False):
    states = np.column_stack((np.zeros(3), final))
    n = states.shape[1]
    layout = bl.StateLayout(3, 2)
    return bl.Trajectory(np.arange(n, dtype=float), states, np.zeros(n), np.zeros(n), np.zeros(n), None, layout, halted=halted, collapsed=collapsed, final_speed=speed)


@pytest.mark.parametrize('final, speed, halted, collapsed, kind', [
    ((3.0, 1.0, -0.25), 0.0, False, False, bl.OutcomeKind.CONVERGED),
    ((3.0, 1.0, -0.25), 1.0, False, False, bl.OutcomeKind.TIMEOUT),
    ((1e-4, 0.0, 5.0), 0.0, False, False, bl.OutcomeKind.ORIGIN),
    ((0.05, 0.0, 20.0), 1.0, False, True, bl.OutcomeKind.ORIGIN),
    ((1e6, 1.0, 0.0), 0.0, True, False, bl.OutcomeKind.DIVERGED),
    ((2.0, 2.0, 0.0), 0.0, False, False, bl.OutcomeKind.TIMEOUT),
])
def test_classify_outcome(final, speed, halted, collapsed, kind):
    eqs = bl.pi_equilibria(SP_D1, 1.0, GAINS)
    outcome = bl.classify_outcome(_trajectory(final, speed, halted, collapsed), eqs)
    assert outcome.kind is kind
    if kind is bl.OutcomeKind.CONVERGED:
        assert outcome.equilibrium.branch is bl.Branch.MAXIMAL


def test_run_many_keeps_order(fig4_loop):
    ics = [(3.0, 1.0, -0.25), (2.5, 1.2, 0.0)]
    serial = bl.run_many(fig4_loop, ics, 2.0)
    pooled = bl.run_many(fig4_loop, ics, 2.0, jobs=2)
    for a, b in zip(serial, pooled):
        np.testing.assert_allclose(a.states, b.states)
    np.testing.assert_allclose(serial[0].states[:, 0], ics[0])


def test_grid_points():
    grid = bl.grid_points((0.2, 8.0), (0.2, 4.0), 10)
    assert grid.shape == (100, 2)
    np.testing.assert_allclose(grid[0], [0.2, 0.2])
    np.testing.assert_allclose(grid[-1], [8.0, 4.0])


def test_initial_state():
    pi = bl.ClosedLoopSystem.pi(SP_D1, 1.0, GAINS)
    np.testing.assert_array_equal(pi.initial_state((1.0, 2.0)), [1.0, 2.0, 0.0])
    with pytest.raises(bl.ParameterDomainError):
        pi.initial_state((1.0, 2.0, 3.0, 4.0))

    observed = bl.ClosedLoopSystem.pid_pbc(SP_D0, 1.0, bl.PbcConfig(x1_star=1.0), observer=bl.ObserverConfig())
    assert observed.initial_state((0.5, 0.8, 0.0)).shape == (3 + bl.ObserverState.SIZE,)
    assert observed.layout.labels[:4] == ('x1', 'x2', 'xc', 'xi1')


@pytest.mark.parametrize('kwargs', [dict(t_end=0.0), dict(t_end=float('inf'))])
def test_integrate_rejects_bad_horizon(fig4_loop, kwargs):
    with pytest.raises(bl.ParameterDomainError):
        bl.integrate(fig4_loop, (3.0, 1.0, -0.25), **kwargs)


def test_observer_only_with_pid_pbc():
    with pytest.raises(bl.ParameterDomainError):
        bl.ClosedLoopSystem(SP_D1, 1.0, 'pi', gains=GAINS, observer=bl.ObserverConfig())


def test_write_csv(tmp_path, fig4_loop):
    traj = bl.integrate(fig4_loop, (3.0, 1.0, -0.25), 0.05)
    path = tmp_path / 'run.csv'
    bl.write_csv(traj, path)
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['tau', 'x1', 'x2', 'xc', 'u', 'H', 'dH', 'outcome']
    assert len(rows) == traj.times.size + 1
    assert float(rows[1][1]) == 3.0
    assert rows[-1][-1] == str(traj.outcome)
    with pytest.raises(bl.ParameterDomainError):
        bl.write_csv(traj, tmp_path / 'extended.csv', extended=True)


def test_write_csv_static_loop_has_empty_integrator(tmp_path):
    traj = bl.integrate(bl.ClosedLoopSystem.ida_k(SP_D0, 1.0), (1.0, 1.0), 0.02)
    path = tmp_path / 'ida.csv'
    bl.write_csv(traj, path)
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert all(row['xc'] == '' for row in rows)


def test_observer_loop_writes_extended_csv(tmp_path):
    system = bl.ClosedLoopSystem.pid_pbc(SP_D0, 1.0, bl.PbcConfig(x1_star=1.0), observer=bl.ObserverConfig(gamma=10.0))
    traj = bl.integrate(system, (0.5, 0.8, 0.0), 0.05)
    assert traj.x_hat.shape == (2, traj.times.size)
    path = tmp_path / 'observer.csv'
    bl.write_csv(traj, path, extended=True)
    with open(path, newline='') as f:
        header = next(csv.reader(f))
    assert header[8:] == list(bl.ObserverState.LABELS) + ['x1_hat', 'x2_hat']


def test_fixed_step_csv_is_deterministic(tmp_path, fig4_loop):
    opts = bl.IntegratorOptions(method='fixed-RK4', step=1e-2, sample_dt=0.1)
    paths = [tmp_path / 'a.csv', tmp_path / 'b.csv']
    for path in paths:
        bl.write_csv(bl.integrate(fig4_loop, (2.5, 1.2, 0.0), 5.0, opts), path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
