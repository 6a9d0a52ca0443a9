#################################
# PLOT : SVG verification plots #
#################################
import logging

import matplotlib.pyplot as plt
import numpy as np
from scipy.linalg import cholesky

__all__ = ['plot_time_series', 'plot_phase_plane', 'plot_zero_dynamics', 'doa_section']
log = logging.getLogger(__name__)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format='svg')
    plt.close(fig)
    log.debug('saved %s', path)


def plot_time_series(traj, path, title=None):
    """ States and duty cycle against scaled time. """
    fig, (ax_x, ax_u) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax_x.plot(traj.times, traj.x1, label='x1')
    ax_x.plot(traj.times, traj.x2, label='x2')
    if traj.xc is not None:
        ax_x.plot(traj.times, traj.xc, label='xc')
    if traj.x_hat is not None:
        ax_x.plot(traj.times, traj.x_hat[0], '--', label='x1_hat')
    ax_x.set_ylabel('state')
    ax_x.grid(True, alpha=0.3)
    ax_x.legend(loc='best')

    ax_u.plot(traj.times, traj.controls, color='black')
    ax_u.set_xlabel('tau')
    ax_u.set_ylabel('u')
    ax_u.grid(True, alpha=0.3)

    ax_x.set_title(title or str(traj.outcome))
    _save(fig, path)


def doa_section(estimate, n=200):
    """
    Boundary of the (x1, x2) cross-section of a region estimate through its center.

    Returns:
        np.ndarray: shape (2, n) points
    """
    P2 = estimate.P[:2, :2]
    L = cholesky(P2, lower=True)
    phi = np.linspace(0.0, 2 * np.pi, n)
    circle = np.vstack((np.cos(phi), np.sin(phi)))
    return estimate.center[:2, None] + np.sqrt(estimate.rho) * np.linalg.solve(L.T, circle)


def plot_phase_plane(trajectories, path, equilibria=(), doa=None, title=None):
    """
    Trajectories in the (x1, x2) plane.

    Args:
        trajectories (list):
            Trajectory objects
        path (str):
            SVG file
        equilibria (iterable):
            EquilibriumPoint objects to mark
        doa (DoaEstimate, optional):
            Region estimate whose cross-section is drawn
    """
    fig, ax = plt.subplots(figsize=(7, 6))
    for traj in trajectories:
        ax.plot(traj.x1, traj.x2, linewidth=0.8)
        ax.plot(traj.x1[0], traj.x2[0], 'o', color='gray', markersize=3)
    for eq in equilibria:
        ax.plot(eq.x1_bar, eq.x2_bar, 'x', color='red', markersize=8, label=eq.branch.value)
    if doa is not None:
        edge = doa_section(doa)
        ax.plot(edge[0], edge[1], 'k--', label='region estimate')

    ax.set_xlabel('x1')
    ax.set_ylabel('x2')
    ax.grid(True, alpha=0.3)
    if equilibria or doa is not None:
        ax.legend(loc='best')
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_zero_dynamics(zds, path, u_max=None, title=None):
    """
    Right hand side of the zero dynamics against u, one curve per ZeroDynamics.
    Equilibria are marked and the stable ones filled.
    """
    if u_max is None:
        u_max = max(2.5 / zd.y_star for zd in zds)
    u = np.linspace(0.0, u_max, 400)

    fig, ax = plt.subplots(figsize=(7, 5))
    ax.axhline(0.0, color='black', linewidth=0.8)
    for zd in zds:
        line, = ax.plot(u, zd.rhs(u), label=f'd1={zd.d1:g}, d2={zd.d2:g}, y*={zd.y_star:g}')
        for pt in zd.equilibria:
            fill = line.get_color() if pt.tag.value == 'stable' else 'none'
            ax.plot(pt.u, 0.0, 'o', markeredgecolor=line.get_color(), markerfacecolor=fill)

    ax.set_xlabel('u')
    ax.set_ylabel('du/dtau')
    ax.grid(True, alpha=0.3)
    ax.legend(loc='best')
    if title:
        ax.set_title(title)
    _save(fig, path)
