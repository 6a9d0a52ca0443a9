########################################
# PRESETS : Built-in experiment setups #
########################################
import logging

from ._config import ControllerSpec, ExperimentConfig, GridSpec
from ._controllers import PbcConfig, PIGains
from ._errors import ConfigError
from ._model import ScaledParams
from ._observer import ObserverConfig
from ._sim import ControllerKind, IntegratorOptions

__all__ = ['PRESETS', 'preset']
log = logging.getLogger(__name__)

_GRID = GridSpec((0.2, 8.0), (0.2, 4.0), 10)

PRESETS = {
    # zero dynamics for d1*d2 below and at 1/(4y*^2)
    'fig1': (
        ExperimentConfig('fig1-admissible', scaled=ScaledParams(0.25, 0.75), y_star=1.0),
        ExperimentConfig('fig1-boundary', scaled=ScaledParams(0.25, 1.0), y_star=1.0),
    ),
    'fig2': (
        ExperimentConfig(
            'fig2',
            scaled=ScaledParams(0.0, 1.0),
            y_star=2.0,
            controller=ControllerSpec(ControllerKind.PI, gains=PIGains(2.0, 1.0, 0.5)),
            initial_conditions=((4.0, 2.0, 0.0), (3.9, 2.0, 0.0), (4.1, 2.0, 0.0)),
            t_end=600.0,
            integrator=IntegratorOptions(divergence_bound=100.0, stop_at_origin=0.05),
        ),
    ),
    'fig3': (
        ExperimentConfig(
            'fig3',
            scaled=ScaledParams(0.25, 0.75),
            y_star=1.0,
            controller=ControllerSpec(ControllerKind.PI, gains=PIGains(2.0, 1.0, 0.5)),
            initial_conditions=((1.0, 1.0, 0.25), (0.9, 1.0, 0.25), (1.1, 1.0, 0.25)),
            t_end=200.0,
        ),
    ),
    'fig4': (
        ExperimentConfig(
            'fig4',
            scaled=ScaledParams(0.25, 0.75),
            y_star=1.0,
            controller=ControllerSpec(ControllerKind.PI, gains=PIGains(2.0, 1.0, 0.5)),
            initial_conditions=((3.0, 1.0, -0.25), (2.5, 1.2, 0.0), (3.5, 0.9, -1.0)),
            t_end=200.0,
        ),
    ),
    'fig5': (
        ExperimentConfig(
            'fig5',
            scaled=ScaledParams(0.0, 1.0),
            y_star=2.0,
            controller=ControllerSpec(ControllerKind.IDA_ALPHA, pbc=PbcConfig(alpha=0.5)),
            initial_conditions=((4.5, 1.5),),
            t_end=300.0,
            grid=_GRID,
        ),
    ),
    'fig6': (
        ExperimentConfig(
            'fig6',
            scaled=ScaledParams(0.0, 1.0),
            y_star=1.0,
            controller=ControllerSpec(ControllerKind.IDA_K, pbc=PbcConfig(k=4.0)),
            initial_conditions=((1.0, 1.0),),
            t_end=300.0,
            grid=_GRID,
        ),
    ),
    'observer': (
        ExperimentConfig(
            'observer',
            scaled=ScaledParams(0.0, 1.0),
            y_star=1.0,
            controller=ControllerSpec(
                ControllerKind.PID_PBC,
                pbc=PbcConfig(x1_star=1.0, K_P=1.0, K_I=1.0),
                observer=ObserverConfig(),
            ),
            initial_conditions=((0.5, 0.8, 0.0),),
            t_end=50.0,
        ),
    ),
}


def preset(name):
    """
    Configurations of a built-in experiment.

    Raises:
        ConfigError: for unknown names
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f'unknown preset {name!r}, choose from {", ".join(PRESETS)}') from None
