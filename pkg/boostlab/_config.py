##########################################
# CONFIG : JSON experiment configuration #
##########################################
import json
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from ._controllers import Bias, PbcConfig, PIGains
from ._errors import ConfigError, ParameterDomainError
from ._model import PhysicalParams, ScaledParams, to_scaled
from ._observer import Innovation, ObserverConfig
from ._sim import ClosedLoopSystem, ControllerKind, IntegratorOptions, Method

__all__ = ['ControllerSpec', 'GridSpec', 'ExperimentConfig']
log = logging.getLogger(__name__)
_MISSING = object()


class GridSpec(NamedTuple):
    """ n x n grid over x1 in [x1[0], x1[1]] and x2 in [x2[0], x2[1]]. """
    x1: tuple
    x2: tuple
    n: int


@dataclass(frozen=True)
class ControllerSpec:
    """ Controller selection of an experiment. """
    kind: ControllerKind
    gains: Optional[PIGains] = None
    pbc: Optional[PbcConfig] = None
    observer: Optional[ObserverConfig] = None


def _check_keys(data, path, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f'{path}: expected an object, got {type(data).__name__}')
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f'{path}: unknown key(s) {", ".join(unknown)}')


def _as_float(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'{path}: expected a number, got {value!r}')
    return float(value)


def _number(data, key, path, default=_MISSING):
    value = data.get(key, default)
    if value is _MISSING:
        raise ConfigError(f'{path}.{key}: required')
    if value is None:
        return None
    return _as_float(value, f'{path}.{key}')


def _integer(data, key, path, default):
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'{path}.{key}: expected an integer, got {value!r}')
    return value


def _pair(data, key, path):
    value = data.get(key)
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigError(f'{path}.{key}: expected [low, high]')
    lo, hi = (_as_float(v, f'{path}.{key}') for v in value)
    if not lo < hi:
        raise ConfigError(f'{path}.{key}: low must be below high')
    return (lo, hi)


def _build(path, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except (ParameterDomainError, ValueError) as err:
        raise ConfigError(f'{path}: {err}') from None


def _parse_controller(data, path):
    if data is None:
        return None
    if not isinstance(data, dict) or 'type' not in data:
        raise ConfigError(f'{path}.type: required')
    kind = _build(f'{path}.type', ControllerKind, data['type'])

    if kind is ControllerKind.PI:
        _check_keys(data, path, ('type', 'K_P', 'K_I', 'u0'))
        gains = _build(path, PIGains, _number(data, 'K_P', path), _number(data, 'K_I', path), _number(data, 'u0', path, 0.0))
        return ControllerSpec(kind, gains=gains)

    if kind is ControllerKind.IDA_ALPHA:
        _check_keys(data, path, ('type', 'alpha'))
        return ControllerSpec(kind, pbc=_build(path, PbcConfig, alpha=_number(data, 'alpha', path, 0.5)))

    if kind is ControllerKind.IDA_K:
        _check_keys(data, path, ('type', 'k'))
        return ControllerSpec(kind, pbc=_build(path, PbcConfig, k=_number(data, 'k', path, 4.0)))

    _check_keys(data, path, ('type', 'K_P', 'K_I', 'x1_star', 'bias', 'observer'))
    pbc = _build(
        path, PbcConfig,
        K_P=_number(data, 'K_P', path, 1.0),
        K_I=_number(data, 'K_I', path, 1.0),
        x1_star=_number(data, 'x1_star', path, None),
        bias=_build(f'{path}.bias', Bias, data.get('bias', Bias.DEVIATION.value)),
    )

    observer = None
    obs = data.get('observer')
    if obs is not None:
        opath = f'{path}.observer'
        _check_keys(obs, opath, ('lam', 'gamma', 'mu', 'innovation'))
        observer = _build(
            opath, ObserverConfig,
            lam=_number(obs, 'lam', opath, 1.0),
            gamma=_number(obs, 'gamma', opath, 1000.0),
            mu=_number(obs, 'mu', opath, 0.05),
            innovation=_build(f'{opath}.innovation', Innovation, obs.get('innovation', Innovation.CORRECTED.value)),
        )
    return ControllerSpec(kind, pbc=pbc, observer=observer)


def _dump_controller(spec):
    if spec is None:
        return None
    data = {'type': spec.kind.value}
    if spec.kind is ControllerKind.PI:
        data.update(K_P=spec.gains.K_P, K_I=spec.gains.K_I, u0=spec.gains.u0)
    elif spec.kind is ControllerKind.IDA_ALPHA:
        data['alpha'] = spec.pbc.alpha
    elif spec.kind is ControllerKind.IDA_K:
        data['k'] = spec.pbc.k
    else:
        data.update(K_P=spec.pbc.K_P, K_I=spec.pbc.K_I, x1_star=spec.pbc.x1_star, bias=spec.pbc.bias.value)
        if spec.observer is None:
            data['observer'] = None
        else:
            o = spec.observer
            data['observer'] = {'lam': o.lam, 'gamma': o.gamma, 'mu': o.mu, 'innovation': o.innovation.value}
    return data


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment: plant, reference, controller, initial conditions and output settings.

    Exactly one of ``scaled`` and ``physical`` is given.
    With physical parameters the reference may be given as ``v_star`` in volts instead of ``y_star``.

    Example:
        >>> cfg = ExperimentConfig.from_dict({
        ...     'name': 'fig2',
        ...     'scaled': {'d1': 0, 'd2': 1},
        ...     'y_star': 2,
        ...     'controller': {'type': 'pi', 'K_P': 2, 'K_I': 1, 'u0': 0.5},
        ...     'initial_conditions': [[4, 2, 0]],
        ... })
        >>> cfg.build_system().kind.value
        'pi'
    """
    name: str = 'experiment'
    scaled: Optional[ScaledParams] = None
    physical: Optional[PhysicalParams] = None
    y_star: Optional[float] = None
    v_star: Optional[float] = None
    controller: Optional[ControllerSpec] = None
    initial_conditions: tuple = ()
    t_end: float = 100.0
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    clamp: bool = False
    grid: Optional[GridSpec] = None
    doa_q_scale: float = 1.0
    doa_samples: int = 4096
    doa_seed: int = 0
    doa_validate: int = 64
    output_dir: str = 'out'

    def __post_init__(self):
        if (self.scaled is None) == (self.physical is None):
            raise ConfigError('exactly one of "scaled" and "physical" must be given')
        if (self.y_star is None) == (self.v_star is None):
            raise ConfigError('exactly one of "y_star" and "v_star" must be given')
        if self.v_star is not None and self.physical is None:
            raise ConfigError('"v_star" needs "physical" parameters')
        if not (math.isfinite(self.reference) and self.reference > 0):
            raise ConfigError(f'reference voltage must be > 0, got {self.reference!r}')
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f'integrator.t_end must be > 0, got {self.t_end!r}')

    @property
    def sp(self):
        """ Scaled parameters, converted from the physical ones when needed. """
        return self.scaled if self.scaled is not None else to_scaled(self.physical)

    @property
    def reference(self):
        """ Scaled voltage reference y*. """
        return self.y_star if self.y_star is not None else self.v_star / self.physical.E

    def build_system(self):
        if self.controller is None:
            raise ConfigError(f'{self.name}: no controller configured')
        c = self.controller
        return ClosedLoopSystem(
            self.sp, self.reference, c.kind, gains=c.gains, pbc=c.pbc, observer=c.observer, clamp=self.clamp,
        )

    @classmethod
    def from_dict(cls, data, source='<config>'):
        """
        Parse and validate a configuration mapping.

        Raises:
            ConfigError: with the dotted path of the offending key
        """
        _check_keys(data, source, (
            'name', 'scaled', 'physical', 'y_star', 'v_star', 'controller', 'initial_conditions',
            'integrator', 'grid', 'doa', 'output_dir',
        ))

        scaled = physical = None
        if data.get('scaled') is not None:
            path = f'{source}:scaled'
            _check_keys(data['scaled'], path, ('d1', 'd2'))
            scaled = _build(path, ScaledParams, _number(data['scaled'], 'd1', path), _number(data['scaled'], 'd2', path))
        if data.get('physical') is not None:
            path = f'{source}:physical'
            _check_keys(data['physical'], path, ('L', 'C', 'R', 'G', 'E'))
            physical = _build(path, PhysicalParams, *(_number(data['physical'], k, path) for k in ('L', 'C', 'R', 'G', 'E')))

        ics = data.get('initial_conditions', [])
        if not isinstance(ics, list):
            raise ConfigError(f'{source}:initial_conditions: expected a list')
        initial_conditions = []
        for i, ic in enumerate(ics):
            path = f'{source}:initial_conditions[{i}]'
            if not (isinstance(ic, list) and len(ic) in (2, 3)):
                raise ConfigError(f'{path}: expected [x1, x2] or [x1, x2, xc]')
            initial_conditions.append(tuple(_as_float(v, path) for v in ic))

        integ = data.get('integrator', {})
        path = f'{source}:integrator'
        _check_keys(integ, path, (
            'method', 'rtol', 'atol', 'step', 'sample_dt', 'divergence_bound', 'stop_at_origin', 't_end', 'clamp',
        ))
        defaults = IntegratorOptions()
        options = _build(
            path, IntegratorOptions,
            method=_build(f'{path}.method', Method, integ.get('method', defaults.method.value)),
            **{k: _number(integ, k, path, getattr(defaults, k)) for k in (
                'rtol', 'atol', 'step', 'sample_dt', 'divergence_bound', 'stop_at_origin',
            )},
        )
        clamp = integ.get('clamp', False)
        if not isinstance(clamp, bool):
            raise ConfigError(f'{path}.clamp: expected true or false')

        grid = None
        if data.get('grid') is not None:
            path = f'{source}:grid'
            _check_keys(data['grid'], path, ('x1', 'x2', 'n'))
            grid = GridSpec(_pair(data['grid'], 'x1', path), _pair(data['grid'], 'x2', path), _integer(data['grid'], 'n', path, 10))
            if grid.n < 1:
                raise ConfigError(f'{path}.n: must be >= 1')

        doa = data.get('doa', {})
        path = f'{source}:doa'
        _check_keys(doa, path, ('q_scale', 'samples', 'seed', 'validate'))
        q_scale = _number(doa, 'q_scale', path, 1.0)
        if not q_scale > 0:
            raise ConfigError(f'{path}.q_scale: must be > 0')

        name = data.get('name', 'experiment')
        output_dir = data.get('output_dir', 'out')
        if not isinstance(name, str) or not isinstance(output_dir, str):
            raise ConfigError(f'{source}: "name" and "output_dir" must be strings')

        try:
            return cls(
                name=name,
                scaled=scaled,
                physical=physical,
                y_star=_number(data, 'y_star', source, None),
                v_star=_number(data, 'v_star', source, None),
                controller=_parse_controller(data.get('controller'), f'{source}:controller'),
                initial_conditions=tuple(initial_conditions),
                t_end=_number(integ, 't_end', f'{source}:integrator', 100.0),
                integrator=options,
                clamp=clamp,
                grid=grid,
                doa_q_scale=q_scale,
                doa_samples=_integer(doa, 'samples', path, 4096),
                doa_seed=_integer(doa, 'seed', path, 0),
                doa_validate=_integer(doa, 'validate', path, 64),
                output_dir=output_dir,
            )
        except ConfigError as err:
            if str(err).startswith(source):
                raise
            raise ConfigError(f'{source}: {err}') from None

    def to_dict(self):
        """ Canonical mapping; ``from_dict(cfg.to_dict()) == cfg``. """
        o = self.integrator
        data = {
            'name': self.name,
            'scaled': None if self.scaled is None else {'d1': self.scaled.d1, 'd2': self.scaled.d2},
            'physical': None if self.physical is None else {
                'L': self.physical.L, 'C': self.physical.C, 'R': self.physical.R, 'G': self.physical.G, 'E': self.physical.E,
            },
            'y_star': self.y_star,
            'v_star': self.v_star,
            'controller': _dump_controller(self.controller),
            'initial_conditions': [list(ic) for ic in self.initial_conditions],
            'integrator': {
                'method': o.method.value, 'rtol': o.rtol, 'atol': o.atol, 'step': o.step, 'sample_dt': o.sample_dt,
                'divergence_bound': o.divergence_bound, 'stop_at_origin': o.stop_at_origin,
                't_end': self.t_end, 'clamp': self.clamp,
            },
            'grid': None if self.grid is None else {'x1': list(self.grid.x1), 'x2': list(self.grid.x2), 'n': self.grid.n},
            'doa': {'q_scale': self.doa_q_scale, 'samples': self.doa_samples, 'seed': self.doa_seed, 'validate': self.doa_validate},
            'output_dir': self.output_dir,
        }
        return data

    @classmethod
    def load(cls, path):
        """
        Read a JSON configuration file.

        Raises:
            ConfigError: with file, line and column for syntax errors
        """
        try:
            with open(path) as f:
                text = f.read()
        except OSError as err:
            raise ConfigError(f'{path}: {err.strerror}') from None

        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f'{path}:{err.lineno}:{err.colno}: {err.msg}') from None

        cfg = cls.from_dict(data, source=str(path))
        log.debug('loaded %s from %s', cfg.name, path)
        return cfg

    def dump(self, path):
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write('\n')
