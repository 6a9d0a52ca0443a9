import json

import pytest

import boostlab as bl

FIG2 = {
    'name': 'fig2',
    'scaled': {'d1': 0, 'd2': 1},
    'y_star': 2,
    'controller': {'type': 'pi', 'K_P': 2, 'K_I': 1, 'u0': 0.5},
    'initial_conditions': [[4, 2, 0], [3.9, 2, 0]],
    'integrator': {'t_end': 600, 'stop_at_origin': 1e-3},
}


def test_from_dict():
    cfg = bl.ExperimentConfig.from_dict(FIG2)
    assert cfg.sp == bl.ScaledParams(0.0, 1.0)
    assert cfg.reference == 2.0
    assert cfg.controller.gains == bl.PIGains(2.0, 1.0, 0.5)
    assert cfg.initial_conditions == ((4.0, 2.0, 0.0), (3.9, 2.0, 0.0))
    assert cfg.t_end == 600.0
    assert cfg.integrator.stop_at_origin == 1e-3
    assert cfg.integrator.method is bl.Method.ADAPTIVE
    assert cfg.build_system().kind is bl.ControllerKind.PI


@pytest.mark.parametrize('name', list(bl.PRESETS))
def test_presets_round_trip(name):
    for cfg in bl.preset(name):
        assert bl.ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_load_and_dump(tmp_path):
    cfg = bl.preset('observer')[0]
    path = tmp_path / 'observer.json'
    cfg.dump(path)
    data = json.loads(path.read_text())
    assert data['controller']['observer']['gamma'] == 1000.0
    assert data['controller']['bias'] == 'deviation'
    assert bl.ExperimentConfig.load(path) == cfg


def test_physical_parameters_with_volt_reference():
    cfg = bl.ExperimentConfig.from_dict({
        'physical': {'L': 1, 'C': 4, 'R': 0.125, 'G': 0.375, 'E': 10},
        'v_star': 12,
        'controller': {'type': 'pi', 'K_P': 1, 'K_I': 1},
    })
    assert cfg.reference == pytest.approx(1.2)
    assert cfg.sp.d1 == pytest.approx(0.25)
    assert cfg.controller.gains.u0 == 0.0


def test_defaults_for_pbc_controllers():
    cfg = bl.ExperimentConfig.from_dict({
        'scaled': {'d1': 0, 'd2': 1},
        'y_star': 1,
        'controller': {'type': 'pid-pbc', 'observer': {}},
    })
    c = cfg.controller
    assert c.pbc.x1_star is None
    assert c.pbc.bias is bl.Bias.DEVIATION
    assert c.observer == bl.ObserverConfig()
    assert cfg.build_system().pbc.x1_star == pytest.approx(1.0)


def test_syntax_error_reports_position(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{\n  "name": ,\n}\n')
    with pytest.raises(bl.ConfigError, match=r'broken\.json:2:\d+:'):
        bl.ExperimentConfig.load(path)


def test_missing_file(tmp_path):
    with pytest.raises(bl.ConfigError):
        bl.ExperimentConfig.load(tmp_path / 'missing.json')


def _with(section, **values):
    data = json.loads(json.dumps(FIG2))
    if section is None:
        data.update(values)
    else:
        data.setdefault(section, {}).update(values)
    return data


@pytest.mark.parametrize('data, where', [
    (_with(None, colour='red'), r'<config>: unknown key\(s\) colour'),
    (_with('scaled', d3=1), r'<config>:scaled: unknown key'),
    (_with('scaled', d1=-1), r'<config>:scaled:'),
    (_with('controller', K_P='two'), r'<config>:controller\.K_P: expected a number'),
    (_with('controller', type='lqr'), r'<config>:controller\.type:'),
    (_with('integrator', method='euler'), r'<config>:integrator\.method:'),
    (_with('integrator', rtol=0), r'<config>:integrator:'),
    (_with('integrator', clamp='yes'), r'<config>:integrator\.clamp:'),
    (_with('grid', x1=[1, 0], x2=[0, 1]), r'<config>:grid\.x1: low must be below high'),
    (_with('doa', samples=1.5), r'<config>:doa\.samples: expected an integer'),
    (_with(None, initial_conditions=[[1]]), r'<config>:initial_conditions\[0\]:'),
])
def test_errors_name_the_key(data, where):
    with pytest.raises(bl.ConfigError, match=where):
        bl.ExperimentConfig.from_dict(data)


@pytest.mark.parametrize('update', [
    {'y_star': None},
    {'v_star': 3},
    {'physical': {'L': 1, 'C': 1, 'R': 0, 'G': 1, 'E': 1}},
    {'y_star': -1},
])
def test_reference_and_plant_are_exclusive(update):
    data = dict(FIG2, **update)
    with pytest.raises(bl.ConfigError):
        bl.ExperimentConfig.from_dict(data)


def test_unknown_preset():
    with pytest.raises(bl.ConfigError, match='unknown preset'):
        bl.preset('fig9')


def test_build_system_needs_controller():
    cfg = bl.preset('fig1')[0]
    with pytest.raises(bl.ConfigError):
        cfg.build_system()
