import json

import pytest
import yaml

from qreset.config import DEFAULT_SYSTEM_SPEC, RunConfig, load_document, load_system_spec
from qreset.errors import ConfigError, InvalidSystemSpec, ValidationError
from qreset.model import SystemSpec


def test_name(tmp_path):
    json.dump({}, (tmp_path / 'json_test.json').open('w'))
    yaml.dump({}, (tmp_path / 'yaml.test.yaml').open('w'))

    assert RunConfig().name == 'cli'
    assert RunConfig(name='test').name == 'test'
    assert RunConfig(tmp_path / 'json_test.json').name == 'json_test'
    assert RunConfig(tmp_path / 'yaml.test.yaml').name == 'yaml.test'
    assert RunConfig(tmp_path / 'yaml.test.yaml', name='name_test').name == 'name_test'
    assert repr(RunConfig(name='x')) == '<config: x>'


def test_data(tmp_path):
    (tmp_path / 'run.json').write_text('{"grid_n": 65, "refine": false, "coherence": [0.1, 0.2]}')
    config = RunConfig(tmp_path / 'run.json')
    assert config.data == {'grid_n': 65, 'refine': False, 'coherence': [0.1, 0.2]}
    assert config['grid_n'] == 65
    assert config.grid_n == 65
    assert config.get('missing', 3) == 3
    assert 'refine' in config
    assert len(config) == 3
    assert sorted(config) == ['coherence', 'grid_n', 'refine']

    (tmp_path / 'run.yaml').write_text('grid_n: 65\nrefine: no\n')
    assert RunConfig(tmp_path / 'run.yaml').data == {'grid_n': 65, 'refine': False}

    (tmp_path / 'empty.yaml').write_text('')
    assert RunConfig(tmp_path / 'empty.yaml').data == {}


def test_overrides(tmp_path):
    (tmp_path / 'run.yaml').write_text('grid_n: 65\nrefine: true\n')
    config = RunConfig(tmp_path / 'run.yaml', data={'seed': 3}, overrides={'grid_n': 129})
    assert config.data == {'grid_n': 129, 'refine': True, 'seed': 3}
    assert config.seed == 3


def test_reserved_values(tmp_path):
    config = RunConfig(data={'out': str(tmp_path / 'a.csv'), 'threads': '2'})
    assert config.out == tmp_path / 'a.csv'
    assert config.threads == 2
    assert config.seed == 0
    assert RunConfig().out is None
    assert RunConfig().threads is None


def test_validate():
    with pytest.raises(ConfigError) as info:
        RunConfig(data={'grid_n': 65, 'grdi_n': 3}).validate(['grid_n'])
    assert 'grdi_n' in str(info.value)


def test_validate_accepts_known_keys():
    RunConfig(data={'grid_n': 65, 'seed': 1, 'out': 'x.json'}).validate(['grid_n'])


def test_malformed_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{\n  "grid_n": 65,\n  "refine": tru\n}\n')
    with pytest.raises(ConfigError) as info:
        load_document(path)
    error = info.value
    assert isinstance(error, ValidationError)
    assert error.path == path
    assert error.line == 3
    assert str(error).startswith(f'{path}:3:')


def test_malformed_yaml(tmp_path):
    path = tmp_path / 'broken.yaml'
    path.write_text('grid_n: 65\nangles: [0.1, 0.2\nrefine: true\n')
    with pytest.raises(ConfigError) as info:
        RunConfig(path)
    assert info.value.path == path
    assert info.value.line is not None and info.value.line >= 2
    assert info.value.column is not None


def test_document_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_document(tmp_path / 'missing.json')

    (tmp_path / 'run.toml').write_text('grid_n = 65')
    with pytest.raises(ConfigError):
        load_document(tmp_path / 'run.toml')

    (tmp_path / 'list.yaml').write_text('- 1\n- 2\n')
    with pytest.raises(ConfigError):
        RunConfig(tmp_path / 'list.yaml')


def test_system_spec(tmp_path):
    assert RunConfig().system_spec() == DEFAULT_SYSTEM_SPEC

    inline = {'omega_s': 1.0, 'ancilla_levels': [-3, 0, 2], 'j': 0.05}
    assert RunConfig(data={'spec': inline}).system_spec().d_b == 3

    path = tmp_path / 'spec.json'
    path.write_text(json.dumps({'omega_s': 1.0, 'ancilla_levels': [-1.5, 1.5], 'j': 0.1, 'beta': 2.0}))
    spec = RunConfig(data={'spec': str(path)}).system_spec()
    assert spec == SystemSpec(1.0, (-1.5, 1.5), 0.1, beta=2.0)


def test_invalid_system_spec(tmp_path):
    path = tmp_path / 'spec.yaml'
    path.write_text('omega_s: 1.0\nancilla_levels: [-1.5, 1.5]\nj: 0.1\nomega_b: 3\n')
    with pytest.raises(InvalidSystemSpec) as info:
        load_system_spec(path)
    assert str(path) in str(info.value)
    assert 'omega_b' in str(info.value)
