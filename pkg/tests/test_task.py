import pandas as pd
import pytest
import yaml

from qreset.config import DEFAULT_SYSTEM_SPEC, RunConfig
from qreset.data import CSVData, JSONData
from qreset.errors import ConfigError
from qreset.parameter import Parameter
from qreset.task import Task


class PowerTask(Task):
    class Meta:
        parameters = [
            Parameter('x', dtype=float),
            Parameter('n', dtype=int, default=2),
        ]

    calls = 0

    def run(self, x, n, seed) -> dict:
        PowerTask.calls += 1
        self.logger.info(f'raising {x} to {n}')
        self.save_to_run_info({'x': x})
        return {'value': x**n, 'seed': seed}


class ThisIsSomethingTask(Task):
    class Meta:
        default_format = 'csv'

    def run(self, spec) -> pd.DataFrame:
        return pd.DataFrame({'j': [spec.j]})


class X(Task):
    class Meta:
        name = 'custom'

    def run(self) -> bool:
        return True


class KwargsTask(Task):
    def run(self, x=1):
        return x


class UnknownArgumentTask(Task):
    def run(self, missing):
        return missing


def test_slugname():
    assert ThisIsSomethingTask.slugname == 'this_is_something'
    assert ThisIsSomethingTask().slugname == 'this_is_something'
    assert ThisIsSomethingTask.command == 'this-is-something'
    assert PowerTask.slugname == 'power'
    assert X.slugname == 'custom'
    assert repr(X()) == '<task: custom>'


def test_meta():
    assert PowerTask.parameter_names == ['x', 'n']
    assert PowerTask.default_format == 'json'
    assert ThisIsSomethingTask.default_format == 'csv'
    assert X.parameters == []


def test_parameters():
    task = PowerTask(RunConfig(data={'x': 3}))
    assert task.params.x == 3.0
    assert task.params.n == 2

    with pytest.raises(ConfigError):
        PowerTask(RunConfig(data={}))
    with pytest.raises(ConfigError):
        PowerTask(RunConfig(data={'x': 3, 'typo': 1}))


def test_value_in_memory():
    PowerTask.calls = 0
    task = PowerTask(RunConfig(data={'x': 3, 'n': 3, 'seed': 7}))
    assert task.value == {'value': 27.0, 'seed': 7}
    assert task.value == {'value': 27.0, 'seed': 7}
    assert PowerTask.calls == 1
    assert task.data is None
    assert task.log is None
    assert task.run_info['log'] == [{'x': 3.0}]
    assert task.run_info['parameters'] == {'x': '3.0', 'n': '3'}


def test_run_wide_arguments():
    assert ThisIsSomethingTask().value.j.tolist() == [DEFAULT_SYSTEM_SPEC.j]
    spec = {'omega_s': 1.0, 'ancilla_levels': [-2, 2], 'j': 0.25}
    assert ThisIsSomethingTask(RunConfig(data={'spec': spec})).value.j.tolist() == [0.25]


def test_run_arguments_errors():
    with pytest.raises(AttributeError):
        _ = KwargsTask().value
    with pytest.raises(KeyError):
        _ = UnknownArgumentTask().value


def test_persistence(tmp_path):
    out = tmp_path / 'results' / 'power.json'
    task = PowerTask(RunConfig(data={'x': 2, 'out': str(out)}, name='run'))
    assert task.value == {'value': 4.0, 'seed': 0}
    assert isinstance(task.data, JSONData)
    assert task.data.load() == {'seed': 0, 'value': 4.0}

    run_info = yaml.load((tmp_path / 'results' / 'power.run_info.yaml').read_text(), yaml.SafeLoader)
    assert run_info == task.run_info
    assert run_info['task']['name'] == 'power'
    assert run_info['config'] == {'name': 'run', 'spec': 'None', 'seed': 0}
    assert run_info['parameters'] == {'x': '2.0', 'n': '2'}
    assert run_info['log'] == [{'x': 2.0}]
    assert run_info['time'] >= 0
    assert 'qreset_version' in run_info['user']

    log = task.log
    assert log[0].startswith('INFO task_power: power - run started with params:')
    assert 'INFO task_power: raising 2.0 to 2' in log
    assert log[-1] == 'INFO task_power: power - run ended'


def test_output_format(tmp_path):
    task = ThisIsSomethingTask(RunConfig(data={'out': str(tmp_path / 'something.out')}))
    task.value
    assert isinstance(task.data, CSVData)
    assert task.data.path.read_text().splitlines() == ['j', '0.1']

    task = PowerTask(RunConfig(data={'x': 1, 'out': str(tmp_path / 'power.txt'), 'format': 'csv'}))
    task.value
    assert (tmp_path / 'power.txt').read_text().splitlines() == ['value,seed', '1,0']
