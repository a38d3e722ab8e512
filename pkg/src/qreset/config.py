from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Union

import orjson
import yaml

from .errors import ConfigError, InvalidSystemSpec
from .model import SystemSpec

LOGGER = logging.getLogger(__name__)

DEFAULT_SYSTEM_SPEC = SystemSpec(omega_s=1.0, ancilla_levels=(-1.5, 1.5), j=0.1, beta=1.0)


def load_document(filepath: Union[Path, str]) -> Any:
    """
    Parse a JSON or YAML file chosen by extension.

    Syntax errors become `ConfigError` carrying `path:line:column` (1-based).
    """
    filepath = Path(filepath)
    extension = filepath.suffix.lower()
    try:
        text = filepath.read_bytes()
    except OSError as error:
        raise ConfigError(f'Cannot read file: {error.strerror}', filepath)

    if extension == '.json':
        try:
            return orjson.loads(text)
        except orjson.JSONDecodeError as error:
            raise ConfigError(error.msg, filepath, error.lineno, error.colno)
    if extension in ('.yaml', '.yml'):
        try:
            return yaml.load(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as error:
            mark = getattr(error, 'problem_mark', None)
            problem = getattr(error, 'problem', None) or str(error)
            if mark is None:
                raise ConfigError(problem, filepath)
            raise ConfigError(problem, filepath, mark.line + 1, mark.column + 1)
    raise ConfigError(f'Unknown file extension `{extension}`, use .json or .yaml', filepath)


def load_system_spec(filepath: Union[Path, str]) -> SystemSpec:
    """Read a `SystemSpec` document, reporting the file in every error."""
    data = load_document(filepath)
    try:
        return SystemSpec.from_json(data)
    except InvalidSystemSpec as error:
        raise InvalidSystemSpec(f'{filepath}: {error}') from error


class RunConfig(dict):
    """
    Parameters of one task run.

    Values come from an optional JSON/YAML run file and are overridden by explicit
    command-line values. Typical usage:
    ```python
    config = RunConfig('run.yaml', overrides={'grid_n': 65})
    config.validate(task_class.parameter_names)
    ```
    """

    RESERVED_PARAMETER_NAMES = [
        'spec',
        'out',
        'format',
        'seed',
        'threads',
    ]

    def __init__(
        self,
        filepath: Union[Path, str] = None,
        data: Dict = None,
        overrides: Dict = None,
        name: str = None,
    ):
        """

        Args:
            filepath: json or yaml run file
            data: alternative for `filepath`, inject data directly
            overrides: values with priority over file data, e.g. from command line
            name: specify name of config directly, defaults to file stem
        """
        super().__init__()
        self._filepath = None if filepath is None else Path(filepath)
        self._name = name
        self._data = {}

        if self._filepath is not None:
            loaded = load_document(self._filepath)
            if loaded is None:
                loaded = {}
            if not isinstance(loaded, dict):
                raise ConfigError(f'Run file must contain a mapping, got `{type(loaded).__name__}`', self._filepath)
            self._data.update(loaded)
            if self._name is None:
                self._name = self._filepath.stem
        if data is not None:
            self._data.update(data)
        if overrides:
            self._data.update(overrides)

    @property
    def name(self) -> str:
        if self._name is None:
            return 'cli'
        return self._name

    @property
    def filepath(self) -> Union[Path, None]:
        return self._filepath

    def __str__(self):
        return self.name

    def __repr__(self):
        return f'<config: {self}>'

    @property
    def data(self) -> Dict:
        return self._data

    def __getitem__(self, item):
        return self._data[item]

    def __getattr__(self, item):
        if item not in {'data', '_data'} and item in self._data:
            return self._data[item]
        return self.__getattribute__(item)

    def get(self, item, default=None):
        return self._data.get(item, default)

    def __contains__(self, item):
        return item in self._data

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def validate(self, parameter_names: Iterable[str]):
        """Reject keys that are neither task parameters nor reserved."""
        allowed = set(parameter_names) | set(self.RESERVED_PARAMETER_NAMES)
        unknown = sorted(set(self._data) - allowed)
        if unknown:
            raise ConfigError(f'Unknown keys `{unknown}`, allowed are {sorted(allowed)}', self._filepath)

    @property
    def out(self) -> Union[Path, None]:
        out = self._data.get('out')
        return None if out is None else Path(out)

    @property
    def seed(self) -> int:
        return int(self._data.get('seed', 0))

    @property
    def threads(self) -> Union[int, None]:
        threads = self._data.get('threads')
        return None if threads is None else int(threads)

    def system_spec(self) -> SystemSpec:
        spec = self._data.get('spec')
        if spec is None:
            LOGGER.info(f'No system spec in config `{self}`, using default {DEFAULT_SYSTEM_SPEC.to_json()}')
            return DEFAULT_SYSTEM_SPEC
        if isinstance(spec, dict):
            return SystemSpec.from_json(spec)
        return load_system_spec(spec)
