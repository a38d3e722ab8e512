import abc
import logging
from pathlib import Path
from typing import Any, Dict, Type, Union

import pandas as pd
import yaml

from .errors import ConfigError
from .utils import json
from .utils.clazz import subclasses

CSV_FLOAT_FORMAT = '%.12g'


def as_json(value: Any) -> Any:
    """Plain JSON form of a task result: objects with `to_json`, frames as records, mappings as they are."""
    if hasattr(value, 'to_json') and not isinstance(value, pd.DataFrame):
        return value.to_json()
    if isinstance(value, pd.DataFrame):
        return value.astype(object).where(value.notna(), None).to_dict(orient='records')
    return value


def as_frame(value: Any) -> pd.DataFrame:
    """Tabular form of a task result: frames as they are, objects with `to_frame`, mappings as one flat row."""
    if isinstance(value, pd.DataFrame):
        return value
    if hasattr(value, 'to_frame'):
        return value.to_frame()
    if isinstance(value, dict):
        return pd.json_normalize(value)
    raise TypeError(f'Cannot convert `{type(value).__name__}` to a table')


class Data:
    """Output handler of one task result. `FORMAT` names the `--format` value it serves."""

    FORMAT = None

    @classmethod
    def for_format(cls, fmt: str) -> Type['Data']:
        for c in subclasses(Data):
            if c.FORMAT == fmt:
                return c
        raise ConfigError(f'Unknown output format `{fmt}`')

    def __init__(self):
        self._persisting = False
        self._path = None
        self._value = None

    def init_persistence(self, path: Path):
        self._persisting = True
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def is_persisting(self):
        return self._persisting

    @property
    def path(self) -> Path:
        if not self.is_persisting:
            raise AttributeError(f'Data {self} is not in persisting mode, call `init_persistence` first')
        return self._path

    def exists(self) -> bool:
        return self.path.exists()

    def delete(self):
        self.path.unlink()

    @abc.abstractmethod
    def save(self):
        pass

    @abc.abstractmethod
    def load(self) -> Any:
        pass

    def set_value(self, value: Any = None):
        self._value = value

    @property
    def value(self):
        if self._value is None:
            raise ValueError(f'Value of {self} is not set')
        return self._value

    def __str__(self):
        if self.is_persisting:
            return str(self._path)
        return f'{self.__class__.__name__}'

    @property
    def run_info_path(self) -> Path:
        path = self.path
        return path.parent / f'{path.stem}.run_info.yaml'

    def save_run_info(self, info: Dict):
        with self.run_info_path.open('w') as f:
            yaml.dump(info, f, sort_keys=False)

    def load_run_info(self) -> Union[Dict, None]:
        if not self.run_info_path.exists():
            return None
        with self.run_info_path.open() as f:
            return yaml.load(f, yaml.SafeLoader)

    @property
    def log_path(self) -> Path:
        path = self.path
        return path.parent / f'{path.stem}.log'

    def get_log_handler(self):
        handler = logging.FileHandler(self.log_path, mode='w')
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        return handler

    @property
    def log(self):
        if not self.log_path.exists():
            return None
        return [line.strip() for line in self.log_path.open().readlines()]


class JSONData(Data):
    """Sorted keys and two-space indent so equal results give identical files."""

    FORMAT = 'json'

    def save(self):
        with self.path.open('w') as f:
            json.dump(as_json(self.value), f, indent=2, sort_keys=True)
            f.write('\n')

    def load(self) -> Any:
        with self.path.open() as f:
            self._value = json.load(f)
        return self._value


class CSVData(Data):
    FORMAT = 'csv'

    def save(self):
        as_frame(self.value).to_csv(self.path, index=False, float_format=CSV_FLOAT_FORMAT)

    def load(self) -> pd.DataFrame:
        self._value = pd.read_csv(self.path)
        return self._value


def format_for_path(path: Path, fmt: str = None, default: str = 'json') -> str:
    """
    Explicit format, else the one the extension names, else `default`.

    >>> format_for_path(Path('table.csv')), format_for_path(Path('out.txt'), default='csv')
    ('csv', 'csv')
    """
    if fmt is not None:
        return fmt
    suffix = path.suffix.lower().lstrip('.')
    if suffix in {c.FORMAT for c in subclasses(Data)}:
        return suffix
    return default
