import abc
import getpass
import inspect
import logging
import re
from copy import deepcopy
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import qreset
from .config import RunConfig
from .data import Data, format_for_path
from .parameter import NO_VALUE, Parameter, ParameterRegistry
from .utils.clazz import meta_options


class MetaTask(abc.ABCMeta):
    """Reads a task's `Meta` options: `name`, `parameters`, `default_format`."""

    @property
    def meta(cls) -> Dict[str, Any]:
        return meta_options(cls)

    @property
    def slugname(cls) -> str:
        """`Meta.name`, else the snake-cased class name without the `Task` suffix."""
        if 'name' in cls.meta:
            return cls.meta['name']
        name = re.sub(r'(?<!^)(?=[A-Z])', '_', cls.__name__).lower()
        return name[: -len('_task')] if name.endswith('_task') else name

    @property
    def command(cls) -> str:
        return cls.slugname.replace('_', '-')

    @property
    def parameters(cls) -> List[Parameter]:
        return [p for p in cls.meta.get('parameters', []) if isinstance(p, Parameter)]

    @property
    def parameter_names(cls) -> List[str]:
        return [p.name_in_config for p in cls.parameters]

    @property
    def default_format(cls) -> str:
        return cls.meta.get('default_format', 'json')


class Task(metaclass=MetaTask):
    """
    One computation exposed as a subcommand.

    `run` receives its arguments by name: declared parameters, and the run-wide values
    `spec` (the loaded `SystemSpec`), `seed`, `threads` and `use_tqdm`.
    """

    def __init__(self, config: RunConfig = None):
        self._config = config if config is not None else RunConfig(data={})
        self._data: Optional[Data] = None
        self._value = NO_VALUE
        self._run_info: Optional[Dict] = None

        self.slugname = self.__class__.slugname
        self.logger = logging.getLogger(f'task_{self.slugname}')
        self.logger.setLevel(logging.DEBUG)

        self._config.validate(self.__class__.parameter_names)
        self.params = ParameterRegistry(deepcopy(self.__class__.parameters))
        self.params.set_values(self._config)

    @abc.abstractmethod
    def run(self, *args):
        pass

    def summary(self, value: Any) -> str:
        """Short human readable answer printed to stdout."""
        return ''

    def _run_wide_values(self) -> Dict[str, Callable[[], Any]]:
        return {
            'spec': self._config.system_spec,
            'seed': lambda: self._config.seed,
            'threads': lambda: self._config.threads,
            'use_tqdm': lambda: logging.getLogger().isEnabledFor(logging.INFO),
        }

    def _run_arguments(self) -> List[Any]:
        run_wide = self._run_wide_values()
        args = []
        for name, argument in inspect.signature(self.run).parameters.items():
            if argument.default is not inspect.Parameter.empty:
                raise AttributeError(f'Argument `{name}` of {self}.run has a default, declare a parameter instead')
            if name in self.params and name in run_wide:
                raise KeyError(f'Argument `{name}` of {self}.run is both a parameter and a run-wide value')
            if name in self.params:
                args.append(self.params[name])
            elif name in run_wide:
                args.append(run_wide[name]())
            else:
                raise KeyError(f'Argument `{name}` of {self}.run is neither a parameter nor a run-wide value')
        return args

    @property
    def value(self) -> Any:
        """Result of `run`, computed on first access and persisted when the config names `out`."""
        if self._value is not NO_VALUE:
            return self._value

        data = self._prepare_data()
        handler = data.get_log_handler() if data is not None else None
        if handler is not None:
            self.logger.addHandler(handler)
        self._start_run_info()
        try:
            self.logger.info(f'{self} - run started with params: {self.params.repr}')
            value = self.run(*self._run_arguments())
            self.logger.info(f'{self} - run ended')
        finally:
            if handler is not None:
                self.logger.removeHandler(handler)
                handler.close()

        self._value = value
        if data is not None:
            data.set_value(value)
            data.save()
            self._end_run_info()
            data.save_run_info(self._run_info)
            self.logger.info(f'{self} - result saved to {data.path}')
        return value

    def _prepare_data(self) -> Optional[Data]:
        out = self._config.out
        if out is None:
            return None
        fmt = format_for_path(out, self._config.get('format'), default=self.__class__.default_format)
        self._data = Data.for_format(fmt)()
        self._data.init_persistence(out)
        return self._data

    @property
    def data(self) -> Optional[Data]:
        """Persisted output, None when the config has no `out`."""
        self.value
        return self._data

    def __str__(self):
        return self.slugname

    def __repr__(self):
        return f'<task: {self}>'

    def _start_run_info(self):
        self._run_info = {
            'task': {
                'name': self.slugname,
                'class': self.__class__.__name__,
                'module': self.__class__.__module__,
            },
            'parameters': {p.name: p.value_repr() for p in self.params.values()},
            'config': {
                'name': self._config.name,
                'spec': str(self._config.get('spec')),
                'seed': self._config.seed,
            },
            'user': {
                'name': getpass.getuser(),
                'qreset_version': qreset.__version__,
            },
            'log': [],
            'started': datetime.now(),
        }

    def save_to_run_info(self, record: Any):
        """Append a json-like record to the run info, call from `run`."""
        self._run_info['log'].append(dict(record) if isinstance(record, dict) else record)

    def _end_run_info(self):
        started, ended = self._run_info['started'], datetime.now()
        self._run_info.update(started=str(started), ended=str(ended), time=(ended - started).total_seconds())

    @property
    def run_info(self) -> Optional[Dict]:
        """Run info of the last `run`, read back from disk when persisted."""
        if self._data is not None:
            return self._data.load_run_info()
        return self._run_info

    @property
    def log(self) -> Optional[List[str]]:
        """Lines the task logger wrote during the last persisted run."""
        if self._data is not None:
            return self._data.log
        return None
