import argparse
from typing import Any, Iterable, List, Optional, Sequence

from .errors import ConfigError


class NO_DEFAULT:
    pass


class NO_VALUE:
    pass


class Parameter:
    """
    Typed task parameter, filled from a `RunConfig` and exposed as a command-line option.

    >>> p = Parameter('grid_n', dtype=int, default=101)
    >>> p.set_value({'grid_n': 33})
    33
    >>> p.repr
    'grid_n=33'
    """

    NO_DEFAULT = NO_DEFAULT
    NO_VALUE = NO_VALUE

    def __init__(
        self,
        name: str,
        dtype: Optional[type] = None,
        default: Any = NO_DEFAULT,
        name_in_config: str = None,
        item_dtype: Optional[type] = None,
        choices: Optional[Sequence] = None,
        help: str = None,
        ignore_persistence: bool = False,
    ):
        """
        Args:
            name: name of the argument of task's `run` method
            dtype: expected datatype, int values are accepted for float parameters
            default: value used if not provided in config, default to NO_DEFAULT meaning that param is required
            name_in_config: key in config and name of the command-line option, defaults to `name`
            item_dtype: datatype of items of list parameters
            choices: allowed values
            help: command-line help
            ignore_persistence: do not record this parameter in run info
        """
        from .config import RunConfig

        assert name not in RunConfig.RESERVED_PARAMETER_NAMES, f'Parameter name `{name}` is reserved'
        self._name = name
        self.dtype = dtype
        self.default = default
        self.name_in_config = name if name_in_config is None else name_in_config
        self.item_dtype = item_dtype
        self.choices = None if choices is None else list(choices)
        self.help = help
        self.ignore_persistence = ignore_persistence
        self._value = self.NO_VALUE

    def __str__(self):
        return self.name

    def __repr__(self):
        return f'<parameter: {self}>'

    @property
    def name(self) -> str:
        return self._name

    @property
    def required(self) -> bool:
        return self.default is self.NO_DEFAULT

    @property
    def value(self) -> Any:
        if self._value is self.NO_VALUE:
            raise ValueError(f'Value not set for parameter `{self}`')
        return self._value

    def value_repr(self) -> str:
        return repr(self.value)

    @property
    def repr(self) -> Optional[str]:
        if self.ignore_persistence:
            return None
        return f'{self.name}={self.value_repr()}'

    def _coerce(self, value: Any, dtype: Optional[type], what: str) -> Any:
        if dtype is None or value is None:
            return value
        if dtype is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if dtype is list and isinstance(value, tuple):
            value = list(value)
        if not isinstance(value, dtype) or (dtype is not bool and isinstance(value, bool)):
            raise ConfigError(f'Value `{value}` of {what} is {type(value).__name__}, expected `{dtype.__name__}`')
        return value

    def set_value(self, config) -> Any:
        if self.name_in_config in config:
            value = config[self.name_in_config]
        else:
            if self.required:
                raise ConfigError(f'Value for parameter `{self.name_in_config}` not found in config `{config}`')
            value = self.default

        value = self._coerce(value, self.dtype, f'parameter `{self}`')
        if isinstance(value, list) and self.item_dtype is not None:
            value = [self._coerce(v, self.item_dtype, f'item of parameter `{self}`') for v in value]
        if self.choices is not None and value is not None and value not in self.choices:
            raise ConfigError(f'Value `{value}` of parameter `{self}` not in {self.choices}')

        self._value = value
        return value

    @property
    def option(self) -> str:
        return '--' + self.name_in_config.replace('_', '-')

    def add_argument(self, parser: argparse.ArgumentParser):
        """Register as `--name-in-config`; options left out do not override config values."""
        kwargs = {'dest': self.name_in_config, 'default': argparse.SUPPRESS, 'help': self.help}
        if self.default is not self.NO_DEFAULT and self.default is not None:
            kwargs['help'] = f'{self.help or ""} (default: {self.default})'.strip()
        if self.dtype is bool:
            kwargs['action'] = argparse.BooleanOptionalAction
        elif self.dtype is list:
            kwargs['nargs'] = '+'
            kwargs['type'] = self.item_dtype
        else:
            kwargs['type'] = self.dtype
            kwargs['choices'] = self.choices
        parser.add_argument(self.option, **kwargs)


class ParameterRegistry:
    def __init__(self, parameters: Iterable[Parameter] = None):
        super().__init__()
        self._parameters = {}
        for parameter in parameters if parameters is not None else []:
            if parameter.name in self._parameters:
                raise ValueError(f'Multiple parameters with same name `{parameter.name}`')
            self._parameters[parameter.name] = parameter

    def set_values(self, config):
        for parameter in self._parameters.values():
            parameter.set_value(config)

    def get(self, item: str):
        return self._parameters[item].value

    def __getitem__(self, item):
        return self.get(item)

    def __getattr__(self, item: str):
        if item != '_parameters' and item in self._parameters:
            return self.get(item)
        return self.__getattribute__(item)

    def __str__(self):
        return str(self._parameters)

    def __contains__(self, item):
        return item in self._parameters

    def __len__(self):
        return len(self._parameters)

    def __bool__(self):
        return True

    def items(self):
        return self._parameters.items()

    def keys(self):
        return self._parameters.keys()

    def values(self):
        return self._parameters.values()

    @property
    def config_names(self) -> List[str]:
        return [p.name_in_config for p in self._parameters.values()]

    @property
    def repr(self) -> Optional[str]:
        reprs = []
        for name, parameter in sorted(self._parameters.items()):
            repr = parameter.repr
            if repr is not None:
                reprs.append(repr)
        if reprs:
            return '###'.join(reprs)
        return None
