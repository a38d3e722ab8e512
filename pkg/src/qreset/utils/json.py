from typing import IO, Any, Union

import numpy as np
import orjson


def _default(obj: Any) -> Any:
    if isinstance(obj, (complex, np.complexfloating)):
        return {'re': float(obj.real), 'im': float(obj.imag)}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [_default(v) for v in obj.tolist()] if obj.ndim == 1 else [_default(row) for row in obj]
        return obj.tolist()
    raise TypeError(f'Type `{type(obj).__name__}` is not JSON serializable')


def dumps(data: Any, sort_keys: bool = False, indent: int = None, as_bytes: bool = False) -> Union[str, bytes]:
    option = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS
    if sort_keys:
        option |= orjson.OPT_SORT_KEYS
    if indent:
        assert indent == 2, f'The only supported indent is 2, given {indent=}'
        option |= orjson.OPT_INDENT_2
    dumped = orjson.dumps(data, default=_default, option=option)
    if not as_bytes:
        dumped = dumped.decode()
    return dumped


def dump(data: Any, fp: IO[str], sort_keys: bool = False, indent: int = None):
    fp.write(dumps(data, sort_keys=sort_keys, indent=indent))


def load(fp) -> Any:
    return orjson.loads(fp.read())


def complex_to_json(value: complex) -> dict:
    """
    >>> complex_to_json(1 - 2j)
    {'re': 1.0, 'im': -2.0}
    """
    return {'re': float(np.real(value)), 'im': float(np.imag(value))}


def complex_from_json(data: Union[dict, float, int]) -> complex:
    """
    >>> complex_from_json({'re': 1.0, 'im': -2.0})
    (1-2j)
    >>> complex_from_json(0.5)
    (0.5+0j)
    """
    if isinstance(data, dict):
        return complex(data['re'], data['im'])
    return complex(data)
