import inspect
from types import ModuleType
from typing import Any, Dict, List, Optional


def meta_options(cls: type) -> Dict[str, Any]:
    """
    Public attributes of the inner `Meta` class of `cls`, inherited ones included.

    >>> class A:
    ...     class Meta:
    ...         name = 'a'
    >>> meta_options(A), meta_options(int)
    ({'name': 'a'}, {})
    """
    meta = getattr(cls, 'Meta', None)
    if meta is None:
        return {}
    return {attr: getattr(meta, attr) for attr in dir(meta) if not attr.startswith('_')}


def subclasses(cls: type, module: Optional[ModuleType] = None, concrete: bool = False) -> List[type]:
    """
    Direct and indirect subclasses of `cls` ordered by name.

    Args:
        cls: root class, not included
        module: keep only classes defined in this module
        concrete: drop abstract classes
    """
    found = set()
    work = [cls]
    while work:
        for child in work.pop().__subclasses__():
            if child not in found:
                found.add(child)
                work.append(child)
    if module is not None:
        found = {c for c in found if c.__module__ == module.__name__}
    if concrete:
        found = {c for c in found if not inspect.isabstract(c)}
    return sorted(found, key=lambda c: c.__name__)
