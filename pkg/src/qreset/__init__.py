from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version('qreset')
except PackageNotFoundError:
    __version__ = '0.0.0'

from .errors import QResetError, ValidationError
from .model import OperatorSelector, PulseSchedule, SystemSpec
