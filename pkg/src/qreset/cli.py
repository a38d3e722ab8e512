"""
Command-line entry point `qreset`.

Every concrete `Task` becomes a subcommand. Exit codes: 0 on success, 2 on invalid input
(including malformed spec or run files), 1 on runtime failures.
"""
import argparse
import inspect
import logging
import sys
from typing import Dict, List, Optional, Type

import qreset
from . import tasks
from .config import RunConfig
from .errors import QResetError, ValidationError
from .task import Task
from .utils.clazz import subclasses

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_VALIDATION_ERROR = 2

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'


def task_classes() -> Dict[str, Type[Task]]:
    """Concrete tasks by subcommand name."""
    classes = subclasses(Task, module=tasks, concrete=True)
    return {c.command: c for c in sorted(classes, key=lambda c: c.command)}


def _add_common_arguments(parser: argparse.ArgumentParser):
    s = argparse.SUPPRESS
    parser.add_argument('--config', default=None, help='JSON or YAML run file with parameter values')
    parser.add_argument('--spec', default=s, help='JSON or YAML system spec, the reference qubit-ancilla by default')
    parser.add_argument('--out', default=s, help='output file, the result is only printed when missing')
    parser.add_argument('--format', default=s, choices=['csv', 'json'], help='output format, else by extension')
    parser.add_argument('--seed', default=s, type=int, help='random seed (default: 0)')
    parser.add_argument('--threads', default=s, type=int, help='worker threads, else QRESET_THREADS or CPU count')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for progress, -vv for debug')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='qreset', description='Qubit reset bounds with an ancilla.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {qreset.__version__}')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    for command, task_class in task_classes().items():
        doc = inspect.getdoc(task_class) or ''
        subparser = subparsers.add_parser(command, help=doc.split('\n')[0], description=doc)
        _add_common_arguments(subparser)
        for parameter in task_class.parameters:
            parameter.add_argument(subparser)
    return parser


def setup_logging(verbose: int):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    root = logging.getLogger()
    root.setLevel(level)
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.handlers = [handler]


def run(argv: Optional[List[str]] = None) -> int:
    """Parse `argv`, run the selected task, print its summary and return the exit code."""
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as error:
        return int(error.code or 0)

    command = args.pop('command')
    config_path = args.pop('config')
    setup_logging(args.pop('verbose'))
    task_class = task_classes()[command]

    try:
        config = RunConfig(config_path, overrides=args, name=command if config_path is None else None)
        task = task_class(config)
        value = task.value
    except ValidationError as error:
        LOGGER.error(f'{command}: {error}')
        return EXIT_VALIDATION_ERROR
    except QResetError as error:
        LOGGER.error(f'{command}: {error.__class__.__name__}: {error}')
        return EXIT_RUNTIME_ERROR

    summary = task.summary(value)
    if summary:
        print(summary)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
