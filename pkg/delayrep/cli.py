"""
`run(argv) -> exit code`: the delayrep subcommands without manage.py.

    validate <spec>
    convert <spec> --to {ddf,odepde,pie} [--minimal] [--rank-tol TOL] [-o out.json]
    simulate <spec> [--tf T] [--dt DT] [--order M] [--w DESC] [--u DESC] [--x0 DESC] -o traj.csv
    compare <a.csv> <b.csv> [--tol TOL]
    demo {shower,uav,sof} [--n N] -o spec.json
    lemma-check <spec> --lemma {1,2,3,4,5}

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 usage error.
Failures write one line to stderr: ``delayrep: <code>: <message>``.
"""
import os
import sys

import django
from django.core.management import load_command_class
from django.core.management.base import CommandError

from .exceptions import DelayRepError, UsageError

SUBCOMMANDS = {
    'validate': 'validate',
    'convert': 'convert',
    'simulate': 'simulate',
    'compare': 'compare',
    'demo': 'demo',
    'lemma-check': 'lemma_check',
    'lemma_check': 'lemma_check',
}


def _setup():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'delayrep_project.settings')
    django.setup()


def _fail(stderr, code, message, exit_code):
    stderr.write(f'delayrep: {code}: {" ".join(str(message).split())}\n')
    return exit_code


def run(argv=None, stdout=None, stderr=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    _setup()

    if not argv or argv[0] in ('-h', '--help'):
        stdout.write(__doc__.strip() + '\n')
        return 0 if argv else UsageError.exit_code
    name = SUBCOMMANDS.get(argv[0])
    if name is None:
        return _fail(stderr, UsageError.code, f'unknown subcommand {argv[0]!r}', UsageError.exit_code)

    command = load_command_class('delayrep', name)
    parser = command.create_parser('delayrep', argv[0])
    try:
        options = vars(parser.parse_args(argv[1:]))
    except CommandError as exc:
        return _fail(stderr, UsageError.code, exc, UsageError.exit_code)
    except SystemExit as exc:
        # --help
        return 0 if not exc.code else UsageError.exit_code

    args = options.pop('args', ())
    options['stdout'] = stdout
    options['stderr'] = stderr
    try:
        command.execute(*args, **options)
    except CommandError as exc:
        cause = exc.__cause__
        if isinstance(cause, DelayRepError):
            return _fail(stderr, cause.code, cause, cause.exit_code)
        return _fail(stderr, 'error', exc, exc.returncode)
    except DelayRepError as exc:
        return _fail(stderr, exc.code, exc, exc.exit_code)
    return 0
