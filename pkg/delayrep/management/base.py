"""
Shared plumbing for the delayrep management commands.
"""
import numpy as np
from django.core.management.base import BaseCommand, CommandError

from ..exceptions import DelayRepError, UsageError
from ..inputs import parse_signal
from ..simulate import SimConfig


class DelayRepCommand(BaseCommand):
    """BaseCommand that turns DelayRepError into CommandError with the matching exit code."""

    requires_system_checks = []

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except DelayRepError as exc:
            raise CommandError(f'{exc.code}: {exc}', returncode=exc.exit_code) from exc

    def banner(self, title):
        self.stdout.write(self.style.SUCCESS('=' * 80))
        self.stdout.write(self.style.SUCCESS(title))
        self.stdout.write(self.style.SUCCESS('=' * 80))

    def section(self, title):
        self.stdout.write('\n' + self.style.SUCCESS(title))
        self.stdout.write('=' * 80)

    def done(self, message='Processing complete!'):
        self.stdout.write('\n' + '=' * 80)
        self.stdout.write(self.style.SUCCESS(message))


def add_sim_arguments(parser):
    parser.add_argument('--tf', type=float, default=None, help='Final time (default: 3 x largest delay)')
    parser.add_argument('--dt', type=float, default=None, help='Time step (default: DELAYREP DEFAULT_DT)')
    parser.add_argument('--order', type=int, default=None,
                        help='PIE collocation order M (default: DELAYREP DEFAULT_ORDER)')
    parser.add_argument('--w', type=str, default=None, help='Disturbance descriptor, e.g. sin:1:0.5:0')
    parser.add_argument('--u', type=str, default=None, help='Control input descriptor, e.g. zero')
    parser.add_argument('--derivative-mode', choices=['analytic', 'finite-difference'],
                        default='analytic', help='How PIE input derivatives are obtained')


def sim_config(spec, options, integrator=None):
    """SimConfig from the parsed options; the horizon defaults to three times the largest delay."""
    t_final = options['tf']
    if t_final is None:
        t_final = 3.0 * max(spec.delays, default=1.0)
    if integrator is None:
        integrator = 'implicit-trapezoid' if spec.kind == 'PIE' else 'rk4-characteristics'
    return SimConfig(
        dt=options['dt'], t_final=t_final, order=options['order'],
        integrator=integrator, derivative_mode=options['derivative_mode'],
    )


def signal_option(options, name):
    text = options.get(name)
    return None if text is None else parse_signal(text)


def constant_x0(text, n):
    """--x0 accepts `zero` or `const:c`; the initial state is c in every component."""
    desc = parse_signal(text or 'zero')
    if desc.kind == 'zero':
        return np.zeros(n)
    coeffs = desc.params.get('coeffs', ())
    if desc.kind != 'polynomial' or len(coeffs) != 1:
        raise UsageError(f'--x0 takes zero or const:c, got {text!r}')
    return np.full(n, float(coeffs[0]))
