from ...exceptions import ToleranceError
from ...serializers import read_trajectory_csv
from ...simulate import compare
from ..base import DelayRepCommand


class Command(DelayRepCommand):
    help = 'Compare two trajectory CSV files signal by signal'

    def add_arguments(self, parser):
        parser.add_argument('a', type=str, help='Reference trajectory CSV')
        parser.add_argument('b', type=str, help='Trajectory CSV to compare against the reference')
        parser.add_argument(
            '--tol',
            type=float,
            default=None,
            help='Fail (exit 2) when any max absolute deviation exceeds this'
        )
        parser.add_argument(
            '--signals',
            type=str,
            default='x,y,z',
            help='Comma-separated signals to compare (default: x,y,z)'
        )

    def handle(self, *args, **options):
        a = read_trajectory_csv(options['a'])
        b = read_trajectory_csv(options['b'])
        signals = tuple(s.strip() for s in options['signals'].split(',') if s.strip())
        report = compare(a, b, signals=signals)

        self.banner('COMPARING TRAJECTORIES')
        self.stdout.write(f'Reference: {options["a"]} ({a.t.size} samples)')
        self.stdout.write(f'Other:     {options["b"]} ({b.t.size} samples)')
        self.section('MAX DEVIATIONS')
        for line in report.summary().splitlines():
            self.stdout.write(line)

        tol = options['tol']
        if tol is not None and not report.within(tol):
            self.stdout.write(self.style.ERROR(f'[FAIL] max deviation {report.max_abs:.3e} exceeds {tol:.3e}'))
            raise ToleranceError(f'max deviation {report.max_abs:.3e} exceeds tolerance {tol:.3e}')
        if tol is not None:
            self.stdout.write(self.style.SUCCESS(f'[OK] within tolerance {tol:.3e}'))
        self.done()
