from ...exceptions import SpecValidationError
from ...serializers import read_spec
from ...validation import validate
from ..base import DelayRepCommand


class Command(DelayRepCommand):
    help = 'Check a JSON spec file against every structural invariant of its representation'

    def add_arguments(self, parser):
        parser.add_argument(
            'spec',
            type=str,
            help='Path to a DDE, NDS, DDF, ODEPDE or PIE spec file'
        )
        parser.add_argument(
            '--max-degree',
            type=int,
            default=None,
            help='Kernel degree cap (default: DELAYREP MAX_KERNEL_DEGREE)'
        )

    def handle(self, *args, **options):
        spec = read_spec(options['spec'])
        report = validate(spec, max_degree=options['max_degree'])

        self.banner(f'VALIDATING {spec.kind} SPEC')
        dims = spec.dims
        self.stdout.write(f'File: {options["spec"]}')
        self.stdout.write(
            f'n={dims.n} m={dims.m} p={dims.p} q={dims.q} r={dims.r} K={len(spec.delays)}'
        )
        self.stdout.write(f'Delays: {", ".join(f"{t:g}" for t in spec.delays)}')

        if report:
            self.section('VIOLATIONS')
            for idx, violation in enumerate(report, 1):
                self.stdout.write(self.style.ERROR(f'[{idx}] {violation}'))
            raise SpecValidationError(
                f'invalid {spec.kind} spec: {", ".join(report.names())}', report
            )

        self.done(f'[OK] {spec.kind} spec is valid')
