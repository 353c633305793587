from ...convert import channel_dimensions, convert_spec, naive_channel_dimensions
from ...serializers import dumps_spec, read_spec, write_spec
from ...specs import DDESpec, DDFSpec
from ...validation import ensure_valid
from ..base import DelayRepCommand


class Command(DelayRepCommand):
    help = 'Convert a spec to the DDF, ODE-PDE or PIE representation and write it as JSON'

    def add_arguments(self, parser):
        parser.add_argument(
            'spec',
            type=str,
            help='Path to the source spec file'
        )
        parser.add_argument(
            '--to',
            type=str,
            required=True,
            choices=['ddf', 'odepde', 'pie'],
            help='Target representation'
        )
        parser.add_argument(
            '--minimal',
            action='store_true',
            help='For DDE sources, keep only the numerical row space of each delayed block'
        )
        parser.add_argument(
            '--rank-tol',
            type=float,
            default=None,
            help='Relative singular value cutoff for --minimal (default: DELAYREP RANK_TOL)'
        )
        parser.add_argument(
            '-o', '--output',
            type=str,
            default=None,
            help='Output JSON path (default: print to stdout)'
        )

    def handle(self, *args, **options):
        spec = ensure_valid(read_spec(options['spec']))
        target = convert_spec(spec, options['to'], minimal=options['minimal'],
                              rank_tol=options['rank_tol'])

        if options['output'] is None:
            self.stdout.write(dumps_spec(target), ending='')
            return

        write_spec(target, options['output'])
        self.banner(f'CONVERTED {spec.kind} -> {target.kind}')
        self.stdout.write(f'Source: {options["spec"]}')
        self.stdout.write(f'Output: {options["output"]}')
        self.stdout.write(f'Delays: {len(target.delays)}')
        if isinstance(spec, DDESpec):
            naive = naive_channel_dimensions(spec)
            self.stdout.write(f'Naive channel dimensions: {naive} (sum {sum(naive)})')
        if isinstance(target, DDFSpec):
            dims, total = channel_dimensions(target)
            self.stdout.write(self.style.SUCCESS(f'[OK] Channel dimensions: {dims} (sum {total})'))
            for line in target.provenance:
                self.stdout.write(f'[INFO] {line}')
        else:
            self.stdout.write(self.style.SUCCESS(
                f'[OK] PIE state: R^{target.dims.n} x L2^{target.dims.total_channel_dim}'
            ))
        self.done()
