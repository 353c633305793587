from ...exceptions import ToleranceError
from ...lemmas import run_lemma
from ...serializers import read_spec
from ...validation import ensure_valid
from ..base import DelayRepCommand, add_sim_arguments, signal_option, sim_config


class Command(DelayRepCommand):
    help = 'Simulate a spec along two equivalent routes and report the largest deviations'

    def add_arguments(self, parser):
        parser.add_argument(
            'spec',
            type=str,
            help='Path to the spec file'
        )
        parser.add_argument(
            '--lemma',
            type=int,
            required=True,
            choices=[1, 2, 3, 4, 5],
            help='1 DDE/DDF, 2 NDS/DDF, 3 DDF/ODE-PDE, 4 DDF/PIE, 5 feedback recursion'
        )
        add_sim_arguments(parser)

    def handle(self, *args, **options):
        spec = ensure_valid(read_spec(options['spec']))
        lemma = options['lemma']
        cfg = sim_config(spec, options, integrator='rk4-characteristics')

        self.banner(f'LEMMA {lemma} CHECK ON {spec.kind} SPEC')
        result = run_lemma(
            spec, lemma, cfg=cfg,
            w=signal_option(options, 'w'), u=signal_option(options, 'u'),
        )
        self.stdout.write(result.description)
        self.stdout.write(f'Horizon: {cfg.t_final:g} with dt={cfg.dt:g}')

        self.section('MAX DEVIATIONS')
        for label, value in result.deviations.items():
            self.stdout.write(f'{label}: {value:.3e}')

        if not result.passed:
            self.stdout.write(self.style.ERROR(
                f'[FAIL] max deviation {result.max_deviation:.3e} exceeds {result.tolerance:.1e}'
            ))
            raise ToleranceError(
                f'lemma {lemma}: max deviation {result.max_deviation:.3e} exceeds {result.tolerance:.1e}'
            )
        self.stdout.write(self.style.SUCCESS(
            f'[OK] max deviation {result.max_deviation:.3e} within {result.tolerance:.1e}'
        ))
        self.done()
