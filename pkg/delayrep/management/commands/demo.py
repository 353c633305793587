import numpy as np

from ...convert import channel_dimensions
from ...networks import (
    ShowerParams, build_shower_dde, build_shower_ddf, build_sof_network, build_uav_dde,
    build_uav_ddf, random_uav_params,
)
from ...serializers import write_spec
from ...specs import DDFSpec
from ..base import DelayRepCommand


class Command(DelayRepCommand):
    help = 'Write one of the built-in network models (shower, uav, sof) as a JSON spec'

    def add_arguments(self, parser):
        parser.add_argument(
            'model',
            choices=['shower', 'uav', 'sof'],
            help='Which network to build'
        )
        parser.add_argument(
            '--n',
            type=int,
            default=2,
            help='Number of users or agents (default: 2)'
        )
        parser.add_argument(
            '--form',
            choices=['dde', 'ddf'],
            default='dde',
            help='Representation for shower and uav (sof is always a DDF)'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=0,
            help='Seed for the random UAV parameters (default: 0)'
        )
        parser.add_argument(
            '-o', '--output',
            type=str,
            required=True,
            help='Output JSON path'
        )

    def build(self, model, N, form, seed):
        if model == 'shower':
            params = ShowerParams(N)
            return build_shower_ddf(params) if form == 'ddf' else build_shower_dde(params)
        params = random_uav_params(N, seed=seed)
        if model == 'uav':
            return build_uav_ddf(params) if form == 'ddf' else build_uav_dde(params)
        # u = F y with a small gain so the closed loop stays well posed
        _, _, p, _, r = params.shape
        F = 0.3 * np.random.default_rng(seed + 1).standard_normal((p, r * N))
        return build_sof_network(params, F)

    def handle(self, *args, **options):
        spec = self.build(options['model'], options['n'], options['form'], options['seed'])
        write_spec(spec, options['output'])

        self.banner(f'DEMO {options["model"].upper()} NETWORK (N={options["n"]})')
        dims = spec.dims
        self.stdout.write(f'Representation: {spec.kind}')
        self.stdout.write(f'n={dims.n} m={dims.m} p={dims.p} q={dims.q} r={dims.r} K={len(spec.delays)}')
        if isinstance(spec, DDFSpec):
            channels, total = channel_dimensions(spec)
            self.stdout.write(f'Channel dimensions: {channels} (sum {total})')
        self.stdout.write(self.style.SUCCESS(f'[OK] Wrote {options["output"]}'))
        self.done()
