import numpy as np

from ...piops import HybridVector
from ...serializers import read_spec, write_trajectory_csv
from ...simulate import as_history, constant_histories, simulate
from ...specs import DDFSpec, NDSSpec, ODEPDESpec, PIESpec
from ...validation import ensure_valid
from ..base import DelayRepCommand, add_sim_arguments, constant_x0, signal_option, sim_config


class Command(DelayRepCommand):
    help = 'Simulate a spec and write the trajectory as CSV (t, x_*, y_*, z_*, v_*)'

    def add_arguments(self, parser):
        parser.add_argument(
            'spec',
            type=str,
            help='Path to the spec file'
        )
        add_sim_arguments(parser)
        parser.add_argument(
            '--x0',
            type=str,
            default='zero',
            help='Initial state: zero or const:c (channel histories are held constant to match)'
        )
        parser.add_argument(
            '-o', '--output',
            type=str,
            required=True,
            help='Output CSV path'
        )

    def initial_data(self, spec, x0):
        """(x0, channel histories) for the spec kind; NDS runs always start from zero."""
        if isinstance(spec, NDSSpec):
            return None, None
        if isinstance(spec, PIESpec):
            return HybridVector.polynomial(x0, np.zeros((1, spec.dims.total_channel_dim))), None
        if isinstance(spec, ODEPDESpec):
            return x0, constant_histories(spec, x0, lo=-1.0)
        if isinstance(spec, DDFSpec):
            return x0, constant_histories(spec, x0)
        return as_history(x0, spec.dims.n, -spec.max_delay), None

    def handle(self, *args, **options):
        spec = ensure_valid(read_spec(options['spec']))
        cfg = sim_config(spec, options)
        x0, histories = self.initial_data(spec, constant_x0(options['x0'], spec.dims.n))

        self.banner(f'SIMULATING {spec.kind} SPEC')
        self.stdout.write(f'Horizon: {cfg.t_final:g} with dt={cfg.dt:g} ({cfg.steps} steps)')
        if spec.kind == 'PIE':
            self.stdout.write(f'Collocation order: M={cfg.order}')

        traj = simulate(
            spec, x0=x0, histories=histories,
            w=signal_option(options, 'w'), u=signal_option(options, 'u'), cfg=cfg,
        )
        write_trajectory_csv(traj, options['output'])

        self.stdout.write(self.style.SUCCESS(f'[OK] Wrote {traj.t.size} samples to {options["output"]}'))
        if traj.x.size:
            self.stdout.write(f'[INFO] max |x| = {np.max(np.abs(traj.x)):.6g}')
        self.done()
