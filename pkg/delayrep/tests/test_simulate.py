import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from delayrep.convert import dde_to_ddf, ddf_to_odepde, ddf_to_pie
from delayrep.exceptions import (
    DimensionError, DivergenceError, InputSmoothnessError, SewingError, UsageError,
)
from delayrep.inputs import HistoryFunction, SignalDescriptor
from delayrep.kernels import PolyKernel
from delayrep.lemmas import check_dde_ddf, check_ddf_odepde, check_ddf_pie, check_nds_ddf, random_dde
from delayrep.piops import Collocation, HybridVector
from delayrep.simulate import (
    SignalBuffer, SimConfig, Trajectory, compare, constant_histories, pie_initial_state,
    pie_reconstruct, simulate, simulate_dde, simulate_ddf, simulate_nds, simulate_odepde,
    simulate_pie,
)
from delayrep.specs import DDESpec, Dims, NDSSpec

SMOOTH_W = SignalDescriptor.polynomial([0.0] * 6 + [0.01])


def unit_delay_dde():
    """x'(t) = -x(t - 1), z = x."""
    return DDESpec.build(
        Dims(n=1, m=1, p=1, q=1, r=1), [1.0],
        matrices={'C10': [[1.0]]}, delayed={'A': [[[-1.0]]]},
    )


def two_delay_dde():
    """Scalar plant with delays 0.5 and 1.0, a delayed disturbance and a distributed term."""
    return DDESpec.build(
        Dims(n=1, m=1, p=1, q=1, r=1), [0.5, 1.0],
        matrices={'A0': [[-1.0]], 'B1': [[1.0]], 'C10': [[1.0]], 'C20': [[0.5]], 'D21': [[0.2]]},
        delayed={'A': [[[0.3]], [[-0.2]]], 'B1': [[[0.4]], [[0.0]]], 'C2': [[[1.0]], [[0.0]]]},
        kernels={'Ad': [PolyKernel.from_scalar_coeffs([0.5, 1.0], domain=(-0.5, 0.0)), None]},
    )


class SimConfigTests(SimpleTestCase):

    def test_defaults_from_settings(self):
        cfg = SimConfig(t_final=0.5)
        self.assertEqual(cfg.dt, 1e-3)
        self.assertEqual(cfg.order, 16)
        self.assertEqual(cfg.steps, 500)
        self.assertAlmostEqual(cfg.times()[-1], 0.5, places=12)

    def test_invalid_configurations(self):
        with self.assertRaises(UsageError):
            SimConfig(dt=0.0)
        with self.assertRaises(UsageError):
            SimConfig(dt=0.1, t_final=0.05)
        with self.assertRaises(UsageError):
            SimConfig(integrator='euler')
        with self.assertRaises(UsageError):
            SimConfig(dt=0.2).check_delays((0.5,))
        SimConfig(dt=0.125).check_delays((0.5,))


class SignalBufferTests(SimpleTestCase):

    def test_cubic_signals_are_interpolated_exactly(self):
        buf = SignalBuffer(1, 0.1, 20, HistoryFunction.constant([0.0], -1.0))
        for k in range(21):
            buf.push([(0.1 * k) ** 3])
        t = np.array([0.05, 0.73, 1.999])
        assert_allclose(buf(t)[:, 0], t ** 3, atol=1e-13)
        assert_allclose(buf([-0.5, 0.0]), [[0.0], [0.0]])

    def test_kernel_integral_crosses_the_history(self):
        # int_{-1}^0 s * signal(0.5 + s) ds with signal(t) = t for t > 0 and 1 before
        history = HistoryFunction.constant([1.0], -2.0)
        buf = SignalBuffer(1, 0.25, 8, history)
        for k in range(9):
            buf.push([0.25 * k])
        kernel = PolyKernel.from_scalar_coeffs([0.0, 1.0], domain=(-1.0, 0.0))
        expected = -0.375 - 1.0 / 48.0
        assert_allclose(buf.integral(kernel, 0.5, 1.0), [expected], atol=1e-13)


class TrajectoryTests(SimpleTestCase):

    def test_arrays_are_read_only(self):
        t = np.linspace(0.0, 1.0, 5)
        traj = Trajectory(t=t, x=np.zeros((5, 1)), y=np.zeros((5, 0)), z=np.ones((5, 2)))
        self.assertAlmostEqual(traj.dt, 0.25)
        self.assertEqual(traj.signal('z').shape, (5, 2))
        with self.assertRaises(ValueError):
            traj.x[0, 0] = 1.0
        with self.assertRaises(UsageError):
            traj.signal('r1')

    def test_rejects_bad_grids_and_values(self):
        with self.assertRaises(DimensionError):
            Trajectory(t=np.array([0.0, 0.1, 0.3]), x=np.zeros((3, 1)), y=np.zeros((3, 0)), z=np.zeros((3, 0)))
        with self.assertRaises(DimensionError):
            Trajectory(t=np.linspace(0, 1, 3), x=np.array([[0.0], [np.nan], [1.0]]),
                       y=np.zeros((3, 0)), z=np.zeros((3, 0)))


class DDESimulationTests(SimpleTestCase):

    def test_method_of_steps_solution(self):
        traj = simulate_dde(unit_delay_dde(), 1.0, cfg=SimConfig(dt=0.01, t_final=2.0))
        t = traj.t
        expected = np.where(t <= 1.0, 1.0 - t, 1.0 - t + 0.5 * (t - 1.0) ** 2)
        assert_allclose(traj.x[:, 0], expected, atol=1e-10)
        assert_allclose(traj.z[:, 0], expected, atol=1e-10)
        self.assertEqual(traj.kind, 'DDE')

    def test_history_function(self):
        spec = unit_delay_dde()
        history = HistoryFunction.from_callable(lambda s: [1.0 + s], -1.0)
        traj = simulate_dde(spec, history, cfg=SimConfig(dt=0.01, t_final=1.0))
        # x' = -(t - 1 + 1) = -t on [0, 1]
        assert_allclose(traj.x[:, 0], 1.0 - 0.5 * traj.t ** 2, atol=1e-9)

    def test_delayed_step_is_rejected(self):
        spec = two_delay_dde()
        with self.assertRaises(InputSmoothnessError):
            simulate_dde(spec, 0.0, w=SignalDescriptor.step(0.0, 1.0), cfg=SimConfig(dt=0.01, t_final=0.5))

    def test_step_too_large(self):
        with self.assertRaises(UsageError):
            simulate_dde(two_delay_dde(), 0.0, cfg=SimConfig(dt=0.2, t_final=1.0))

    def test_divergence(self):
        spec = DDESpec.build(Dims(n=1, m=0, p=0, q=0, r=0), [1.0], matrices={'A0': [[1000.0]]})
        with self.assertRaises(DivergenceError) as ctx:
            simulate_dde(spec, 1.0, cfg=SimConfig(dt=0.01, t_final=3.0))
        self.assertGreater(ctx.exception.time, 0.0)


class DDFSimulationTests(SimpleTestCase):

    def test_dde_and_ddf_agree(self):
        result = check_dde_ddf(two_delay_dde(), cfg=SimConfig(dt=0.01, t_final=3.0))
        self.assertTrue(result.passed, result.deviations)
        self.assertLess(result.max_deviation, 1e-10)

    def test_random_dde_with_kernels(self):
        dde = random_dde(n=2, K=2, seed=8, kernel_degree=1)
        result = check_dde_ddf(dde, cfg=SimConfig(dt=0.01, t_final=1.5))
        self.assertLess(result.max_deviation, 1e-8)

    def test_ten_random_systems(self):
        for seed in range(10):
            dde = random_dde(seed=seed)
            result = check_dde_ddf(dde, cfg=SimConfig(dt=0.01, t_final=4.5))
            self.assertTrue(result.passed, f'seed {seed}: {result.deviations}')

    def test_constant_histories_satisfy_sewing(self):
        ddf = dde_to_ddf(two_delay_dde())
        histories = constant_histories(ddf, [0.7])
        traj = simulate_ddf(ddf, [0.7], histories, cfg=SimConfig(dt=0.01, t_final=0.5))
        assert_allclose(traj.channels['r1'][0], [0.7, 0.0, 0.0])
        self.assertEqual(traj.v.shape, (51, ddf.dims.nv))

    def test_inconsistent_histories(self):
        ddf = dde_to_ddf(two_delay_dde())
        r0 = [HistoryFunction.constant([1.0, 0.0, 0.0], -tau) for tau in ddf.delays]
        with self.assertRaises(SewingError) as ctx:
            simulate_ddf(ddf, [0.0], r0, cfg=SimConfig(dt=0.01, t_final=0.5))
        self.assertEqual(ctx.exception.exit_code, 1)

    def test_neutral_system(self):
        nds = NDSSpec.build(
            Dims(n=1, m=1, p=1, q=1, r=1), [1.0],
            matrices={'A0': [[-1.0]], 'B1': [[1.0]], 'C10': [[1.0]]},
            delayed={'A': [[[0.1]]], 'E': [[[0.3]]]},
        )
        result = check_nds_ddf(nds, cfg=SimConfig(dt=0.01, t_final=3.0))
        self.assertTrue(result.passed, result.deviations)
        self.assertEqual(simulate(nds, cfg=SimConfig(dt=0.01, t_final=0.1)).kind, 'NDS')
        with self.assertRaises(UsageError):
            simulate_nds(unit_delay_dde())


class ConvergenceTests(SimpleTestCase):

    def test_rk4_is_fourth_order(self):
        # x' = -x with an inert delay: x(t) = exp(-t).
        spec = DDESpec.build(Dims(n=1, m=0, p=0, q=0, r=0), [1.0], matrices={'A0': [[-1.0]]})
        errors = []
        for dt in (0.125, 0.0625, 0.03125):
            traj = simulate_dde(spec, 1.0, cfg=SimConfig(dt=dt, t_final=2.0))
            errors.append(np.max(np.abs(traj.x[:, 0] - np.exp(-traj.t))))
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreaterEqual(coarse / fine, 8.0, errors)

    def test_neutral_output_term_converges(self):
        nds = NDSSpec.build(
            Dims(n=1, m=1, p=0, q=1, r=0), [0.5],
            matrices={'A0': [[-1.0]], 'B1': [[1.0]], 'C10': [[1.0]]},
            delayed={'A': [[[0.2]]], 'E': [[[0.2]]], 'E1': [[[0.5]]]},
        )
        runs = [simulate_nds(nds, SMOOTH_W, cfg=SimConfig(dt=dt, t_final=2.0))
                for dt in (0.05, 0.025, 0.0125, 0.00625)]
        gaps = []
        for coarse, fine in zip(runs, runs[1:]):
            gaps.append(max(np.max(np.abs(coarse.x - fine.x[::2])), np.max(np.abs(coarse.z - fine.z[::2]))))
        self.assertGreater(gaps[0], 0.0)
        for coarse, fine in zip(gaps, gaps[1:]):
            self.assertGreaterEqual(coarse / fine, 8.0, gaps)


class LinearityTests(SimpleTestCase):

    def setUp(self):
        self.spec = random_dde(seed=3, kernel_degree=1)
        self.cfg = SimConfig(dt=0.01, t_final=1.5)

    def test_superposition(self):
        run = lambda x0, w, u: simulate(self.spec, x0, None, w, u, self.cfg)  # noqa: E731
        poly = SignalDescriptor.polynomial
        a = run([1.0, -0.5], poly([0.0, 0.0, 0.3]), poly([0.0, 0.5]))
        b = run([0.25, 0.75], poly([0.0, 0.1, 0.0, -0.2]), poly([0.0, 0.0, 0.0, 0.1]))
        c = run([1.25, -3.25], poly([0.0, -0.3, 0.6, 0.6]), poly([0.0, 1.0, 0.0, -0.3]))
        for name in ('x', 'y', 'z'):
            expected = 2.0 * getattr(a, name) - 3.0 * getattr(b, name)
            assert_allclose(getattr(c, name), expected, rtol=0, atol=1e-10, err_msg=name)

    def test_later_input_does_not_change_the_past(self):
        spec = DDESpec.build(
            Dims(n=1, m=1, p=1, q=1, r=1), [0.5],
            matrices={'A0': [[-1.0]], 'B2': [[1.0]], 'C10': [[1.0]], 'D22': [[0.5]]},
            delayed={'A': [[[0.3]]], 'C2': [[[1.0]]]},
        )
        cfg = SimConfig(dt=0.01, t_final=2.0)
        w = SignalDescriptor.sinusoid(1.0, 0.5)
        base = simulate(spec, 0.2, None, w, None, cfg)
        kicked = simulate(spec, 0.2, None, w, SignalDescriptor.step(1.0, 1.0), cfg)
        before = base.t < 1.0 - 1e-9
        after = base.t > 1.0 + 1e-9
        for name in ('x', 'y', 'z'):
            np.testing.assert_array_equal(getattr(kicked, name)[before], getattr(base, name)[before])
            self.assertGreater(np.max(np.abs(getattr(kicked, name)[after] - getattr(base, name)[after])), 0.0)


class ODEPDESimulationTests(SimpleTestCase):

    def test_characteristics_reproduce_the_channels(self):
        result = check_ddf_odepde(two_delay_dde(), cfg=SimConfig(dt=0.01, t_final=2.5))
        self.assertTrue(result.passed, result.deviations)
        self.assertIn('phi2(-1)', result.deviations)

    def test_state_at_the_right_end_is_the_channel_output(self):
        pde = ddf_to_odepde(dde_to_ddf(two_delay_dde()))
        cfg = SimConfig(dt=0.01, t_final=1.0, order=8)
        traj = simulate_odepde(pde, None, None, w=SMOOTH_W, cfg=cfg)
        self.assertEqual(traj.channels['phi1'].shape, (101, 8, 3))
        assert_allclose(traj.nodes, Collocation(8).nodes)
        assert_allclose(traj.channels['phi1'][:, -1, :], traj.channels['r1'], atol=1e-12)

    def test_rejects_other_kinds(self):
        with self.assertRaises(UsageError):
            simulate_odepde(dde_to_ddf(two_delay_dde()))


class PIESimulationTests(SimpleTestCase):

    def setUp(self):
        self.ddf = dde_to_ddf(two_delay_dde())
        self.pie = ddf_to_pie(self.ddf)
        self.cfg = SimConfig(dt=0.005, t_final=2.0, order=16, integrator='implicit-trapezoid')

    def test_matches_the_ddf(self):
        result = check_ddf_pie(self.ddf, cfg=self.cfg, w=SMOOTH_W)
        self.assertLess(result.max_deviation, 1e-2, result.deviations)
        self.assertIn('reconstructed phi2', result.deviations)

    def test_finite_difference_derivatives(self):
        analytic = simulate_pie(self.pie, None, SMOOTH_W, cfg=self.cfg)
        fd = simulate_pie(self.pie, None, SMOOTH_W, cfg=SimConfig(
            dt=0.005, t_final=2.0, order=16, derivative_mode='finite-difference'))
        self.assertLess(compare(analytic, fd, signals=('x', 'y', 'z')).max_abs, 1e-6)

    def test_initial_state_and_reconstruction(self):
        M = 12
        phi0 = [HistoryFunction.constant([0.4, 0.0, 0.0], -1.0, channel=i) for i in range(2)]
        X0 = pie_initial_state(self.pie, [0.4], phi0, M)
        self.assertEqual(X0.shape, (1 + 6 * M,))
        assert_allclose(X0[1:], 0.0, atol=1e-12)
        traj = simulate_pie(self.pie, X0, cfg=SimConfig(dt=0.01, t_final=0.05, order=M))
        x, phis = pie_reconstruct(self.pie, traj)
        assert_allclose(x[0], [0.4], atol=1e-12)
        self.assertEqual(phis[1].shape, (6, M, 3))

    def test_hybrid_vector_initial_state(self):
        X0 = HybridVector.polynomial([0.0], np.zeros((1, 6)))
        traj = simulate(self.pie, X0, cfg=SimConfig(dt=0.01, t_final=0.1, order=8))
        self.assertEqual(traj.state.shape, (11, 1 + 6 * 8))
        with self.assertRaises(DimensionError):
            simulate_pie(self.pie, np.zeros(3), cfg=SimConfig(dt=0.01, t_final=0.1, order=8))


class CompareTests(SimpleTestCase):

    def trajectory(self, t, scale=1.0):
        x = scale * np.sin(t)[:, None]
        return Trajectory(t=t, x=x, y=np.zeros((t.size, 0)), z=2.0 * x)

    def test_same_grid(self):
        t = np.linspace(0.0, 1.0, 11)
        report = compare(self.trajectory(t), self.trajectory(t, 1.001))
        self.assertAlmostEqual(report['x'].max_abs, 0.001 * np.sin(1.0), places=12)
        self.assertAlmostEqual(report['z'].max_abs, 0.002 * np.sin(1.0), places=12)
        self.assertEqual(report['y'].max_abs, 0.0)
        self.assertTrue(report.within(0.01))
        self.assertFalse(report.within(1e-4))
        self.assertIn('x: max |diff|', report.summary())

    def test_different_grids_are_resampled(self):
        coarse = self.trajectory(np.linspace(0.0, 1.0, 11))
        fine = self.trajectory(np.linspace(0.0, 1.0, 201))
        self.assertLess(compare(coarse, fine).max_abs, 1e-9)

    def test_disjoint_and_mismatched(self):
        a = self.trajectory(np.linspace(0.0, 1.0, 11))
        b = self.trajectory(np.linspace(2.0, 3.0, 11))
        with self.assertRaises(UsageError):
            compare(a, b)
        c = Trajectory(t=a.t, x=np.zeros((11, 2)), y=a.y, z=a.z)
        with self.assertRaises(DimensionError):
            compare(a, c)
