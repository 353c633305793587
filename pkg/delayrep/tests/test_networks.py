import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from delayrep.convert import minimal_ddf_from_dde, naive_channel_dimensions
from delayrep.exceptions import DimensionError, UsageError
from delayrep.inputs import SignalDescriptor
from delayrep.lemmas import check_dde_ddf, check_ddf_pie, feedback_gain, run_lemma
from delayrep.networks import (
    ShowerParams, build_shower_dde, build_shower_ddf, build_sof_network, build_uav_dde,
    build_uav_ddf, random_uav_params, shower_residual, sof_plant, sof_recursion_residual,
)
from delayrep.simulate import SimConfig, compare, simulate_dde, simulate_ddf
from delayrep.validation import validate

SMOOTH_W = SignalDescriptor.polynomial([0.0] * 6 + [0.01])
# Vanishes to third order at t = 0.
CUBIC_W = SignalDescriptor.polynomial([0.0, 0.0, 0.0, 0.01])


class ShowerNetworkTests(SimpleTestCase):

    def test_single_user_matrices(self):
        dde = build_shower_dde(ShowerParams(1))
        assert_allclose(dde.matrices['A0'], [[0.0, 1.0], [0.0, 0.0]])
        assert_allclose(dde.matrices['B1'], [[-1.0], [1.0]])
        assert_allclose(dde.matrices['B2'], [[0.0], [1.0]])
        assert_allclose(dde.delayed[0]['A'], [[0.0, 0.0], [0.0, -1.0]])
        self.assertEqual(dde.delays, (1.0,))

    def test_dde_and_ddf_agree(self):
        params = ShowerParams(2)
        cfg = SimConfig(dt=0.01, t_final=4.0)
        w = SignalDescriptor.constant(1.0)
        a = simulate_dde(build_shower_dde(params), 0.0, w=w, cfg=cfg)
        b = simulate_ddf(build_shower_ddf(params), None, None, w=w, cfg=cfg)
        report = compare(a, b)
        self.assertTrue(report.within(1e-9), report.summary())

    def test_trajectory_satisfies_the_model(self):
        params = ShowerParams(2)
        w = SignalDescriptor.constant(1.0)
        traj = simulate_dde(build_shower_dde(params), 0.0, w=w, cfg=SimConfig(dt=0.01, t_final=3.0))
        residual = shower_residual(params, traj, w=w)
        self.assertEqual(residual.shape, (traj.t.size - 1,))
        self.assertLess(residual.max(), 1e-6)

    def test_minimal_channels(self):
        dde = build_shower_dde(ShowerParams(2))
        self.assertEqual(minimal_ddf_from_dde(dde).dims.channel_dims, (1, 1))
        self.assertEqual(naive_channel_dimensions(dde), [8, 8])
        self.assertEqual(build_shower_ddf(ShowerParams(2)).dims.nv, 2)

    def test_minimal_channels_have_one_dimension_per_user(self):
        for N in range(1, 11):
            ddf = minimal_ddf_from_dde(build_shower_dde(ShowerParams(N)))
            self.assertEqual(sum(ddf.dims.channel_dims), N, f'N={N}')

    def test_dde_to_ddf_over_three_longest_delays(self):
        for N in (1, 2, 3):
            dde = build_shower_dde(ShowerParams(N))
            cfg = SimConfig(dt=0.01, t_final=3.0 * dde.max_delay)
            result = check_dde_ddf(dde, cfg=cfg)
            self.assertLessEqual(result.max_deviation, 1e-8, f'N={N}: {result.deviations}')

    def test_pie_converges_with_collocation_order(self):
        ddf = build_shower_ddf(ShowerParams(2))
        results = {}
        for M in (8, 12, 16, 24):
            cfg = SimConfig(dt=1e-3, t_final=2.0, order=M)
            results[M] = check_ddf_pie(ddf, cfg=cfg, w=CUBIC_W)
        errors = [results[M].max_deviation for M in (8, 12, 16, 24)]
        for coarse, fine in zip(errors, errors[1:]):
            self.assertLess(fine, coarse, errors)
        self.assertLessEqual(results[16].max_deviation, 1e-3, results[16].deviations)
        reconstruction = [v for k, v in results[16].deviations.items() if k.startswith('reconstructed')]
        self.assertEqual(len(reconstruction), 3)
        self.assertLessEqual(max(reconstruction), 1e-3)

    def test_invalid_parameters(self):
        with self.assertRaises(UsageError):
            ShowerParams(0)
        with self.assertRaises(DimensionError):
            ShowerParams(2, tau=(1.0,))
        with self.assertRaises(DimensionError):
            ShowerParams(2, gamma=np.ones((3, 3)))


class UAVNetworkTests(SimpleTestCase):

    def setUp(self):
        self.params = random_uav_params(2, seed=4)

    def test_channel_dimensions(self):
        n, m, p, q, r = self.params.shape
        ddf = build_uav_ddf(self.params)
        dde = build_uav_dde(self.params)
        self.assertEqual(ddf.dims.nv, (2 * n + r) * self.params.N)
        self.assertEqual(ddf.dims.K, dde.dims.K)
        self.assertEqual(dde.dims.n, n * self.params.N)
        self.assertTrue(validate(ddf).ok)
        self.assertTrue(validate(dde).ok)

    def test_dde_and_ddf_agree(self):
        cfg = SimConfig(dt=0.01, t_final=2.0)
        w = SignalDescriptor.sinusoid(1.0, 0.5)
        a = simulate_dde(build_uav_dde(self.params), 0.0, w=w, cfg=cfg)
        b = simulate_ddf(build_uav_ddf(self.params), None, None, w=w, cfg=cfg)
        report = compare(a, b)
        self.assertTrue(report.within(1e-9), report.summary())

    def test_large_state_logs_a_warning(self):
        params = random_uav_params(1, n=2, m=2, p=2)
        with self.assertLogs('delayrep.networks', level='WARNING') as logs:
            build_uav_ddf(params)
        self.assertIn('not below', logs.output[0])

    def test_coinciding_delays_are_merged(self):
        params = random_uav_params(2, seed=4)
        merged = type(params)(
            a=params.a, coupling=params.coupling, b1=params.b1, b2=params.b2, c2=params.c2,
            d21=params.d21, C1=params.C1, D12=params.D12,
            tau_process=(0.5, 0.5), tau_input=(0.5, 0.8), tau_output=(0.8, 0.9),
        )
        self.assertEqual(build_uav_dde(merged).delays, (0.5, 0.8, 0.9))
        self.assertEqual(build_uav_ddf(merged).delays, (0.5, 0.8, 0.9))


class SOFNetworkTests(SimpleTestCase):

    def setUp(self):
        self.params = random_uav_params(2, seed=1)
        self.F = np.array([[0.2, 0.0], [0.0, -0.1]])
        self.ddf = build_sof_network(self.params, self.F)

    def test_gain_is_recovered_from_the_channels(self):
        assert_allclose(feedback_gain(self.ddf), self.F, atol=1e-10)

    def test_recursion_residuals(self):
        traj = simulate_ddf(self.ddf, None, None, w=SMOOTH_W, cfg=SimConfig(dt=0.01, t_final=2.0))
        y_res, z_res = sof_recursion_residual(traj, sof_plant(self.params), self.F)
        self.assertLess(np.abs(y_res).max(), 1e-9)
        self.assertLess(np.abs(z_res).max(), 1e-9)

    def test_lemma_check(self):
        result = run_lemma(self.ddf, 5, cfg=SimConfig(dt=1e-3, t_final=1.0), w=SMOOTH_W)
        self.assertTrue(result.passed, result.deviations)

    def test_wrong_gain_shape(self):
        with self.assertRaises(DimensionError):
            build_sof_network(self.params, np.ones((3, 2)))
        with self.assertRaises(UsageError):
            feedback_gain(build_uav_ddf(self.params))
