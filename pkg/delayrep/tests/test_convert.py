import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from delayrep.convert import (
    REACHABILITY, channel_dimensions, convert_spec, dde_to_ddf, dde_to_pie, ddf_history_to_odepde,
    ddf_to_odepde, ddf_to_pie, minimal_ddf_from_dde, naive_channel_dimensions, nds_to_ddf,
    odepde_history_to_ddf, odepde_to_ddf,
)
from delayrep.exceptions import UsageError, WellPosednessError
from delayrep.inputs import HistoryFunction
from delayrep.kernels import PolyKernel
from delayrep.lemmas import random_dde
from delayrep.networks import ShowerParams, build_shower_dde
from delayrep.piops import discretize
from delayrep.specs import DDESpec, DDFSpec, Dims, NDSSpec, ODEPDESpec, PIE_OPERATORS, PIESpec


def rank_one_dde():
    """Two states, only x_1 is delayed: every delayed block has rank one."""
    return DDESpec.build(
        Dims(n=2, m=1, p=1, q=1, r=1),
        [0.4, 0.9],
        matrices={'A0': [[-1.0, 0.2], [0.0, -2.0]], 'B1': [[1.0], [0.0]], 'C10': [[1.0, 1.0]]},
        delayed={'A': [[[0.3, 0.0], [0.1, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]},
        kernels={'Ad': [PolyKernel(np.array([[[1.0, 0.0], [2.0, 0.0]], [[0.5, 0.0], [0.0, 0.0]]]),
                                   domain=(-0.4, 0.0)), None]},
    )


class DDEToDDFTests(SimpleTestCase):

    def test_channel_layout(self):
        dde = random_dde(n=2, m=1, p=1, K=2, seed=1)
        ddf = dde_to_ddf(dde)
        self.assertIsInstance(ddf, DDFSpec)
        self.assertEqual(ddf.delays, dde.delays)
        self.assertEqual(ddf.dims.channel_dims, (4, 4))
        self.assertEqual(ddf.dims.nv, dde.dims.n + dde.dims.q + dde.dims.r)
        assert_allclose(ddf.channel_block(0), np.eye(4))
        assert_allclose(ddf.channels[1]['Cv'], dde.delayed_block(1))
        self.assertEqual(ddf.provenance, ('dde_to_ddf',))
        self.assertTrue(np.all(ddf.channels[0]['Drv'] == 0))

    def test_instant_blocks_carry_over(self):
        dde = random_dde(seed=2)
        ddf = dde_to_ddf(dde)
        assert_allclose(ddf.matrices['A0'], dde.matrices['A0'])
        assert_allclose(ddf.matrices['C1'], dde.matrices['C10'])
        assert_allclose(ddf.matrices['D22'], dde.matrices['D22'])
        n, q = dde.dims.n, dde.dims.q
        assert_allclose(np.vstack([ddf.matrices['Bv'], ddf.matrices['D1v'], ddf.matrices['D2v']]),
                        np.eye(n + q + dde.dims.r))

    def test_nds_channels_carry_the_derivative(self):
        nds = NDSSpec.build(
            Dims(n=1, m=1, p=1, q=1, r=1), [1.0],
            matrices={'A0': [[-1.0]], 'B1': [[2.0]]},
            delayed={'E': [[[0.3]]], 'A': [[[0.1]]]},
        )
        ddf = nds_to_ddf(nds)
        self.assertEqual(ddf.dims.channel_dims, (4,))
        c = ddf.channels[0]
        assert_allclose(c['Cr'][:, 0], [1.0, 0.0, 0.0, -1.0])
        assert_allclose(c['Br1'][:, 0], [0.0, 1.0, 0.0, 2.0])
        assert_allclose(c['Drv'][3], [1.0, 0.0, 0.0])
        assert_allclose(c['Cv'][0], [0.1, 0.0, 0.0, 0.3])
        self.assertEqual(nds.embedded_dde().kind, 'DDE')
        with self.assertRaises(UsageError):
            nds_to_ddf(nds.embedded_dde())


class MinimalDDFTests(SimpleTestCase):

    def test_rank_one_channels(self):
        dde = rank_one_dde()
        ddf = minimal_ddf_from_dde(dde)
        self.assertEqual(ddf.dims.channel_dims, (1, 1))
        self.assertEqual(naive_channel_dimensions(dde), [4, 4])
        dims, total = channel_dimensions(ddf)
        self.assertEqual((dims, total), ([1, 1], 2))

    def test_reduced_channels_reproduce_the_delayed_blocks(self):
        dde = rank_one_dde()
        ddf = minimal_ddf_from_dde(dde)
        for i in range(dde.dims.K):
            assert_allclose(ddf.channels[i]['Cv'] @ ddf.channel_block(i), dde.delayed_block(i), atol=1e-14)
            kernel = ddf.kernels[i].evaluate_many([-0.3, -0.1])
            full = dde.kernel_block(i).evaluate_many([-0.3, -0.1])
            assert_allclose(np.matmul(kernel, ddf.channel_block(i)), full, atol=1e-14)

    def test_vanishing_delay_is_dropped(self):
        dde = DDESpec.build(
            Dims(n=1, m=0, p=0, q=0, r=0), [0.5, 1.0],
            matrices={'A0': [[-1.0]]}, delayed={'A': [[[0.0]], [[0.5]]]},
        )
        ddf = minimal_ddf_from_dde(dde)
        self.assertEqual(ddf.delays, (1.0,))
        self.assertEqual(ddf.dims.channel_dims, (1,))
        self.assertTrue(any('dropped channel 1' in line for line in ddf.provenance))

    def test_rank_tolerance(self):
        dde = DDESpec.build(
            Dims(n=2, m=0, p=0, q=0, r=0), [1.0],
            delayed={'A': [[[1.0, 0.0], [0.0, 1e-12]]]},
        )
        self.assertEqual(minimal_ddf_from_dde(dde).dims.channel_dims, (1,))
        self.assertEqual(minimal_ddf_from_dde(dde, rank_tol=1e-14).dims.channel_dims, (2,))


class ODEPDETests(SimpleTestCase):

    def test_same_matrices_new_reading(self):
        ddf = dde_to_ddf(random_dde(seed=3))
        pde = ddf_to_odepde(ddf)
        self.assertIsInstance(pde, ODEPDESpec)
        self.assertEqual(pde.kind, 'ODEPDE')
        self.assertEqual(odepde_to_ddf(pde), ddf)
        with self.assertRaises(UsageError):
            ddf_to_odepde(pde)

    def test_history_maps(self):
        r0 = HistoryFunction.from_callable(lambda s: [np.sin(s), s ** 2], -2.0)
        phi0 = ddf_history_to_odepde(r0, 2.0)
        self.assertEqual((phi0.lo, phi0.hi), (-1.0, 0.0))
        assert_allclose(phi0(-0.25), r0(-0.5))
        back = odepde_history_to_ddf(phi0, 2.0)
        assert_allclose(back(-1.3), r0(-1.3))


class PIETests(SimpleTestCase):

    def test_operator_table(self):
        ddf = dde_to_ddf(random_dde(seed=5, kernel_degree=1))
        pie = ddf_to_pie(ddf)
        self.assertIsInstance(pie, PIESpec)
        self.assertEqual(set(pie.operators), set(PIE_OPERATORS))
        total = ddf.dims.total_channel_dim
        self.assertEqual(pie.T.dims, (ddf.dims.n, ddf.dims.n, total, total))
        self.assertEqual(pie.C2.dims, (ddf.dims.r, ddf.dims.n, 0, total))
        self.assertEqual(pie.D12.dims, (ddf.dims.q, ddf.dims.p, 0, 0))
        assert_allclose(pie.scratch.I_tau, np.diag(np.repeat(1.0 / np.array(ddf.delays), 4)))

    def test_direct_and_two_step_routes_agree(self):
        dde = random_dde(seed=6, kernel_degree=2)
        direct = dde_to_pie(dde)
        via_ddf = ddf_to_pie(dde_to_ddf(dde))
        for name in PIE_OPERATORS:
            assert_allclose(discretize(direct.operators[name], 8), discretize(via_ddf.operators[name], 8),
                            atol=1e-12, err_msg=name)

    def test_routes_agree_on_the_shower_network(self):
        dde = build_shower_dde(ShowerParams(2))
        direct = dde_to_pie(dde)
        via_ddf = ddf_to_pie(dde_to_ddf(dde))
        for name in PIE_OPERATORS:
            a, b = discretize(direct.operators[name], 8), discretize(via_ddf.operators[name], 8)
            self.assertEqual(a.shape, b.shape)
            assert_allclose(a, b, rtol=0, atol=1e-10, err_msg=name)

    def test_singular_loop_is_rejected(self):
        ddf = DDFSpec.build(
            Dims(n=1, m=0, p=0, q=0, r=0, channel_dims=(1,), nv=1), [1.0],
            matrices={'A0': [[-1.0]], 'Bv': [[1.0]]},
            channels={'Cr': [[[1.0]]], 'Drv': [[[1.0]]], 'Cv': [[[1.0]]]},
        )
        with self.assertRaises(WellPosednessError):
            ddf_to_pie(ddf)

    def test_feedthrough_loop_is_inverted(self):
        # v = 0.5 r(t - 1), r = x + v: D_I = 1 / (1 - 0.5)
        ddf = DDFSpec.build(
            Dims(n=1, m=0, p=0, q=0, r=0, channel_dims=(1,), nv=1), [1.0],
            matrices={'A0': [[-1.0]], 'Bv': [[1.0]]},
            channels={'Cr': [[[1.0]]], 'Drv': [[[1.0]]], 'Cv': [[[0.5]]]},
        )
        pie = ddf_to_pie(ddf)
        assert_allclose(pie.scratch.D_I, [[2.0]])
        assert_allclose(pie.scratch.T0, [[2.0]])


class ConvertSpecTests(SimpleTestCase):

    def test_reachability(self):
        dde = random_dde(seed=7)
        self.assertEqual(convert_spec(dde, 'ddf').kind, 'DDF')
        self.assertEqual(convert_spec(dde, 'odepde').kind, 'ODEPDE')
        self.assertEqual(convert_spec(dde, 'pie').kind, 'PIE')
        self.assertEqual(convert_spec(dde, 'ddf', minimal=True).provenance[0], 'minimal_ddf_from_dde')
        pde = convert_spec(dde, 'odepde')
        self.assertEqual(convert_spec(pde, 'ddf').kind, 'DDF')
        self.assertEqual(convert_spec(pde, 'pie').kind, 'PIE')
        self.assertEqual(REACHABILITY['PIE'], ())

    def test_unreachable_targets(self):
        dde = random_dde(seed=7)
        pie = convert_spec(dde, 'pie')
        with self.assertRaises(UsageError):
            convert_spec(pie, 'ddf')
        with self.assertRaises(UsageError):
            convert_spec(dde_to_ddf(dde), 'ddf', minimal=True)
        with self.assertRaises(UsageError):
            convert_spec(dde, 'dde')
