import numpy as np
from django.test import SimpleTestCase, override_settings

from delayrep.convert import dde_to_ddf, ddf_to_odepde, ddf_to_pie
from delayrep.exceptions import DimensionError, InputSmoothnessError, SpecValidationError
from delayrep.inputs import HistoryFunction, SignalDescriptor
from delayrep.kernels import PolyKernel
from delayrep.lemmas import random_dde
from delayrep.specs import DDESpec, DDFSpec, Dims
from delayrep.validation import (
    check_inputs, check_sewing_ddf, check_sewing_odepde, ensure_valid, max_residual, validate,
)


def scalar_dde(delays=(0.5, 1.0), kernel_degree=1):
    kernels = [PolyKernel(np.ones((kernel_degree + 1, 1, 1)), domain=(-delays[0], 0.0))]
    kernels += [None] * (len(delays) - 1)
    return DDESpec.build(
        Dims(n=1, m=1, p=1, q=1, r=1),
        delays,
        matrices={'A0': [[-1.0]], 'B1': [[1.0]], 'C10': [[1.0]]},
        delayed={'A': [[[0.2]]] + [[[0.1]]] * (len(delays) - 1)},
        kernels={'Ad': kernels},
    )


class ValidateTests(SimpleTestCase):

    def test_valid_specs_pass(self):
        dde = random_dde(seed=4, kernel_degree=2)
        for spec in (dde, dde_to_ddf(dde), ddf_to_odepde(dde_to_ddf(dde)), ddf_to_pie(dde_to_ddf(dde))):
            report = validate(spec)
            self.assertTrue(report.ok, report.summary())
            self.assertIs(ensure_valid(spec), spec)

    def test_equal_delays(self):
        report = validate(scalar_dde(delays=(1.0, 1.0)))
        self.assertFalse(report.ok)
        self.assertIn('delays', report.names())

    def test_decreasing_delays(self):
        self.assertIn('delays', validate(scalar_dde(delays=(1.0, 0.5))).names())

    def test_zero_delay_cannot_be_built(self):
        with self.assertRaises(DimensionError):
            DDESpec.build(Dims(n=1, m=0, p=0, q=0, r=0), [0.0])

    def test_wrong_matrix_shape(self):
        spec = DDESpec.build(Dims(n=1, m=1, p=1, q=1, r=1), [1.0], matrices={'A0': np.eye(2)})
        report = validate(spec)
        self.assertEqual(report.names(), ['A0'])
        with self.assertRaises(SpecValidationError) as ctx:
            ensure_valid(spec)
        self.assertIs(ctx.exception.report.ok, False)
        self.assertEqual(ctx.exception.exit_code, 1)

    def test_kernel_on_wrong_domain(self):
        spec = DDESpec.build(
            Dims(n=1, m=1, p=1, q=1, r=1), [1.0],
            kernels={'Ad': [PolyKernel.constant([[1.0]], domain=(-2.0, 0.0))]},
        )
        self.assertEqual(validate(spec).names(), ['Ad[1]'])

    def test_kernel_degree_cap(self):
        spec = scalar_dde(kernel_degree=5)
        self.assertTrue(validate(spec).ok)
        self.assertEqual(validate(spec, max_degree=3).names(), ['Ad[1]'])
        with override_settings(DELAYREP={'MAX_KERNEL_DEGREE': 4}):
            self.assertEqual(validate(spec).names(), ['Ad[1]'])

    def test_singular_loop_matrix(self):
        # v = r(t - 1) and r = x + v makes I - Cv Drv vanish
        ddf = DDFSpec.build(
            Dims(n=1, m=0, p=0, q=0, r=0, channel_dims=(1,), nv=1), [1.0],
            matrices={'A0': [[-1.0]], 'Bv': [[1.0]]},
            channels={'Cr': [[[1.0]]], 'Drv': [[[1.0]]], 'Cv': [[[1.0]]]},
        )
        self.assertEqual(validate(ddf).names(), ['D_I'])


class InputRuleTests(SimpleTestCase):

    def setUp(self):
        # w enters through a delayed block
        self.spec = DDESpec.build(Dims(n=1, m=1, p=1, q=1, r=1), [1.0], delayed={'B1': [[[1.0]]]})

    def test_delayed_input_must_vanish_and_be_smooth(self):
        check_inputs(self.spec, SignalDescriptor.sinusoid(1.0, 0.5), SignalDescriptor.step(0.0, 1.0))
        with self.assertRaises(InputSmoothnessError):
            check_inputs(self.spec, SignalDescriptor.constant(1.0), SignalDescriptor.zero())
        with self.assertRaises(InputSmoothnessError):
            check_inputs(self.spec, SignalDescriptor.step(0.5, 1.0), SignalDescriptor.zero())

    def test_undelayed_inputs_are_free(self):
        spec = scalar_dde()
        check_inputs(spec, SignalDescriptor.step(0.0, 2.0), SignalDescriptor.constant(1.0))


class SewingTests(SimpleTestCase):

    def setUp(self):
        self.ddf = dde_to_ddf(scalar_dde())

    def test_consistent_histories(self):
        x0 = np.array([2.0])
        r0 = [HistoryFunction.constant([2.0, 0.0, 0.0], -tau) for tau in self.ddf.delays]
        self.assertLess(max_residual(check_sewing_ddf(self.ddf, x0, r0)), 1e-14)
        phi0 = [HistoryFunction.constant([2.0, 0.0, 0.0], -1.0) for _ in self.ddf.delays]
        self.assertLess(max_residual(check_sewing_odepde(ddf_to_odepde(self.ddf), x0, phi0)), 1e-14)

    def test_inconsistent_history(self):
        r0 = [HistoryFunction.constant([1.0, 0.0, 0.0], -tau) for tau in self.ddf.delays]
        residuals = check_sewing_ddf(self.ddf, np.array([2.0]), r0)
        self.assertAlmostEqual(max_residual(residuals), 1.0)
