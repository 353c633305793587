import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from delayrep.exceptions import DimensionError, DomainError
from delayrep.kernels import PolyKernel, block_kernel, eval_kernel
from delayrep.quadrature import (
    cgl_nodes, gauss_nodes, panel_count, panel_nodes,
)


class PolyKernelTests(SimpleTestCase):

    def setUp(self):
        # K(s) = [[1 + 2s, s^2], [0, 3]] on [-2, 0]
        coeffs = np.zeros((3, 2, 2))
        coeffs[0] = [[1.0, 0.0], [0.0, 3.0]]
        coeffs[1] = [[2.0, 0.0], [0.0, 0.0]]
        coeffs[2] = [[0.0, 1.0], [0.0, 0.0]]
        self.kernel = PolyKernel(coeffs, domain=(-2.0, 0.0))

    def test_evaluation(self):
        assert_allclose(self.kernel(-1.5), [[-2.0, 2.25], [0.0, 3.0]])
        many = self.kernel.evaluate_many([-2.0, 0.0])
        self.assertEqual(many.shape, (2, 2, 2))
        assert_allclose(many[0], [[-3.0, 4.0], [0.0, 3.0]])
        assert_allclose(many[1], [[1.0, 0.0], [0.0, 3.0]])

    def test_outside_domain_raises(self):
        with self.assertRaises(DomainError):
            self.kernel(0.5)
        with self.assertRaises(DomainError):
            self.kernel.evaluate_many([-2.5])

    def test_integral_matches_quadrature(self):
        s, w = gauss_nodes(-2.0, 0.0, 5)
        expected = np.einsum('q,qij->ij', w, self.kernel.evaluate_many(s))
        assert_allclose(self.kernel.integral(), expected, atol=1e-13)
        # int_{-2}^0 (1 + 2s) ds = -2, int s^2 = 8/3, int 3 = 6
        assert_allclose(self.kernel.integral(), [[-2.0, 8.0 / 3.0], [0.0, 6.0]], atol=1e-13)

    def test_antiderivative_vanishes_at_lower_bound(self):
        anti = self.kernel.antiderivative()
        assert_allclose(anti(-2.0), np.zeros((2, 2)), atol=1e-13)
        assert_allclose(anti(0.0), self.kernel.integral(), atol=1e-13)

    def test_rescaled_moves_to_unit_interval(self):
        scaled = self.kernel.rescaled(2.0)
        self.assertEqual(scaled.domain, (-1.0, 0.0))
        assert_allclose(scaled(-0.25), 2.0 * self.kernel(-0.5))
        assert_allclose(scaled.integral(), self.kernel.integral(), atol=1e-13)

    def test_product_and_matrix_multiplication(self):
        other = PolyKernel.constant([[1.0], [2.0]], domain=(-2.0, 0.0))
        prod = self.kernel.product(other)
        self.assertEqual(prod.shape, (2, 1))
        assert_allclose(prod(-1.0), self.kernel(-1.0) @ [[1.0], [2.0]])
        left = self.kernel.left([[1.0, 1.0]])
        assert_allclose(left(-0.5), np.array([[1.0, 1.0]]) @ self.kernel(-0.5))
        with self.assertRaises(DimensionError):
            self.kernel.right(np.ones((3, 3)))

    def test_trimmed_equality_and_zero(self):
        padded = self.kernel.padded(6)
        self.assertEqual(padded.degree, 6)
        self.assertEqual(padded.effective_degree(), 2)
        self.assertEqual(padded, self.kernel)
        self.assertEqual(padded.trimmed().degree, 2)
        zero = PolyKernel.zeros(2, 2, domain=(-2.0, 0.0))
        self.assertTrue(zero.is_zero())
        self.assertEqual(zero.effective_degree(), 0)
        self.assertEqual(self.kernel + zero, self.kernel)
        self.assertNotEqual(self.kernel.with_domain((-1.0, 0.0)), self.kernel)

    def test_two_variable_kernels(self):
        # R(s, theta) = s * theta
        coeffs = np.zeros((2, 2, 1, 1))
        coeffs[1, 1] = 1.0
        k = PolyKernel(coeffs, nvars=2)
        assert_allclose(k(-0.5, -0.25), [[0.125]])
        lifted = PolyKernel.in_theta(PolyKernel.from_scalar_coeffs([0.0, 1.0]))
        assert_allclose(lifted.evaluate_many([-0.5, -0.1], [-0.25, -0.25])[:, 0, 0], [-0.25, -0.25])
        with self.assertRaises(DimensionError):
            k(-0.5)

    def test_evaluation_is_linear_in_the_coefficients(self):
        rng = np.random.default_rng(3)
        # Quarter-integer data keeps every product exact in floating point.
        k1 = PolyKernel(rng.integers(-4, 5, size=(4, 2, 3)) / 4.0)
        k2 = PolyKernel(rng.integers(-4, 5, size=(2, 2, 3)) / 4.0)
        alpha, beta = 0.5, -2.0
        combined = alpha * k1 + beta * k2
        for s in (-1.0, -0.75, -0.5, -0.25, 0.0):
            expected = alpha * eval_kernel(k1, s) + beta * eval_kernel(k2, s)
            assert_allclose(eval_kernel(combined, s), expected, rtol=0, atol=1e-14)
        r1 = PolyKernel(rng.integers(-4, 5, size=(3, 3, 1, 2)) / 4.0, nvars=2)
        r2 = PolyKernel(rng.integers(-4, 5, size=(2, 2, 1, 2)) / 4.0, nvars=2)
        combined = alpha * r1 + beta * r2
        expected = alpha * eval_kernel(r1, -0.5, -0.25) + beta * eval_kernel(r2, -0.5, -0.25)
        assert_allclose(eval_kernel(combined, -0.5, -0.25), expected, rtol=0, atol=1e-14)

    def test_eval_kernel_takes_scalar_points(self):
        with self.assertRaises(DimensionError):
            eval_kernel(self.kernel, [-1.0, -0.5])

    def test_invalid_construction(self):
        with self.assertRaises(DimensionError):
            PolyKernel(np.zeros((2, 2)))
        with self.assertRaises(DimensionError):
            PolyKernel(np.zeros((1, 1, 1)), domain=(0.0, 0.0))


class BlockKernelTests(SimpleTestCase):

    def test_mixed_blocks(self):
        k = PolyKernel.from_scalar_coeffs([1.0, 1.0])
        block = block_kernel([[k, np.array([[2.0, 3.0]])], [None, np.eye(2)[:1]]])
        self.assertEqual(block.shape, (2, 3))
        assert_allclose(block(-0.5), [[0.5, 2.0, 3.0], [0.0, 1.0, 0.0]])

    def test_mismatched_blocks_raise(self):
        with self.assertRaises(DimensionError):
            block_kernel([[np.ones((1, 2))], [np.ones((1, 3))]])
        with self.assertRaises(DimensionError):
            block_kernel([[np.ones((1, 2)), np.ones((2, 2))]])

    def test_ragged_layout(self):
        with self.assertRaises(DimensionError):
            block_kernel([[np.ones((1, 1)), np.ones((1, 1))], [np.ones((1, 1))]])

    def test_unsized_row_or_column(self):
        with self.assertRaises(DimensionError):
            block_kernel([[np.ones((1, 1)), None], [None, None]])
        with self.assertRaises(DimensionError):
            block_kernel([[np.ones((1, 1)), None]])

    def test_variable_count_mismatch(self):
        two = PolyKernel.zeros(1, 1, nvars=2)
        with self.assertRaises(DimensionError):
            block_kernel([[two, np.ones((1, 1))]])
        block = block_kernel([[two, np.ones((1, 1))]], nvars=2)
        self.assertEqual(block.nvars, 2)
        self.assertEqual(block.shape, (1, 2))


class QuadratureTests(SimpleTestCase):

    def test_panel_rule_integrates_polynomials(self):
        points, weights = panel_nodes([-1.0, -0.3, 0.0], panel_count(3))
        self.assertAlmostEqual(float(weights @ points ** 6), 1.0 / 7.0, places=13)

    def test_panel_count(self):
        self.assertEqual(panel_count(0), 2)
        self.assertEqual(panel_count(5), 5)
        self.assertEqual(panel_count(5, 8), 8)

    def test_cgl_nodes(self):
        nodes = cgl_nodes(9)
        self.assertEqual(nodes[0], -1.0)
        self.assertAlmostEqual(nodes[-1], 0.0, places=15)
        self.assertTrue(np.all(np.diff(nodes) > 0))
