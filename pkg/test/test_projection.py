import unittest

import numpy as np

import odflow as o
from odflow import flowmodel as fm
from odflow.projection import AssignmentPolytope, prox_l1_nonneg, \
    soft_threshold
from odflow.odflowerrors import ProjectionError

try:
    import cvxpy
except ImportError:
    cvxpy = None


def polytope_of(spec, tau_max=4):
    net = o.network_from_spec(spec)
    paths = o.enumerate_paths(net, tau_max)
    support = fm.rigid_support(net, paths)
    return AssignmentPolytope(net, support, paths.origins), support, paths


class TestChainPolytope(unittest.TestCase):
    def setUp(self):
        self.polytope, self.support, _ = polytope_of("chain", 2)

    def test_closed_form(self):
        self.assertEqual(3, self.polytope.size)
        x = self.polytope.project([0.3, 2.0, 0.8])
        np.testing.assert_allclose([1.0, 1.0, 0.8], x, atol=1e-9)
        x = self.polytope.project([0.3, 1.0, 1.5])
        np.testing.assert_allclose([1.0, 1.0, 1.0], x, atol=1e-9)
        x = self.polytope.project([1.0, 1.0, -0.5])
        np.testing.assert_allclose([1.0, 1.0, 0.0], x, atol=1e-9)

    def test_wrong_length(self):
        with self.assertRaises(ProjectionError):
            self.polytope.project(np.zeros(4))

    def test_origin_without_first_link(self):
        support = np.array(self.support)
        support[0, 0, 0] = False
        with self.assertRaises(ProjectionError) as context:
            AssignmentPolytope(o.build_chain(), support, (0, 1))
        self.assertEqual(0, context.exception.origin)


class TestGridPolytope(unittest.TestCase):
    def setUp(self):
        self.polytope, self.support, self.paths = polytope_of("3x3bi")
        self.rng = np.random.default_rng(17)

    def test_feasible_and_idempotent(self):
        for _ in range(3):
            v = self.rng.uniform(-0.5, 1.5, size=self.polytope.size)
            x = self.polytope.project(v)
            residual = self.polytope.residual(x)
            self.assertLess(max(residual.values()), 1e-8)
            again = self.polytope.project(x)
            np.testing.assert_allclose(x, again, atol=1e-8)
            P = o.AssignmentTensor(self.polytope.network, self.paths.origins,
                                   np.zeros(self.support.shape),
                                   self.support).with_vector(x)
            self.assertTrue(P.is_feasible())

    def test_feasible_point_is_fixed(self):
        truth = o.gen_ground_truth(o.GenConfig(n_t=10, seed=6))
        v = truth.P.vector()
        np.testing.assert_allclose(v, self.polytope.project(v), atol=1e-9)

    def test_dense_constraints(self):
        a_eq, b_eq, g = self.polytope.dense_constraints()
        self.assertEqual((9, self.polytope.size), a_eq.shape)
        self.assertEqual(9, len(b_eq))
        truth = o.gen_ground_truth(o.GenConfig(n_t=10, seed=6))
        v = truth.P.vector()
        np.testing.assert_allclose(b_eq, a_eq @ v)
        self.assertGreaterEqual((g @ v).min(), -1e-12)
        a0, b0, g0 = self.polytope.dense_constraints(0)
        self.assertEqual(1, a0.shape[0])
        self.assertEqual(g0.shape[1], a0.shape[1])

    @unittest.skipIf(cvxpy is None, "cvxpy is not installed")
    def test_against_qp_solver(self):
        polytope, _, _ = polytope_of("3x3uni")
        a_eq, b_eq, g = polytope.dense_constraints()
        for _ in range(2):
            v = self.rng.uniform(-0.5, 1.5, size=polytope.size)
            z = cvxpy.Variable(polytope.size)
            problem = cvxpy.Problem(
                cvxpy.Minimize(cvxpy.sum_squares(z - v)),
                [a_eq @ z == b_eq, g @ z >= 0, z >= 0, z <= 1])
            problem.solve()
            x = polytope.project(v)
            np.testing.assert_allclose(z.value, x, atol=1e-5)
            self.assertLessEqual(np.sum((x - v) ** 2),
                                 problem.value + 1e-6)


class TestProx(unittest.TestCase):
    def test_soft_threshold(self):
        np.testing.assert_allclose([-1.0, 0.0, 0.0, 2.0],
                                   soft_threshold(np.array([-2, 0.5, -1, 3]),
                                                  1.0))

    def test_zero_threshold_clips(self):
        v = np.array([[1.0, -2.0, 3.0]])
        np.testing.assert_array_equal([[1.0, 0.0, 3.0]],
                                      prox_l1_nonneg(v, 0.0, o.dct_matrix(3)))

    def test_constant_series(self):
        D = o.dct_matrix(16)
        x = prox_l1_nonneg(np.full((1, 16), 5.0), 4.0, D)
        np.testing.assert_allclose(4.0, x)

    def test_large_threshold(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(3, 20))
        x = prox_l1_nonneg(v, 1e6, o.dct_matrix(20))
        np.testing.assert_allclose(0.0, x, atol=1e-9)

    def test_nonnegative_and_not_worse(self):
        rng = np.random.default_rng(8)
        D = o.dct_matrix(30)
        v = rng.normal(size=(2, 30))
        t = 0.3
        x = prox_l1_nonneg(v, t, D)
        self.assertGreaterEqual(x.min(), 0.0)

        def objective(z):
            return 0.5 * np.sum((z - v) ** 2) + t * D.l1(z)

        for candidate in (np.maximum(v, 0.0), np.zeros_like(v),
                          x + 0.01 * np.abs(rng.normal(size=v.shape))):
            self.assertLessEqual(objective(x), objective(candidate) + 1e-9)

    def test_identity_closed_form(self):
        v = np.array([[3.0, -1.0, 0.2, 0.5], [0.0, 2.0, 1.0, -4.0]])
        t = np.array([[0.5], [1.5]])
        x = prox_l1_nonneg(v, t, o.identity_matrix(4))
        np.testing.assert_allclose([[2.5, 0.0, 0.0, 0.0],
                                    [0.0, 0.5, 0.0, 0.0]], x)


if __name__ == "__main__":
    unittest.main()
