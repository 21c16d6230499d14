import math
import unittest

import numpy as np

from src.umbilic_flow.flow_exception import InvalidInputError, DegenerateMetricError
from src.umbilic_flow.warped_geometry import (RadialGrid, WarpedMetric, CurvatureField, BoundaryState, ORIGIN_GHOSTS,
                                              apply_boundary_conditions, extended_profiles, boundary_residual,
                                              origin_drift, arclength_derivative, curvature, second_fundamental_form,
                                              volume, total_scalar_curvature, rescale)

def round_cap(n_cells: int, s_max: float) -> WarpedMetric:
    grid = RadialGrid(n_cells)
    kappa = 0.0 if s_max == math.pi / 2 else math.cos(s_max) / math.sin(s_max)
    return WarpedMetric(grid, np.full(grid.n_nodes, s_max), np.sin(s_max * grid.nodes), kappa)

def flat_ball(n_cells: int) -> WarpedMetric:
    grid = RadialGrid(n_cells)
    return WarpedMetric(grid, np.ones(grid.n_nodes), grid.nodes, 1.0)

class TestRadialGrid(unittest.TestCase):

    def test_nodes(self):
        grid = RadialGrid(32)

        self.assertEqual(grid.n_nodes, 33)
        self.assertEqual(grid.dx, 1.0 / 32)
        self.assertEqual(grid.nodes[0], 0.0)
        self.assertEqual(grid.nodes[-1], 1.0)

    def test_too_coarse(self):
        with self.assertRaises(InvalidInputError):
            RadialGrid(8)

class TestWarpedMetric(unittest.TestCase):

    def test_profiles_are_read_only(self):
        metric = round_cap(32, math.pi / 2)

        with self.assertRaises(ValueError):
            metric.rho[0] = 1.0

    def test_negative_kappa(self):
        grid = RadialGrid(16)

        with self.assertRaises(InvalidInputError):
            WarpedMetric(grid, np.ones(17), grid.nodes, -0.5)

    def test_wrong_shape(self):
        grid = RadialGrid(16)

        with self.assertRaises(InvalidInputError):
            WarpedMetric(grid, np.ones(16), grid.nodes, 0.0)

    def test_collapsed_radius(self):
        grid = RadialGrid(16)
        phi = np.array(grid.nodes)
        phi[5] = 0.0

        with self.assertRaises(DegenerateMetricError) as cm:
            WarpedMetric(grid, np.ones(17), phi, 0.0)
        self.assertEqual(cm.exception.node, 5)

    def test_non_positive_rho(self):
        grid = RadialGrid(16)
        rho = np.ones(17)
        rho[3] = -1.0

        with self.assertRaises(DegenerateMetricError) as cm:
            WarpedMetric(grid, rho, grid.nodes, 0.0)
        self.assertEqual(cm.exception.node, 3)

class TestBoundaryConditions(unittest.TestCase):

    def test_neumann_residual(self):
        metric = apply_boundary_conditions(round_cap(64, math.pi / 2))

        self.assertLessEqual(boundary_residual(metric), 1e-12)

    def test_robin_residual(self):
        metric = apply_boundary_conditions(round_cap(64, math.pi / 3))

        self.assertAlmostEqual(metric.kappa, 0.5773502692, places=9)
        self.assertLessEqual(boundary_residual(metric), 1e-12)

    def test_exact_cap_is_unchanged(self):
        s_max = math.pi / 3
        metric = apply_boundary_conditions(round_cap(64, s_max))

        # the ghost continues the profile sin(s) to fifth order
        self.assertAlmostEqual(metric.ghosts.boundary_phi, math.sin(s_max * (1.0 + 1.0 / 64)), delta=1e-8)
        self.assertAlmostEqual(metric.ghosts.boundary_rho, s_max, delta=1e-12)

    def test_origin_parity(self):
        metric = apply_boundary_conditions(round_cap(32, math.pi / 2))
        rho, phi = extended_profiles(metric)

        self.assertEqual(rho.size, 32 + 4)
        self.assertEqual(phi[ORIGIN_GHOSTS - 1], -metric.phi[1])
        self.assertEqual(phi[ORIGIN_GHOSTS - 2], -metric.phi[2])
        self.assertEqual(rho[ORIGIN_GHOSTS - 1], metric.rho[1])

    def test_origin_reset(self):
        grid = RadialGrid(16)
        phi = grid.nodes + 1e-3
        metric = apply_boundary_conditions(WarpedMetric(grid, np.ones(17), phi, 1.0))

        self.assertEqual(metric.phi[0], 0.0)

    def test_origin_drift(self):
        self.assertLess(origin_drift(round_cap(32, math.pi / 2)), 1e-6)
        self.assertLess(origin_drift(flat_ball(32)), 1e-12)

class TestCurvature(unittest.TestCase):

    def test_round_hemisphere(self):
        curv = curvature(round_cap(64, math.pi / 2))

        np.testing.assert_allclose(curv.k_rad, 1.0, rtol=1e-3)
        np.testing.assert_allclose(curv.k_sph, 1.0, rtol=1e-3)
        np.testing.assert_allclose(curv.a, 2.0, rtol=1e-3)
        np.testing.assert_allclose(curv.b, 2.0, rtol=1e-3)
        np.testing.assert_allclose(curv.r_scalar, 6.0, rtol=1e-3)

    def test_second_order(self):
        errors = [np.max(np.abs(curvature(round_cap(n, math.pi / 3)).r_scalar - 6.0)) for n in (32, 64)]

        self.assertGreater(errors[0] / errors[1], 3.5)

    def test_flat_ball(self):
        curv = curvature(flat_ball(32))

        self.assertLess(curv.max_abs_curvature, 1e-8)

    def test_from_ricci(self):
        curv = CurvatureField.from_ricci([1.0], [2.0])

        self.assertEqual(curv.k_rad[0], 0.5)
        self.assertEqual(curv.k_sph[0], 1.5)
        self.assertEqual(curv.r_scalar[0], 5.0)
        self.assertEqual(curv.s_norm[0], 9.0)
        self.assertEqual(curv.ric_min, 1.0)

class TestBoundaryState(unittest.TestCase):

    def test_consistent(self):
        state = BoundaryState(a_b=1.0, b_b=2.0, kappa=0.5, a_s=3.0, b_s=0.5, r_s=4.0)

        self.assertEqual(state.r_b, 5.0)
        self.assertEqual(state.mean_curvature, 1.0)

    def test_inconsistent(self):
        with self.assertRaises(InvalidInputError):
            BoundaryState(a_b=1.0, b_b=2.0, kappa=0.5, a_s=3.0, b_s=0.5, r_s=5.0)

class TestDerivatives(unittest.TestCase):

    def test_arclength_derivative_linear(self):
        grid = RadialGrid(16)
        metric = WarpedMetric(grid, np.full(17, 2.0), 2.0 * grid.nodes, 0.5)

        np.testing.assert_allclose(arclength_derivative(metric, 3.0 * grid.nodes), 1.5, rtol=1e-12)

    def test_arclength_derivative_shape(self):
        with self.assertRaises(InvalidInputError):
            arclength_derivative(flat_ball(16), np.zeros(5))

    def test_second_fundamental_form(self):
        h, mean = second_fundamental_form(round_cap(64, math.pi / 3))

        self.assertAlmostEqual(h, 1.0 / math.sqrt(3.0), delta=1e-3)
        self.assertEqual(mean, 2.0 * h)

class TestIntegrals(unittest.TestCase):

    def test_hemisphere_volume(self):
        self.assertAlmostEqual(volume(round_cap(64, math.pi / 2)), math.pi ** 2, delta=1e-6)

    def test_flat_volume(self):
        self.assertAlmostEqual(volume(flat_ball(64)), 4.0 * math.pi / 3.0, delta=1e-3)

    def test_composite_trapezoid(self):
        # the rule integrates x^2 on 16 cells to 1/3 + dx^2/6
        expected = 4.0 * math.pi * (1.0 / 3.0 + 1.0 / (6.0 * 16 ** 2))
        self.assertAlmostEqual(volume(flat_ball(16)), expected, delta=1e-13)

    def test_total_scalar_curvature(self):
        self.assertAlmostEqual(total_scalar_curvature(round_cap(64, math.pi / 2)), 6.0 * math.pi ** 2, delta=0.02)

class TestRescale(unittest.TestCase):

    def test_scaling(self):
        metric = apply_boundary_conditions(round_cap(32, math.pi / 3))
        scaled = rescale(metric, 2.0)

        self.assertEqual(scaled.kappa, metric.kappa / 2.0)
        self.assertAlmostEqual(volume(scaled), 8.0 * volume(metric), delta=1e-12)
        np.testing.assert_allclose(curvature(scaled).r_scalar, curvature(metric).r_scalar / 4.0, rtol=1e-12)

    def test_invalid_factor(self):
        with self.assertRaises(InvalidInputError):
            rescale(flat_ball(16), 0.0)
