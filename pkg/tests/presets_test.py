import math
import unittest

import numpy as np

from src.umbilic_flow.flow_exception import InvalidInputError, PresetRejectedError
from src.umbilic_flow.pinching_monitors import eps_pinch
from src.umbilic_flow.presets import PRESETS, PRESET_NAMES, make_preset, preset_parameters
from src.umbilic_flow.warped_geometry import boundary_residual, curvature

class TestPresetParameters(unittest.TestCase):

    def test_defaults(self):
        self.assertDictEqual(preset_parameters('round_cap'), {'s_max': math.pi / 2})

    def test_override(self):
        params = preset_parameters('perturbed_cap', {'amp': 0.1})

        self.assertEqual(params['amp'], 0.1)
        self.assertEqual(params['mode'], 2)
        self.assertEqual(params['s_max'], math.pi / 2)

    def test_unknown_preset(self):
        with self.assertRaises(InvalidInputError):
            preset_parameters('sphere')

    def test_unknown_parameter(self):
        with self.assertRaises(InvalidInputError):
            preset_parameters('round_cap', {'beta': 1.0})

    def test_names(self):
        self.assertTupleEqual(PRESET_NAMES, ('round_cap', 'perturbed_cap', 'flattened_cap', 'flat_cap'))
        self.assertFalse(PRESETS['flat_cap'].strict_positivity)

class TestRoundCap(unittest.TestCase):

    def test_hemisphere(self):
        metric = make_preset('round_cap', n_cells=64)

        self.assertEqual(metric.kappa, 0.0)
        np.testing.assert_allclose(curvature(metric).r_scalar, 6.0, rtol=1e-3)

    def test_smaller_cap(self):
        metric = make_preset('round_cap', {'s_max': math.pi / 3}, n_cells=64)

        self.assertAlmostEqual(metric.kappa, 1.0 / math.sqrt(3.0), places=12)
        self.assertLessEqual(boundary_residual(metric), 1e-12)

    def test_concave_boundary(self):
        with self.assertRaises(PresetRejectedError):
            make_preset('round_cap', {'s_max': 2.0}, n_cells=32)

    def test_s_max_out_of_range(self):
        with self.assertRaises(InvalidInputError):
            make_preset('round_cap', {'s_max': 4.0}, n_cells=32)

    def test_too_coarse(self):
        with self.assertRaises(InvalidInputError):
            make_preset('round_cap', n_cells=4)

class TestPerturbedCap(unittest.TestCase):

    def test_default_pinching(self):
        metric = make_preset('perturbed_cap', n_cells=64)
        eps, _ = eps_pinch(curvature(metric))

        self.assertEqual(metric.kappa, 0.0)
        self.assertGreater(eps, 0.0)
        self.assertLess(eps, 1.0 / 3.0)

    def test_positive_kappa(self):
        metric = make_preset('perturbed_cap', {'s_max': math.pi / 3}, n_cells=64)

        self.assertGreater(metric.kappa, 0.0)
        self.assertGreater(curvature(metric).ric_min, 0.0)

    def test_negative_ricci(self):
        with self.assertRaises(PresetRejectedError) as cm:
            make_preset('perturbed_cap', {'amp': -0.9}, n_cells=64)
        self.assertIsNotNone(cm.exception.node)

    def test_mode(self):
        with self.assertRaises(InvalidInputError):
            make_preset('perturbed_cap', {'mode': 1.5}, n_cells=32)

class TestFlattenedCap(unittest.TestCase):

    def test_anisotropic(self):
        curv = curvature(make_preset('flattened_cap', {'beta': 1.0}, n_cells=64))
        eps, _ = eps_pinch(curv)

        self.assertGreater(np.max(np.abs(curv.a - curv.b)), 0.1)
        self.assertGreater(eps, 0.05)
        self.assertLess(eps, 0.25)

    def test_round_limit(self):
        round_metric = make_preset('round_cap', n_cells=32)
        flat_beta = make_preset('flattened_cap', {'beta': 0.0}, n_cells=32)

        np.testing.assert_array_equal(flat_beta.rho, round_metric.rho)
        np.testing.assert_array_equal(flat_beta.phi, round_metric.phi)

    def test_negative_beta(self):
        with self.assertRaises(InvalidInputError):
            make_preset('flattened_cap', {'beta': -0.5}, n_cells=32)

class TestFlatCap(unittest.TestCase):

    def test_flat(self):
        metric = make_preset('flat_cap', {'s_max': 2.0}, n_cells=32)

        self.assertEqual(metric.kappa, 0.5)
        self.assertLess(curvature(metric).max_abs_curvature, 1e-8)
