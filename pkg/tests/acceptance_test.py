import math
import os
import unittest

import numpy as np

from src.umbilic_flow.boundary_identities import identity_convergence_study
from src.umbilic_flow.flow_solver import FlowConfig, normalize_trace, normalized_decay_rate, run, solution_error_study
from src.umbilic_flow.harness_config import HarnessConfig
from src.umbilic_flow.run_report import PASS, build_report
from src.umbilic_flow.trace_io import persisted_view

SLOW = os.environ.get('UMBILIC_FLOW_SLOW')

def full_report(config: HarnessConfig):
    return build_report(config, persisted_view(config, run(config.flow_config())))

@unittest.skipUnless(SLOW, 'set UMBILIC_FLOW_SLOW=1 to run the full-resolution runs')
class TestHemisphere(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = full_report(HarnessConfig(preset='round_cap', n_cells=256, emit_plots=False))

    def test_exact_solution(self):
        self.assertEqual(self.report.verdict('exact_solution').status, PASS)
        self.assertEqual(self.report.verdict('blow_up_time').status, PASS)

    def test_codazzi(self):
        self.assertEqual(self.report.verdict('totally_geodesic_codazzi').status, PASS)

    def test_self_similar(self):
        self.assertEqual(self.report.verdict('normalized_convergence').status, PASS)

    def test_nothing_failed(self):
        self.assertListEqual([v.name for v in self.report.failed], [])

@unittest.skipUnless(SLOW, 'set UMBILIC_FLOW_SLOW=1 to run the full-resolution runs')
class TestFlatCap(unittest.TestCase):

    def test_stationary(self):
        report = full_report(HarnessConfig(preset='flat_cap', n_cells=256, t_end=0.1, emit_plots=False))

        self.assertEqual(report.verdict('stationary').status, PASS)

@unittest.skipUnless(SLOW, 'set UMBILIC_FLOW_SLOW=1 to run the full-resolution runs')
class TestPerturbedCap(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = full_report(HarnessConfig(preset='perturbed_cap', n_cells=256, emit_plots=False))

    def test_initial_pinching(self):
        self.assertGreaterEqual(self.report.summary['eps_star0'], 0.15)
        self.assertLess(self.report.summary['eps_star0'], 1.0 / 3.0)

    def test_positivity(self):
        self.assertEqual(self.report.verdict('positivity').status, PASS)
        self.assertEqual(self.report.verdict('volume_monotone').status, PASS)

    def test_pinching(self):
        self.assertEqual(self.report.verdict('eps_pinching').status, PASS)
        self.assertEqual(self.report.verdict('f_bound').status, PASS)

@unittest.skipUnless(SLOW, 'set UMBILIC_FLOW_SLOW=1 to run the full-resolution runs')
class TestConvergenceStudies(unittest.TestCase):

    def test_exact_solution_order(self):
        table = solution_error_study(FlowConfig(preset='round_cap'), [64, 128, 256], t_sample=0.1)

        self.assertAlmostEqual(table.order, 2.0, delta=0.2)

    def test_identity_order(self):
        config = FlowConfig(preset='round_cap', preset_params={'s_max': math.pi / 3})
        table = identity_convergence_study(config, [64, 128, 256], 0.05)

        self.assertGreaterEqual(table.order, 1.5)
        self.assertLessEqual(table.order, 2.5)

    def test_identity_order_first_order_stencil(self):
        config = FlowConfig(preset='round_cap', preset_params={'s_max': math.pi / 3})
        table = identity_convergence_study(config, [64, 128, 256], 0.05, stencil='first')

        self.assertGreaterEqual(table.order, 0.6)
        self.assertLessEqual(table.order, 1.4)

PINCHED_PRESETS = (
    ('perturbed_cap', {'s_max': math.pi / 3}),
    ('flattened_cap', {'s_max': math.pi / 3}),
    ('flattened_cap', {})
)

def full_run(preset: str, params: dict, n_cells: int):
    config = HarnessConfig(preset=preset, n_cells=n_cells, emit_plots=False, **params)
    trace = run(config.flow_config())
    return trace, build_report(config, persisted_view(config, trace))

@unittest.skipUnless(SLOW, 'set UMBILIC_FLOW_SLOW=1 to run the full-resolution runs')
class TestPinchedPresets(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.runs = {}
        for preset, params in PINCHED_PRESETS:
            key = (preset, params.get('s_max', math.pi / 2))
            cls.runs[key] = {n: full_run(preset, params, n) for n in (128, 256)}

    def fine(self):
        for key, runs in self.runs.items():
            yield key, runs[256][0], runs[256][1]

    def test_initial_pinching(self):
        kappas = []
        for key, trace, _ in self.fine():
            with self.subTest(preset=key):
                eps0 = trace.records[0].eps_star
                self.assertGreaterEqual(eps0, 0.15)
                self.assertLess(eps0, 0.33)
                kappas.append(trace.records[0].kappa)

        self.assertGreaterEqual(sum(k > 0.0 for k in kappas), 2)

    def test_ricci_stays_positive(self):
        for key, trace, report in self.fine():
            with self.subTest(preset=key):
                self.assertEqual(trace.stop_reason, 'blow-up')
                self.assertGreaterEqual(trace.records[-1].r_max, 1000.0)
                self.assertGreater(np.min(trace.column('ric_min') / trace.column('r_max')), -1e-3)
                self.assertEqual(report.verdict('positivity').status, PASS)

    def test_pinching_preserved(self):
        # kappa > 0 data is not compatible at t = 0; a boundary layer lowers eps_star briefly
        for key, trace, _ in self.fine():
            with self.subTest(preset=key):
                eps = trace.column('eps_star')
                eps0 = eps[0]
                window = eps if trace.records[0].kappa == 0.0 else eps[len(eps) * 2 // 3:]
                self.assertGreaterEqual(np.min(window), eps0 - 1e-3)

    def test_blow_up_time_converges(self):
        for key, runs in self.runs.items():
            with self.subTest(preset=key):
                coarse, fine = runs[128][0], runs[256][0]
                self.assertEqual(coarse.stop_reason, 'blow-up')
                self.assertAlmostEqual(coarse.records[-1].t / fine.records[-1].t, 1.0, delta=0.02)

    def test_delta_pinch(self):
        for key, _, report in self.fine():
            with self.subTest(preset=key):
                slope = report.summary['delta_fit_slope']
                if slope is not None:
                    self.assertLessEqual(slope, 1.99)
                self.assertEqual(report.verdict('delta_pinch').status, PASS)

    def test_normalized_convergence(self):
        for key, trace, report in self.fine():
            if trace.records[0].kappa == 0.0:
                continue
            with self.subTest(preset=key):
                normalized = normalize_trace(trace)
                kappa_tilde = normalized.column('kappa_tilde')

                self.assertLess(normalized_decay_rate(normalized), 0.0)
                self.assertTrue(np.all(np.diff(kappa_tilde[len(kappa_tilde) * 2 // 3:]) < 0.0))
                self.assertEqual(report.verdict('normalized_convergence').status, PASS)

    def test_gradient_constants_stable(self):
        for key, runs in self.runs.items():
            coarse = runs[128][1].summary['grad_constants']
            fine = runs[256][1].summary['grad_constants']
            for theta in ('0.1', '0.05'):
                with self.subTest(preset=key, theta=theta):
                    self.assertTrue(math.isfinite(fine[theta]))
                    self.assertAlmostEqual(coarse[theta], fine[theta], delta=0.1 * max(fine[theta], 1e-3))
