import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.umbilic_flow.flow_solver import run
from src.umbilic_flow.flow_trace import FlowTrace, MonitorRecord
from src.umbilic_flow.harness_config import HarnessConfig
from src.umbilic_flow.presets import make_preset
from src.umbilic_flow.run_report import (PROPERTY, REGRESSION, PASS, FAIL, INSUFFICIENT, NOT_APPLICABLE,
                                         SELF_SIMILAR_TOLERANCE, Verdict, build_report, normalized_convergence)
from src.umbilic_flow.trace_io import load_run, persisted_view, save_run
from src.umbilic_flow.warped_geometry import curvature

def report_for(config: HarnessConfig):
    trace = run(config.flow_config())
    return build_report(config, persisted_view(config, trace))

class TestHemisphereReport(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.config = HarnessConfig(preset='round_cap', n_cells=32, emit_plots=False)
        cls.trace = run(cls.config.flow_config())
        cls.report = build_report(cls.config, persisted_view(cls.config, cls.trace))

    def test_stop_reason(self):
        self.assertEqual(self.report.stop_reason, 'blow-up')

    def test_exact_solution(self):
        verdict = self.report.verdict('exact_solution')

        self.assertEqual(verdict.status, PASS)
        self.assertEqual(verdict.kind, REGRESSION)
        self.assertEqual(verdict.tolerance, 0.01)
        self.assertLess(verdict.measured, 0.01)

    def test_blow_up_time(self):
        self.assertEqual(self.report.verdict('blow_up_time').status, PASS)

    def test_positivity(self):
        self.assertEqual(self.report.verdict('positivity').status, PASS)
        self.assertEqual(self.report.verdict('positivity').kind, PROPERTY)
        self.assertEqual(self.report.verdict('volume_monotone').status, PASS)

    def test_not_applicable(self):
        self.assertEqual(self.report.verdict('stationary').status, NOT_APPLICABLE)

    def test_compatibility(self):
        self.assertEqual(self.report.verdict('boundary_residual').status, PASS)
        self.assertEqual(self.report.verdict('origin_drift').status, PASS)
        self.assertEqual(self.report.verdict('identity_consistency').status, PASS)

    def test_blow_up_bound(self):
        verdict = self.report.verdict('blow_up_bound')

        self.assertEqual(verdict.status, PASS)
        self.assertAlmostEqual(verdict.tolerance, 1.5, delta=0.01)

    def test_eps_pinching_not_claimed(self):
        # eps_star(0) = 1/3 is above 1/4, so preservation is only a regression target
        self.assertEqual(self.report.verdict('eps_pinching').kind, REGRESSION)

    def test_gradient_constants(self):
        self.assertEqual(self.report.verdict('gradient_constants').status, PASS)
        self.assertSetEqual(set(self.report.summary['grad_constants']), {'0.1', '0.05'})

    def test_summary_and_provenance(self):
        self.assertAlmostEqual(self.report.summary['eps_star0'], 1.0 / 3.0, delta=1e-3)
        self.assertEqual(self.report.provenance['n_cells'], 32)
        self.assertEqual(self.report.provenance['records'], len(self.trace))
        self.assertIn('preset = round_cap', self.report.provenance['config'])

    def test_loaded_report_is_identical(self):
        with tempfile.TemporaryDirectory() as tmp:
            save_run(Path(tmp), self.config, self.trace)
            config, loaded = load_run(Path(tmp))

        first = json.dumps(self.report.to_dict(), sort_keys=True)
        second = json.dumps(build_report(config, loaded).to_dict(), sort_keys=True)
        self.assertEqual(first, second)

class TestFlatReport(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = report_for(HarnessConfig(preset='flat_cap', n_cells=16, t_end=0.01, emit_plots=False))

    def test_stationary(self):
        self.assertEqual(self.report.verdict('stationary').status, PASS)

    def test_pinching_not_applicable(self):
        for name in ('positivity', 'eps_pinching', 'f_bound', 'delta_pinch', 'blow_up_bound', 'exact_solution'):
            self.assertEqual(self.report.verdict(name).status, NOT_APPLICABLE, name)

    def test_identities_consistent(self):
        self.assertEqual(self.report.verdict('identity_consistency').status, PASS)

    def test_nothing_failed(self):
        self.assertListEqual(self.report.failed, [])

class TestShortRunReport(unittest.TestCase):

    def test_insufficient_range(self):
        report = report_for(HarnessConfig(preset='round_cap', s_max=math.pi / 3, n_cells=16, t_end=0.01,
                                          emit_plots=False))

        self.assertEqual(report.stop_reason, 't_end')
        self.assertEqual(report.verdict('delta_pinch').status, INSUFFICIENT)
        self.assertEqual(report.verdict('normalized_convergence').status, INSUFFICIENT)
        self.assertEqual(report.verdict('blow_up_bound').status, NOT_APPLICABLE)

    def test_empty_trace(self):
        with self.assertLogs('src.umbilic_flow.run_report', 'WARNING'):
            report = build_report(HarnessConfig(preset='round_cap'), FlowTrace(16))

        self.assertListEqual(report.verdicts, [])

    def test_unknown_verdict(self):
        report = build_report(HarnessConfig(preset='round_cap'), FlowTrace(16))

        with self.assertRaises(KeyError):
            report.verdict('exact_solution')

class TestVerdict(unittest.TestCase):

    def test_to_dict(self):
        verdict = Verdict('f_bound', REGRESSION, PASS, float('nan'), 0.9, (0, 3), 'max f')

        self.assertDictEqual(verdict.to_dict(), {
            'name': 'f_bound',
            'kind': REGRESSION,
            'status': PASS,
            'measured': None,
            'tolerance': 0.9,
            'records': [0, 3],
            'detail': 'max f'
        })

def shrinking_trace(spread, kappa: float = 0.0) -> FlowTrace:
    trace = FlowTrace(256)
    for i, s in enumerate(spread):
        t = 0.24 * i / (len(spread) - 1)
        scale = 1.0 - 4.0 * t
        trace.append(MonitorRecord(step=i, t=t, volume=math.pi ** 2 * scale ** 1.5,
                                   total_scalar=6.0 * math.pi ** 2 * math.sqrt(scale), kappa=kappa, spread=float(s)))
    return trace

class TestNormalizedConvergence(unittest.TestCase):

    def setUp(self):
        self.hemisphere = HarnessConfig(preset='round_cap')

    def test_grid_spread_exceeds_tolerance(self):
        # k_rad sits (pi / 512)^2 / 12 below k_sph(1) = 1 on 256 cells
        curv = curvature(make_preset('round_cap', n_cells=256))
        spread = (np.max(curv.sectional) - np.min(curv.sectional)) / np.mean(curv.sectional)

        self.assertGreater(spread, 2.0 * SELF_SIMILAR_TOLERANCE)

    def test_settled_hemisphere(self):
        i = np.arange(30)
        verdict = normalized_convergence(self.hemisphere, shrinking_trace(3e-6 + 5e-6 * np.exp(-i / 3.0)))

        self.assertEqual(verdict.status, PASS)
        self.assertEqual(verdict.kind, REGRESSION)
        self.assertEqual(verdict.tolerance, 1e-6)
        self.assertTupleEqual(verdict.records, (20, 29))
        self.assertLess(verdict.measured, 1e-8)

    def test_drifting_hemisphere(self):
        verdict = normalized_convergence(self.hemisphere, shrinking_trace(3e-6 + 3e-7 * np.arange(30)))

        self.assertEqual(verdict.status, FAIL)
        self.assertAlmostEqual(verdict.measured, 2.7e-6, delta=1e-12)

    def test_decaying_totally_geodesic_run(self):
        config = HarnessConfig(preset='perturbed_cap')
        verdict = normalized_convergence(config, shrinking_trace(0.1 * np.exp(-np.arange(30) / 5.0)))

        self.assertEqual(verdict.status, PASS)
        self.assertEqual(verdict.kind, PROPERTY)
        self.assertLess(verdict.measured, 0.0)
        self.assertNotIn('kappa', verdict.detail)

    def test_kappa_must_decrease(self):
        # kappa~ = kappa Vol^(1/3) shrinks with the volume
        config = HarnessConfig(preset='round_cap', s_max=math.pi / 3)
        verdict = normalized_convergence(config, shrinking_trace(0.1 * np.exp(-np.arange(30) / 5.0), kappa=0.5))

        self.assertEqual(verdict.status, PASS)
        self.assertIn('kappa~ decreasing: True', verdict.detail)
