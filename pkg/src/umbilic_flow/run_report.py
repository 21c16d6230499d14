"""Verdicts over a finished run

Every verdict carries the measured value, the tolerance it was held to and the
record range it was computed from. Properties that follow from the theory of
the flow are labelled PROPERTY, numerical expectations REGRESSION; a report
never claims more than the measurement.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from importlib import metadata
from typing import Any
from .flow_solver import normalize_trace, normalized_decay_rate
from .flow_trace import FlowTrace, finite_or_none
from .harness_config import HarnessConfig, serialize_config
from .pinching_monitors import (PinchingReport, blow_up_time_bound, pinching_preservation_claimed,
                                summarize_pinching)
from .presets import PRESETS
import logging
import math
import numpy as np

logger = logging.getLogger(__name__)

PROPERTY = 'property'
REGRESSION = 'regression target'

PASS = 'pass'
FAIL = 'fail'
INSUFFICIENT = 'insufficient range'
NOT_APPLICABLE = 'not applicable'

# stop reason of a run whose preset or thresholds were refused
REJECTED = 'rejected'

# hemisphere: R = 6 / (1 - 4t), T = 1/4
HEMISPHERE_T = 0.25
EXACT_WINDOW = 0.2
EXACT_TOLERANCE = 0.01
BLOW_UP_TOLERANCE = 0.01

STATIONARY_TOLERANCE = 1e-8
POSITIVITY_TOLERANCE = 1e-3
PINCHING_TOLERANCE = 1e-3
F_SLACK = 0.02
F_CEILING = 0.9
CONSISTENCY_TOLERANCE = 1e-12
CODAZZI_TOLERANCE = 1e-6
DELTA_PINCH_MARGIN = 0.01
SELF_SIMILAR_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Verdict:
    name: str
    kind: str
    status: str
    measured: float | None = None
    tolerance: float | None = None
    records: tuple[int, int] | None = None
    detail: str = ''

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'kind': self.kind,
            'status': self.status,
            'measured': None if self.measured is None else finite_or_none(self.measured),
            'tolerance': self.tolerance,
            'records': list(self.records) if self.records is not None else None,
            'detail': self.detail
        }


@dataclass
class RunReport:
    stop_reason: str | None
    verdicts: list[Verdict] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.status == FAIL]

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            'stop_reason': self.stop_reason,
            'verdicts': [v.to_dict() for v in self.verdicts],
            'summary': self.summary,
            'provenance': self.provenance
        }


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return 'unknown'


def _check(name: str, kind: str, ok: bool, measured: float, tolerance: float | None,
           records: tuple[int, int], detail: str = '') -> Verdict:
    return Verdict(name, kind, PASS if ok else FAIL, float(measured), tolerance, records, detail)


def _skip(name: str, kind: str, detail: str) -> Verdict:
    return Verdict(name, kind, NOT_APPLICABLE, detail=detail)


def _is_hemisphere(config: HarnessConfig, trace: FlowTrace) -> bool:
    return config.preset == 'round_cap' and trace.records[0].kappa == 0.0


def _exact_solution(config: HarnessConfig, trace: FlowTrace) -> list[Verdict]:
    if not _is_hemisphere(config, trace):
        detail = 'needs round_cap with a totally geodesic boundary'
        return [_skip('exact_solution', REGRESSION, detail), _skip('blow_up_time', REGRESSION, detail)]

    t = trace.column('t')
    r_max = trace.column('r_max')
    window = np.flatnonzero(t <= EXACT_WINDOW)
    error = float(np.max(np.abs(r_max[window] * (1.0 - 4.0 * t[window]) / 6.0 - 1.0)))
    verdicts = [_check('exact_solution', REGRESSION, error <= EXACT_TOLERANCE, error, EXACT_TOLERANCE,
                       (int(window[0]), int(window[-1])), 'max relative deviation of R_max from 6 / (1 - 4t)')]

    if trace.stop_reason != 'blow-up':
        verdicts.append(_skip('blow_up_time', REGRESSION, 'run stopped with reason {}'.format(trace.stop_reason)))
    else:
        last = len(trace) - 1
        deviation = abs(t[-1] / HEMISPHERE_T - 1.0)
        verdicts.append(_check('blow_up_time', REGRESSION, deviation <= BLOW_UP_TOLERANCE, deviation,
                               BLOW_UP_TOLERANCE, (last, last), 'stop time {:.6g} against T = 1/4'.format(t[-1])))
    return verdicts


def _stationary(config: HarnessConfig, trace: FlowTrace) -> Verdict:
    if config.preset != 'flat_cap':
        return _skip('stationary', REGRESSION, 'needs flat_cap')

    curvature = max(float(np.max(np.abs(trace.column('r_max')))), float(np.max(np.abs(trace.column('r_min')))))
    return _check('stationary', REGRESSION, curvature <= STATIONARY_TOLERANCE, curvature, STATIONARY_TOLERANCE,
                  (0, len(trace) - 1), 'max |R| over the run')


def _positivity(config: HarnessConfig, trace: FlowTrace) -> list[Verdict]:
    if not PRESETS[config.preset].strict_positivity or not trace.records[0].ric_min > 0.0:
        detail = 'initial Ricci curvature is not positive'
        return [_skip('positivity', PROPERTY, detail), _skip('volume_monotone', PROPERTY, detail)]

    ratio = trace.column('ric_min') / trace.column('r_max')
    worst = int(np.argmin(ratio))
    verdicts = [_check('positivity', PROPERTY, ratio[worst] > -POSITIVITY_TOLERANCE, ratio[worst],
                       -POSITIVITY_TOLERANCE, (0, len(trace) - 1),
                       'min over the run of min Ric / R_max, worst at record {}'.format(worst))]

    if len(trace) < 2:
        verdicts.append(_skip('volume_monotone', PROPERTY, 'fewer than 2 records'))
    else:
        steps = np.diff(trace.column('volume'))
        largest = float(np.max(steps))
        verdicts.append(_check('volume_monotone', PROPERTY, largest < 0.0, largest, 0.0, (0, len(trace) - 1),
                               'largest volume change between records'))
    return verdicts


def _pinching(config: HarnessConfig, trace: FlowTrace, eps0: float, summary: PinchingReport) -> list[Verdict]:
    records = (0, len(trace) - 1)
    names = ('eps_pinching', 'f_bound', 'delta_pinch', 'h_condition_cross_check')
    if not config.monitor_pinching or not math.isfinite(eps0):
        detail = 'pinching is undefined or not monitored'
        return [_skip(name, PROPERTY, detail) for name in names]

    verdicts = []

    drop = summary.eps_star - eps0
    claimed = pinching_preservation_claimed(eps0)
    verdicts.append(_check('eps_pinching', PROPERTY if claimed else REGRESSION, drop >= -PINCHING_TOLERANCE, drop,
                           -PINCHING_TOLERANCE, records,
                           'min eps_star - eps_star(0), eps_star(0) = {:.6g}{}'.format(
                               eps0, '' if claimed else ' (not below 1/4, preservation is not claimed)')))

    f0 = trace.records[0].f_max
    bound = max(f0 + F_SLACK, F_CEILING)
    verdicts.append(_check('f_bound', REGRESSION, summary.f_max <= bound, summary.f_max, bound, records,
                           'max f over the run, node {}'.format(summary.f_node)))

    fit = summary.delta_fit
    if fit is None:
        verdicts.append(Verdict('delta_pinch', PROPERTY, INSUFFICIENT, detail='R_max grows by less than 100x or too few usable records'))
    elif fit.identically_zero:
        verdicts.append(Verdict('delta_pinch', PROPERTY, PASS, 0.0, None, fit.window, 'identically zero'))
    else:
        low, high = fit.confidence_interval
        verdicts.append(_check('delta_pinch', PROPERTY, fit.slope <= 2.0 - DELTA_PINCH_MARGIN, fit.slope,
                               2.0 - DELTA_PINCH_MARGIN, fit.window,
                               'slope of log(S - R^2/3) against log R_max, interval [{:.4f}, {:.4f}]'.format(low, high)))

    margin = summary.h_condition_margin
    if not math.isfinite(margin) or eps0 > margin / 2.0:
        verdicts.append(_skip('h_condition_cross_check', PROPERTY,
                              'eps_star(0) exceeds half the minimum H-condition margin'))
    else:
        verdicts.append(_check('h_condition_cross_check', PROPERTY, drop >= -PINCHING_TOLERANCE, drop,
                               -PINCHING_TOLERANCE, records,
                               'min H-condition margin {:.6g} >= 2 eps_star(0)'.format(margin)))
    return verdicts


def _identities(config: HarnessConfig, trace: FlowTrace) -> list[Verdict]:
    if not config.monitor_identities:
        return [_skip('identity_consistency', REGRESSION, 'identities are not monitored')]

    records = (0, len(trace) - 1)
    i1, i2, i3 = trace.column('i1n'), trace.column('i2n'), trace.column('i3n')
    # near-flat states normalize round-off by a vanishing curvature scale
    magnitude = np.maximum(1.0, np.abs(i1) + 2.0 * np.abs(i2) + np.abs(i3))
    mismatch = float(np.max(np.abs(i3 - (i1 + 2.0 * i2)) / magnitude))
    verdicts = [_check('identity_consistency', REGRESSION, mismatch <= CONSISTENCY_TOLERANCE, mismatch,
                       CONSISTENCY_TOLERANCE, records, 'max |i3 - (i1 + 2 i2)|, relative once the residuals exceed 1')]

    if trace.records[0].kappa == 0.0:
        codazzi = float(np.max(np.abs(i2)))
        verdicts.append(_check('totally_geodesic_codazzi', REGRESSION, codazzi <= CODAZZI_TOLERANCE, codazzi,
                               CODAZZI_TOLERANCE, records, 'max |i2| with kappa = 0'))
    return verdicts


def _compatibility(config: HarnessConfig, trace: FlowTrace) -> list[Verdict]:
    records = (0, len(trace) - 1)
    residual = float(np.max(trace.column('bc_residual')))
    below = np.flatnonzero(trace.column('r_max') < config.r_stop)
    drift = float(np.max(trace.column('origin_drift')[below])) if below.size else 0.0
    return [
        _check('boundary_residual', REGRESSION, residual <= config.boundary_tolerance, residual,
               config.boundary_tolerance, records, 'max |phi_s(1) - kappa phi(1)|'),
        _check('origin_drift', REGRESSION, drift <= config.origin_tolerance, drift, config.origin_tolerance,
               records, 'max |phi_s(0) - 1| below r_stop')
    ]


def normalized_convergence(config: HarnessConfig, trace: FlowTrace) -> Verdict:
    """Verdict on the volume-normalized flow

    The round hemisphere is self-similar, so its normalized spread must stay
    put once the grid profile has settled: the change over the final third of
    the records is held to SELF_SIMILAR_TOLERANCE. Any other run needs a
    negative decay rate of the spread over the final third and, for kappa > 0,
    kappa~ decreasing there.
    """

    normalized = normalize_trace(trace)
    start = len(trace) * 2 // 3
    records = (start, len(trace) - 1)

    if _is_hemisphere(config, trace):
        tail = normalized.column('spread_norm')[start:]
        if tail.size < 2 or not np.all(np.isfinite(tail)):
            return _skip('normalized_convergence', REGRESSION, 'curvature spread undefined')
        change = float(np.max(tail) - np.min(tail))
        return _check('normalized_convergence', REGRESSION, change <= SELF_SIMILAR_TOLERANCE, change,
                      SELF_SIMILAR_TOLERANCE, records, 'change of the normalized spread over the final third')

    rate = normalized_decay_rate(normalized)
    if not math.isfinite(rate):
        return Verdict('normalized_convergence', PROPERTY, INSUFFICIENT, detail='fewer than 3 usable records in the final third')

    detail = 'slope of log spread against t~ over the final third'
    kappa_decreasing = True
    if trace.records[0].kappa > 0.0:
        kappa_tilde = normalized.column('kappa_tilde')[start:]
        kappa_decreasing = bool(np.all(np.diff(kappa_tilde) < 0.0))
        detail += '; kappa~ decreasing: {}'.format(kappa_decreasing)
    return _check('normalized_convergence', PROPERTY, rate < 0.0 and kappa_decreasing, rate, 0.0, records, detail)


def _gradient(config: HarnessConfig, summary: PinchingReport, records: tuple[int, int]) -> Verdict:
    if not config.monitor_gradient:
        return _skip('gradient_constants', REGRESSION, 'gradient is not monitored')

    constants = list(summary.grad_constants.values())
    largest = max(constants) if constants else 0.0
    return _check('gradient_constants', REGRESSION, all(math.isfinite(c) for c in constants), largest, None, records,
                  'largest C(theta) over thetas {}'.format(', '.join(str(t) for t in summary.grad_constants)))


def _blow_up_bound(config: HarnessConfig, trace: FlowTrace, eps: float) -> Verdict:
    r_min0 = trace.records[0].r_min
    if trace.stop_reason != 'blow-up' or not (math.isfinite(eps) and eps > 0.0 and r_min0 > 0.0):
        return _skip('blow_up_bound', PROPERTY, 'needs a pinched run that reached r_stop')

    bound = blow_up_time_bound(eps, r_min0)
    last = len(trace) - 1
    t_stop = trace.records[-1].t
    return _check('blow_up_bound', PROPERTY, t_stop <= bound, t_stop, bound, (last, last),
                  'stop time against 1 / (eps^2 R_min(0))')


def _provenance(config: HarnessConfig, n_cells: int, records: int) -> dict[str, Any]:
    return {
        'config': serialize_config(config),
        'n_cells': n_cells,
        'records': records,
        'umbilic_flow': _version('umbilic-flow'),
        'numpy': np.__version__
    }


def rejected_report(config: HarnessConfig, error: Exception) -> RunReport:
    """Report of a run that could not start: no verdicts, the error in the summary"""

    report = RunReport(REJECTED)
    report.summary = {'error': str(error), 'error_type': type(error).__name__}
    report.provenance = _provenance(config, config.n_cells, 0)
    return report


def build_report(config: HarnessConfig, trace: FlowTrace) -> RunReport:
    """Evaluate every verdict on a trace

    Args:
        config (HarnessConfig): configuration the trace was produced with
        trace (FlowTrace): finished run with at least one record

    Returns:
        RunReport: verdicts, a summary of the monitors and the provenance block
    """

    report = RunReport(trace.stop_reason)
    report.provenance = _provenance(config, trace.n_cells, len(trace))
    if len(trace) == 0:
        logger.warning('trace holds no records, report has no verdicts')
        return report

    eps0 = trace.records[0].eps_star
    eps = config.epsilon if config.epsilon is not None else eps0
    summary = summarize_pinching(trace, config.thetas)
    records = (0, len(trace) - 1)

    report.verdicts.extend(_exact_solution(config, trace))
    report.verdicts.append(_stationary(config, trace))
    report.verdicts.extend(_positivity(config, trace))
    report.verdicts.extend(_pinching(config, trace, eps0, summary))
    report.verdicts.extend(_identities(config, trace))
    report.verdicts.extend(_compatibility(config, trace))
    report.verdicts.append(normalized_convergence(config, trace))
    report.verdicts.append(_gradient(config, summary, records))
    report.verdicts.append(_blow_up_bound(config, trace, eps))

    boundary_max = trace.column('f_node') == trace.n_cells
    grad_f = trace.column('grad_f_boundary')[boundary_max]
    report.summary = {
        'final_time': trace.records[-1].t,
        'final_r_max': trace.records[-1].r_max,
        'eps_star0': finite_or_none(eps0),
        'eps_star_min': finite_or_none(summary.eps_star),
        'f_max': finite_or_none(summary.f_max),
        'delta': finite_or_none(summary.delta),
        'f_delta_max': finite_or_none(summary.f_delta_max),
        'h_condition_margin_min': finite_or_none(summary.h_condition_margin),
        'delta_fit_slope': finite_or_none(summary.delta_fit.slope) if summary.delta_fit else None,
        'grad_constants': {repr(k): v for k, v in summary.grad_constants.items()},
        'grad_constants_classical': {repr(k): v for k, v in summary.grad_constants_classical.items()},
        'max_grad_f_at_boundary_max': float(np.max(grad_f)) if grad_f.size else None
    }

    for v in report.verdicts:
        logger.debug('%s: %s (%s)', v.name, v.status, v.detail)
    if report.failed:
        logger.warning('%d verdict(s) failed: %s', len(report.failed), ', '.join(v.name for v in report.failed))
    return report
