"""Unnormalized Ricci flow d/dt g = -2 Ric(g) with h = kappa g on the boundary, plus its normalized view

In the warped form the flow reads rho_t = -a rho and phi_t = -b phi. Runs
integrate its DeTurck-fixed form (see flow_gauge) with the initial metric as
background, which has the same geometry and a stable center. Time integration
is the classical fourth-order Runge-Kutta scheme with the ghost values
regenerated after every stage.
"""

from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence
from .boundary_identities import boundary_normal_derivatives, identity_residuals
from .flow_exception import InvalidInputError, DegenerateMetricError, StudyAbortedError
from .flow_gauge import GaugeBackground, deturck_rhs
from .flow_trace import NAN, FlowTrace, MonitorRecord, NormalizedRecord, NormalizedTrace, StudyTable, fit_convergence_order
from .pinching_monitors import (EigenTriple, boundary_f_normal_derivative, boundary_fdelta_normal_derivative,
                                default_delta, eps_pinch, f_delta, f_ratio, h_condition_margin, s_deviation)
from .presets import DEFAULT_ORIGIN_TOLERANCE, make_preset
from .warped_geometry import (CurvatureField, WarpedMetric, apply_boundary_conditions, arclength_derivative,
                              boundary_residual, curvature, origin_drift, second_fundamental_form,
                              total_scalar_curvature, volume, with_ghosts)
import logging
import math
import numpy as np

logger = logging.getLogger(__name__)

# RK4 reaches -2.79 on the real axis; the stiffest mode, at the first node, sits near -8.3 / (rho dx)^2
MAX_STABLE_CFL = 0.3
MAX_CFL = 0.5

# dt <= REACTION_CAP / max|R|
REACTION_CAP = 0.1

ERROR_STUDY_COLUMNS = ('n', 'error')

# scale-invariant floor on R Vol^(2/3) below which curvature counts as zero
CURVATURE_FLOOR = 1e-8


@dataclass(frozen=True)
class FlowConfig:
    """Settings of a single flow run

    Attributes:
        preset (str): initial metric, see presets.PRESET_NAMES
        preset_params (Mapping[str, float]): preset parameter overrides
        n_cells (int): grid size
        cfl_factor (float): dt / min (rho dx)^2, in (0, 0.5]
        t_end (float | None): stop time, or None to run until blow-up
        r_stop (float): blow-up threshold on max R
        record_every (int): record cadence in steps
        snapshot_every (int): snapshot cadence in records
        max_steps (int): hard step limit
        origin_tolerance (float): allowed |phi_s(0) - 1| of the preset
        boundary_tolerance (float): allowed |phi_s(1) - kappa phi(1)| after a step
        delta (float | None): f_delta exponent gap, None for min(0.1, 2 eps_star(0)^2)
    """

    preset: str
    preset_params: Mapping[str, float] = field(default_factory=dict)
    n_cells: int = 256
    cfl_factor: float = 0.25
    t_end: float | None = None
    r_stop: float = 1000.0
    record_every: int = 20
    snapshot_every: int = 1
    max_steps: int = 2000000
    origin_tolerance: float = DEFAULT_ORIGIN_TOLERANCE
    boundary_tolerance: float = 1e-10
    delta: float | None = None
    monitor_identities: bool = True
    monitor_pinching: bool = True
    monitor_gradient: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.cfl_factor <= MAX_CFL):
            raise InvalidInputError('cfl factor must lie in (0, {}]'.format(MAX_CFL), value=self.cfl_factor)
        if self.t_end is not None and not (self.t_end > 0.0):
            raise InvalidInputError('t_end must be positive', value=self.t_end)
        if not (self.r_stop > 0.0):
            raise InvalidInputError('r_stop must be positive', value=self.r_stop)
        if self.record_every < 1 or self.snapshot_every < 1 or self.max_steps < 1:
            raise InvalidInputError('record_every, snapshot_every and max_steps must be at least 1')
        if self.delta is not None and not (0.0 <= self.delta <= 0.5):
            raise InvalidInputError('delta must lie in [0, 0.5]', value=self.delta)
        if not (self.origin_tolerance > 0.0 and self.boundary_tolerance > 0.0):
            raise InvalidInputError('tolerances must be positive')


def ricci_rhs(metric: WarpedMetric, curv: CurvatureField | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (rho_t, phi_t) = (-a rho, -b phi) per node"""

    if curv is None:
        curv = curvature(metric)
    return -curv.a * metric.rho, -curv.b * metric.phi


def cfl_dt(metric: WarpedMetric, cfl_factor: float = 0.25, curv: CurvatureField | None = None) -> float:
    """Stable step: cfl min (rho dx)^2, capped by 0.1 / max|R|

    Factors above MAX_STABLE_CFL are clamped to it.
    """

    if curv is None:
        curv = curvature(metric)

    factor = min(cfl_factor, MAX_STABLE_CFL)
    dt = factor * float(np.min((metric.rho * metric.grid.dx) ** 2))

    r_abs = curv.max_abs_curvature
    if r_abs > 0.0:
        dt = min(dt, REACTION_CAP / r_abs)
    return dt


def _stage(metric: WarpedMetric, rates: tuple[np.ndarray, np.ndarray], h: float) -> WarpedMetric:
    rho_t, phi_t = rates
    return apply_boundary_conditions(metric.with_profiles(metric.rho + h * rho_t, metric.phi + h * phi_t, metric.time + h))


def step(metric: WarpedMetric, dt: float, gauge: GaugeBackground | None = None) -> WarpedMetric:
    """Advance one RK4 step of size dt of the DeTurck-fixed flow

    Args:
        metric (WarpedMetric): current state
        dt (float): step size
        gauge (GaugeBackground | None): background of the gauge, None to use
        the metric itself; a run passes the background of its initial metric

    Raises:
        InvalidInputError: if dt is not positive
        DegenerateMetricError: if a stage leaves the space of metrics; the
        input state is attached as last_valid
    """

    if not (dt > 0.0) or not math.isfinite(dt):
        raise InvalidInputError('time step must be positive', value=dt)

    metric = with_ghosts(metric)
    try:
        if gauge is None:
            gauge = GaugeBackground.from_metric(metric)
        k1 = deturck_rhs(metric, gauge)
        k2 = deturck_rhs(_stage(metric, k1, 0.5 * dt), gauge)
        k3 = deturck_rhs(_stage(metric, k2, 0.5 * dt), gauge)
        k4 = deturck_rhs(_stage(metric, k3, dt), gauge)

        rho = metric.rho + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        phi = metric.phi + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        return apply_boundary_conditions(metric.with_profiles(rho, phi, metric.time + dt))
    except DegenerateMetricError as e:
        raise DegenerateMetricError(e.args[0] if e.args else 'metric degenerated', node=e.node, value=e.value,
                                    last_valid=metric,
                                    action_description='step from t = {:.9g}'.format(metric.time)) from e


def _length_scale_sq(metric: WarpedMetric) -> float:
    return volume(metric) ** (2.0 / 3.0)


def pinching_defined(metric: WarpedMetric, curv: CurvatureField) -> bool:
    """Whether R is positive everywhere on the scale of the metric"""

    return curv.r_min * _length_scale_sq(metric) > CURVATURE_FLOOR


def _sectional_spread(metric: WarpedMetric, curv: CurvatureField) -> float:
    sectional = curv.sectional
    mean = float(np.mean(sectional))
    if mean * _length_scale_sq(metric) <= CURVATURE_FLOOR:
        return NAN
    return float((np.max(sectional) - np.min(sectional)) / mean)


def measure_record(metric: WarpedMetric, curv: CurvatureField | None = None, step_index: int = 0, dt: float = 0.0,
                   delta: float = NAN, monitor_identities: bool = True, monitor_pinching: bool = True,
                   monitor_gradient: bool = True) -> MonitorRecord:
    """Evaluate every enabled monitor on one state

    Pinching quantities need R > 0 everywhere (see pinching_defined) and stay
    NaN otherwise. The boundary quantities are taken at the last node.
    """

    metric = with_ghosts(metric)
    if curv is None:
        curv = curvature(metric)

    values = {
        'r_max': curv.r_max,
        'r_min': curv.r_min,
        'ric_min': curv.ric_min,
        'volume': volume(metric),
        'total_scalar': total_scalar_curvature(metric, curv),
        'kappa': metric.kappa,
        'h_realized': second_fundamental_form(metric)[0],
        'spread': _sectional_spread(metric, curv),
        'origin_drift': origin_drift(metric),
        'bc_residual': boundary_residual(metric)
    }

    state = None
    if monitor_identities or monitor_pinching:
        state = boundary_normal_derivatives(metric, curv)

    if monitor_identities:
        residuals = identity_residuals(state)
        values.update(i1n=residuals.i1n, i2n=residuals.i2n, i3n=residuals.i3n)
        if state.b_b > 0.0:
            values['h_margin'] = h_condition_margin(state)

    if monitor_pinching and pinching_defined(metric, curv):
        eps, eps_node = eps_pinch(curv)
        f, f_node = f_ratio(curv)
        values.update(eps_star=eps, eps_node=eps_node, f_max=f, f_node=f_node, s_dev_max=s_deviation(curv))

        triple = EigenTriple.from_boundary(state)
        values['grad_f_boundary'] = boundary_f_normal_derivative(triple, metric.kappa)
        if math.isfinite(delta):
            values['f_delta_max'] = f_delta(curv, delta)[0]
            values['grad_fdelta_boundary'] = boundary_fdelta_normal_derivative(triple, metric.kappa, delta)

    if monitor_gradient:
        values['rm_max'] = float(max(np.max(np.abs(curv.k_rad)), np.max(np.abs(curv.k_sph))))
        values['drm_max'] = float(max(np.max(np.abs(arclength_derivative(metric, curv.k_rad))),
                                      np.max(np.abs(arclength_derivative(metric, curv.k_sph)))))

    return MonitorRecord(step=step_index, t=metric.time, dt=dt, **values)


def _initial_delta(config: FlowConfig, metric: WarpedMetric, curv: CurvatureField) -> float:
    if config.delta is not None:
        return config.delta
    if not pinching_defined(metric, curv):
        return NAN
    return default_delta(eps_pinch(curv)[0])


def run(config: FlowConfig, initial: WarpedMetric | None = None) -> FlowTrace:
    """Integrate from the preset (or the given initial metric) until a stop condition

    Stop reasons: 't_end' once t reaches config.t_end (the last step is
    shortened to land on it), 'blow-up' once max R >= r_stop, 'degenerate'
    when a step fails (the last valid state is kept), 'max-steps'.

    Raises:
        InvalidInputError: if r_stop does not exceed the initial max R
        PresetRejectedError: if the preset fails its screen

    Returns:
        FlowTrace: records at the cadence plus the final state, with a
        snapshot every snapshot_every records and always at the end
    """

    if initial is None:
        metric = make_preset(config.preset, config.preset_params, config.n_cells, config.origin_tolerance)
    else:
        metric = with_ghosts(initial)
    curv = curvature(metric)

    if not (config.r_stop > curv.r_max):
        raise InvalidInputError('r_stop must exceed the initial max R ({:.6g})'.format(curv.r_max), value=config.r_stop)
    if config.cfl_factor > MAX_STABLE_CFL:
        logger.warning('cfl factor %.3g is above the stable limit, using %.3g', config.cfl_factor, MAX_STABLE_CFL)

    delta = _initial_delta(config, metric, curv)
    gauge = GaugeBackground.from_metric(metric)
    trace = FlowTrace(metric.n_cells, delta)

    def record(metric: WarpedMetric, curv: CurvatureField, steps: int, dt: float, final: bool = False) -> None:
        entry = measure_record(metric, curv, steps, dt, delta, config.monitor_identities,
                               config.monitor_pinching, config.monitor_gradient)
        keep = final or len(trace) % config.snapshot_every == 0
        trace.append(entry, metric if keep else None)
        logger.debug('t = %.9g: R_max = %.6g, eps* = %.6g, f = %.6g',
                     entry.t, entry.r_max, entry.eps_star, entry.f_max)

    logger.info('running %s on %d cells (t_end = %s, r_stop = %g)',
                config.preset if initial is None else 'given metric', metric.n_cells, config.t_end, config.r_stop)

    steps = 0
    last_dt = 0.0
    last_recorded = 0
    residual_warned = False
    record(metric, curv, steps, last_dt)

    while True:
        if config.t_end is not None and metric.time >= config.t_end * (1.0 - 1e-14):
            reason = 't_end'
            break
        if curv.r_max >= config.r_stop:
            reason = 'blow-up'
            break
        if steps >= config.max_steps:
            reason = 'max-steps'
            break

        dt = cfl_dt(metric, config.cfl_factor, curv)
        if config.t_end is not None and metric.time + dt >= config.t_end * (1.0 - 1e-14):
            dt = config.t_end - metric.time

        try:
            new_metric = step(metric, dt, gauge)
            new_curv = curvature(new_metric)
        except DegenerateMetricError as e:
            logger.warning('run stopped at t = %.9g: %s', metric.time, e)
            reason = 'degenerate'
            break

        metric, curv = new_metric, new_curv
        steps += 1
        last_dt = dt

        if not residual_warned and boundary_residual(metric) > config.boundary_tolerance:
            logger.warning('boundary residual %.3g exceeds tolerance at t = %.9g',
                           boundary_residual(metric), metric.time)
            residual_warned = True

        if steps % config.record_every == 0:
            record(metric, curv, steps, dt)
            last_recorded = steps

    if last_recorded != steps:
        record(metric, curv, steps, last_dt, final=True)
    elif len(trace) - 1 not in trace.snapshots:
        trace.snapshots[len(trace) - 1] = metric

    trace.stop_reason = reason
    logger.info('stopped (%s) at t = %.9g after %d steps, R_max = %.6g', reason, metric.time, steps, curv.r_max)
    return trace


def normalize_trace(trace: FlowTrace) -> NormalizedTrace:
    """Volume-normalized view g~ = psi g of every record, psi = Vol^(-2/3)

    t~ is the trapezoid integral of psi over t, kappa~ = kappa / sqrt(psi),
    r~ the average scalar curvature at unit volume. The curvature spread is
    scale invariant and carried over.

    Raises:
        InvalidInputError: if the trace is empty
    """

    if len(trace) == 0:
        raise InvalidInputError('trace holds no records')

    t = trace.column('t')
    vol = trace.column('volume')
    psi = vol ** (-2.0 / 3.0)
    t_tilde = np.concatenate(([0.0], np.cumsum(0.5 * (psi[1:] + psi[:-1]) * np.diff(t)))) + psi[0] * t[0]

    normalized = NormalizedTrace()
    for i, r in enumerate(trace.records):
        normalized.records.append(NormalizedRecord(
            t=r.t,
            t_tilde=float(t_tilde[i]),
            psi=float(psi[i]),
            kappa_tilde=r.kappa / math.sqrt(psi[i]),
            r_tilde=r.total_scalar / r.volume / psi[i],
            volume_tilde=float(psi[i] ** 1.5 * vol[i]),
            spread_norm=r.spread
        ))
    return normalized


def normalized_decay_rate(normalized: NormalizedTrace, column: str = 'spread_norm', fraction: float = 1.0 / 3.0) -> float:
    """Least-squares slope of log(column) against t~ over the final fraction of the records

    Returns NaN when fewer than 3 positive values fall in the window.
    """

    t_tilde = normalized.column('t_tilde')
    values = normalized.column(column)
    start = int(len(values) * (1.0 - fraction))
    t_tilde, values = t_tilde[start:], values[start:]

    usable = np.isfinite(values) & (values > 0.0)
    if np.count_nonzero(usable) < 3:
        return NAN
    slope, _ = np.polyfit(t_tilde[usable], np.log(values[usable]), 1)
    return float(slope)


def _study_row(args: tuple) -> tuple[float, ...]:
    name, config, n, t_sample, measure = args
    trace = run(replace(config, n_cells=n, t_end=t_sample, record_every=config.max_steps))
    if trace.stop_reason != 't_end':
        raise StudyAbortedError('run stopped with reason {} before t = {}'.format(trace.stop_reason, t_sample),
                                action_description='{} study at n = {}'.format(name, n))

    values = tuple(measure(trace.final_metric))
    logger.info('%s study n = %d: %.3e', name, n, values[-1])
    return (n, *values)


def grid_study(name: str, columns: Sequence[str], config: FlowConfig, n_list: Sequence[int], t_sample: float,
               measure: Callable[[WarpedMetric], Sequence[float]], jobs: int = 1) -> StudyTable:
    """Run the config to t_sample on each grid size and tabulate a measurement of the final state

    The order is fitted to the last column.

    Args:
        name (str): table name
        columns (Sequence[str]): 'n' followed by one name per measured value
        config (FlowConfig): preset and solver settings; n_cells and t_end are
        overridden per row
        n_list (Sequence[int]): strictly ascending grid sizes
        t_sample (float): sample time, must be positive
        measure (Callable): maps the final metric to the row values; must be
        picklable when jobs > 1
        jobs (int): number of worker processes; each grid runs with private state

    Raises:
        InvalidInputError: if n_list is not ascending or t_sample <= 0
        StudyAbortedError: if a run stops before t_sample; the rows that
        completed are attached
    """

    sizes = list(n_list)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidInputError('grid sizes must be strictly ascending')
    if not t_sample > 0.0:
        raise InvalidInputError('sample time must be positive', value=t_sample)

    table = StudyTable(name, tuple(columns))
    tasks = [(name, config, n, t_sample, measure) for n in sizes]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for row in pool.map(_study_row, tasks):
                    table.rows.append(row)
        else:
            for task in tasks:
                table.rows.append(_study_row(task))
    except StudyAbortedError as e:
        e.partial = table
        raise

    table.order = fit_convergence_order(table.values('n'), table.values(columns[-1]))
    return table


def hemisphere_error(metric: WarpedMetric) -> tuple[float]:
    """max |R (1 - 4t) / 6 - 1| against the shrinking hemisphere"""

    curv = curvature(metric)
    return (float(np.max(np.abs(curv.r_scalar * (1.0 - 4.0 * metric.time) / 6.0 - 1.0))),)


def solution_error_study(config: FlowConfig, n_list: Sequence[int], t_sample: float = 0.1, jobs: int = 1) -> StudyTable:
    """Error against the shrinking hemisphere R = 6 / (1 - 4t) for each grid size

    Raises:
        InvalidInputError: unless the config is a round cap with kappa = 0, or
        if n_list is not ascending or t_sample is outside (0, 1/4)
        StudyAbortedError: if a run stops early; completed rows are attached
    """

    if config.preset != 'round_cap':
        raise InvalidInputError('the exact solution is only known for round_cap')
    if make_preset(config.preset, config.preset_params, n_cells=16).kappa != 0.0:
        raise InvalidInputError('the exact solution needs a totally geodesic boundary (s_max = pi/2)')
    if not (0.0 < t_sample < 0.25):
        raise InvalidInputError('sample time must lie in (0, 1/4)', value=t_sample)

    return grid_study('error', ERROR_STUDY_COLUMNS, config, n_list, t_sample, hemisphere_error, jobs)
