"""Initial metrics with Ric > 0, kappa >= 0 and h = kappa g realized at t = 0"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Mapping
from .flow_exception import InvalidInputError, PresetRejectedError
from .warped_geometry import RadialGrid, WarpedMetric, apply_boundary_conditions, curvature, origin_drift
import logging
import math
import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_ORIGIN_TOLERANCE = 1e-3

# cot(pi/2) does not round to exactly 0
KAPPA_ROUNDING = 1e-12


@dataclass(frozen=True)
class PresetSpec:
    builder: Callable[..., WarpedMetric]
    defaults: Mapping[str, float]
    description: str
    strict_positivity: bool = True


def _check_s_max(s_max: float) -> None:
    if not (0.0 < s_max < math.pi):
        raise InvalidInputError('s_max must lie in (0, pi)', value=s_max)


def _realized_kappa(kappa: float, s_max: float) -> float:
    if abs(kappa) < KAPPA_ROUNDING:
        return 0.0
    if kappa < 0.0:
        raise PresetRejectedError('boundary would be concave (kappa < 0); s_max must not exceed pi/2',
                                  value=kappa, action_description='preset construction')
    return kappa


def _round_cap(grid: RadialGrid, s_max: float) -> WarpedMetric:
    _check_s_max(s_max)
    s = s_max * grid.nodes
    kappa = _realized_kappa(math.cos(s_max) / math.sin(s_max), s_max)
    return WarpedMetric(grid, np.full(grid.n_nodes, s_max), np.sin(s), kappa)


def _perturbed_cap(grid: RadialGrid, s_max: float, amp: float, mode: float) -> WarpedMetric:
    _check_s_max(s_max)
    if int(mode) != mode or mode < 1:
        raise InvalidInputError('mode must be a positive integer', value=mode)
    if not math.isfinite(amp):
        raise InvalidInputError('amp must be finite', value=amp)

    s = s_max * grid.nodes
    # bump sin^2(m s / 2) is even in s and vanishes to second order at the center
    bump = np.sin(0.5 * mode * s) ** 2
    phi = np.sin(s) * (1.0 + amp * bump)

    bump_end = math.sin(0.5 * mode * s_max) ** 2
    dbump_end = 0.5 * mode * math.sin(mode * s_max)
    phi_end = math.sin(s_max) * (1.0 + amp * bump_end)
    dphi_end = math.cos(s_max) * (1.0 + amp * bump_end) + math.sin(s_max) * amp * dbump_end
    kappa = _realized_kappa(dphi_end / phi_end, s_max)

    return WarpedMetric(grid, np.full(grid.n_nodes, s_max), phi, kappa)


def _flattened_cap(grid: RadialGrid, s_max: float, beta: float) -> WarpedMetric:
    _check_s_max(s_max)
    if not (beta >= 0.0) or not math.isfinite(beta):
        raise InvalidInputError('beta must be nonnegative', value=beta)

    y = s_max * grid.nodes
    stretch = 1.0 + beta * np.sin(y) ** 2
    stretch_end = 1.0 + beta * math.sin(s_max) ** 2
    kappa = _realized_kappa(math.cos(s_max) / math.sin(s_max) / stretch_end, s_max)

    return WarpedMetric(grid, s_max * stretch, np.sin(y), kappa)


def _flat_cap(grid: RadialGrid, s_max: float) -> WarpedMetric:
    if not (s_max > 0.0) or not math.isfinite(s_max):
        raise InvalidInputError('s_max must be positive', value=s_max)

    return WarpedMetric(grid, np.full(grid.n_nodes, s_max), s_max * grid.nodes, 1.0 / s_max)


PRESETS: dict[str, PresetSpec] = {
    'round_cap': PresetSpec(
        builder=_round_cap,
        defaults={'s_max': math.pi / 2},
        description='geodesic ball of radius s_max in the unit 3-sphere; kappa = cot(s_max)'
    ),
    'perturbed_cap': PresetSpec(
        builder=_perturbed_cap,
        defaults={'s_max': math.pi / 2, 'amp': 0.05, 'mode': 2},
        description='phi = sin(s) (1 + amp sin^2(mode s / 2)); kappa read off the profile'
    ),
    'flattened_cap': PresetSpec(
        builder=_flattened_cap,
        defaults={'s_max': math.pi / 2, 'beta': 0.3},
        description='round profile with the radial direction stretched by 1 + beta sin^2; a != b inside'
    ),
    'flat_cap': PresetSpec(
        builder=_flat_cap,
        defaults={'s_max': 1.0},
        description='Euclidean ball of radius s_max; Ricci-flat and stationary',
        strict_positivity=False
    )
}

PRESET_NAMES = tuple(PRESETS)


def preset_parameters(name: str, params: Mapping[str, float] | None = None) -> dict[str, float]:
    """Merge params over the preset defaults

    Raises:
        InvalidInputError: if the preset or a parameter name is unknown
    """

    if name not in PRESETS:
        raise InvalidInputError('unknown preset \"{}\", expected one of {}'.format(name, ', '.join(PRESET_NAMES)))

    spec = PRESETS[name]
    merged = dict(spec.defaults)
    for key, value in (params or {}).items():
        if key not in spec.defaults:
            raise InvalidInputError('preset {} takes no parameter \"{}\"'.format(name, key))
        merged[key] = float(value)

    return merged


def make_preset(name: str, params: Mapping[str, float] | None = None, n_cells: int = 256,
                origin_tolerance: float = DEFAULT_ORIGIN_TOLERANCE) -> WarpedMetric:
    """Build an initial metric and screen it

    Args:
        name (str): one of PRESET_NAMES
        params (Mapping[str, float] | None): preset parameters; missing ones
        take the preset defaults
        n_cells (int): grid size
        origin_tolerance (float): allowed |phi_s(0) - 1|

    Raises:
        InvalidInputError: if the name, a parameter or the grid is invalid
        PresetRejectedError: if Ric > 0 fails at some node (Ric >= 0 for
        flat_cap), kappa < 0, or the center is not smooth

    Returns:
        WarpedMetric: screened metric with ghosts applied
    """

    merged = preset_parameters(name, params)
    spec = PRESETS[name]
    metric = apply_boundary_conditions(spec.builder(RadialGrid(n_cells), **merged))

    drift = origin_drift(metric)
    if drift > origin_tolerance:
        raise PresetRejectedError('profile is not smooth at the center', node=0, value=drift,
                                  action_description='preset {}'.format(name))

    curv = curvature(metric)
    ric = np.minimum(curv.a, curv.b)
    threshold = 0.0 if spec.strict_positivity else -1e-8 * max(1.0, curv.max_abs_curvature)
    offending = np.flatnonzero(ric <= threshold) if spec.strict_positivity else np.flatnonzero(ric < threshold)
    if offending.size:
        node = int(offending[0])
        raise PresetRejectedError('Ricci curvature is not positive ({} node(s) fail)'.format(offending.size),
                                  node=node, value=float(ric[node]), action_description='preset {}'.format(name))

    logger.debug('preset %s %s: kappa = %.6g, min Ric = %.6g', name, merged, metric.kappa, float(np.min(ric)))
    return metric
