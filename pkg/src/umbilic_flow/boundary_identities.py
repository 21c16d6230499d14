"""Normal-derivative identities at an umbilic boundary, in warped-product form

With h = kappa g the boundary satisfies, for t > 0,

    a_s = 2 kappa (2 b - a)      (contracted normal derivative of R_nu_nu)
    b_s = kappa a                (Codazzi: nabla_nu R_ab = R_nu_nu h_ab)
    R_s = 4 kappa b              (normal derivative of the scalar curvature)

where a = R_nu_nu and 2 b = g^{ab} R_ab. The solver imposes only h = kappa g,
so these hold up to discretization error and are monitored as residuals.
"""

from __future__ import annotations
from dataclasses import dataclass
from functools import partial
from typing import Sequence
from .flow_exception import InvalidInputError
from .flow_trace import StudyTable
from .warped_geometry import BoundaryState, CurvatureField, WarpedMetric, curvature

STENCILS = ('second', 'first')

IDENTITY_STUDY_COLUMNS = ('n', 'i1n', 'i2n', 'i3n', 'residual')


@dataclass(frozen=True)
class IdentityResiduals:
    i1: float
    i2: float
    i3: float
    scale: float

    @property
    def i1n(self) -> float:
        return self.i1 / self.scale

    @property
    def i2n(self) -> float:
        return self.i2 / self.scale

    @property
    def i3n(self) -> float:
        return self.i3 / self.scale

    @property
    def max_normalized(self) -> float:
        return max(abs(self.i1n), abs(self.i2n), abs(self.i3n))


def _one_sided(values, metric: WarpedMetric, stencil: str) -> float:
    dx = metric.grid.dx
    if stencil == 'second':
        derivative = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)
    else:
        derivative = (values[-1] - values[-2]) / dx
    return float(derivative / metric.rho[-1])


def boundary_normal_derivatives(metric: WarpedMetric, curv: CurvatureField | None = None,
                                stencil: str = 'second') -> BoundaryState:
    """Boundary values of a, b and their outward arclength derivatives

    Args:
        metric (WarpedMetric): state
        curv (CurvatureField | None): curvature of metric, computed if omitted
        stencil (str): 'second' for the one-sided second-order stencil;
        'first' selects a first-order difference for checking the order fit

    Raises:
        InvalidInputError: if the grid has fewer than 4 nodes or the stencil
        is unknown
    """

    if stencil not in STENCILS:
        raise InvalidInputError('unknown stencil \"{}\"'.format(stencil))
    if metric.grid.n_nodes < 4:
        raise InvalidInputError('boundary derivatives need at least 4 nodes')
    if curv is None:
        curv = curvature(metric)

    a_s = _one_sided(curv.a, metric, stencil)
    b_s = _one_sided(curv.b, metric, stencil)
    r_s = _one_sided(curv.r_scalar, metric, stencil)

    return BoundaryState(
        a_b=float(curv.a[-1]),
        b_b=float(curv.b[-1]),
        kappa=metric.kappa,
        a_s=a_s,
        b_s=b_s,
        r_s=r_s
    )


def identity_residuals(state: BoundaryState) -> IdentityResiduals:
    """Residuals of the three boundary identities and their normalization

    The scale max(|a|, |b|)^{3/2} has the units of a normal derivative of
    curvature, so the normalized residuals compare across the blow-up range.
    """

    kappa = state.kappa
    scale = max(abs(state.a_b), abs(state.b_b)) ** 1.5
    if scale == 0.0:
        scale = 1.0

    return IdentityResiduals(
        i1=state.a_s - 2.0 * kappa * (2.0 * state.b_b - state.a_b),
        i2=state.b_s - kappa * state.a_b,
        i3=state.r_s - 4.0 * kappa * state.b_b,
        scale=scale
    )


def identity_measure(metric: WarpedMetric, stencil: str = 'second') -> tuple[float, float, float, float]:
    """(i1n, i2n, i3n, largest) of a state, one identity study row without n"""

    residuals = identity_residuals(boundary_normal_derivatives(metric, curvature(metric), stencil))
    return (residuals.i1n, residuals.i2n, residuals.i3n, residuals.max_normalized)


def identity_convergence_study(config, n_list: Sequence[int], t_sample: float,
                               stencil: str = 'second', jobs: int = 1) -> StudyTable:
    """Normalized identity residuals at t_sample for each grid size, with fitted order

    Args:
        config (FlowConfig): preset and solver settings; n_cells and t_end are
        overridden per row
        n_list (Sequence[int]): strictly ascending grid sizes
        t_sample (float): sample time, must be positive
        stencil (str): boundary derivative stencil, see boundary_normal_derivatives
        jobs (int): number of worker processes; each grid runs with private state

    Raises:
        InvalidInputError: if n_list is not ascending, t_sample <= 0 or the
        stencil is unknown
        StudyAbortedError: if a run stops before t_sample; the rows that
        completed are attached

    Returns:
        StudyTable: columns n, i1n, i2n, i3n, residual
    """

    # the solver measures these identities on every record
    from .flow_solver import grid_study

    if stencil not in STENCILS:
        raise InvalidInputError('unknown stencil \"{}\"'.format(stencil))

    return grid_study('identity', IDENTITY_STUDY_COLUMNS, config, n_list, t_sample,
                      partial(identity_measure, stencil=stencil), jobs)
