"""Pinching functionals of the Ricci eigenvalues, boundary sign formulas and the gradient functional

In the warped-product reduction the Ricci eigenvalues at a node are (a, b, b).
At the boundary the normal one is nu = a and the tangential ones lam = mu = b.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Sequence
from .flow_exception import InvalidInputError, PinchingUndefinedError, FitWindowError
from .flow_trace import FlowTrace
from .warped_geometry import BoundaryState, CurvatureField
import logging
import math
import numpy as np

logger = logging.getLogger(__name__)

# the rotationally symmetric corollary preserves R_ij >= eps R g_ij only below this
EPS_PRESERVED_BELOW = 0.25

DEFAULT_DELTA_CAP = 0.1
MAX_DELTA = 0.5

# R_max growth the delta-pinch fit needs, and the window it fits over
FIT_DYNAMIC_RANGE = 100.0
FIT_DECADES = 2.0

# S - R^2/3 below this fraction of R^2 counts as exactly round
ROUND_TOLERANCE = 1e-6

NAN_SLOPE = float('nan')


@dataclass(frozen=True)
class EigenTriple:
    """Ricci eigenvalues at a boundary point: mu <= lam tangential, nu normal"""

    lam: float
    mu: float
    nu: float

    @classmethod
    def from_boundary(cls, state: BoundaryState) -> EigenTriple:
        return cls(lam=state.b_b, mu=state.b_b, nu=state.a_b)

    @property
    def r(self) -> float:
        return self.lam + self.mu + self.nu

    @property
    def s(self) -> float:
        return self.lam ** 2 + self.mu ** 2 + self.nu ** 2


@dataclass(frozen=True)
class DeltaPinchFit:
    slope: float
    intercept: float
    window: tuple[int, int]
    stderr: float
    identically_zero: bool = False

    @property
    def confidence_interval(self) -> tuple[float, float]:
        return self.slope - 2.0 * self.stderr, self.slope + 2.0 * self.stderr


@dataclass(frozen=True)
class PinchingReport:
    """Run-level pinching summary: extremes over all records plus the trace fits"""

    eps_star: float
    eps_node: int
    f_max: float
    f_node: int
    delta: float
    f_delta_max: float
    h_condition_margin: float
    delta_fit: DeltaPinchFit | None
    grad_constants: dict[float, float]
    grad_constants_classical: dict[float, float]


def _require_positive_scalar(curv: CurvatureField) -> None:
    bad = np.flatnonzero(curv.r_scalar <= 0.0)
    if bad.size:
        node = int(bad[0])
        raise PinchingUndefinedError('scalar curvature is not positive', node=node, value=float(curv.r_scalar[node]))


def eps_pinch(curv: CurvatureField) -> tuple[float, int]:
    """Largest eps with Ric >= eps R g everywhere: min over nodes of min(a, b) / R

    Raises:
        PinchingUndefinedError: if R <= 0 at some node
    """

    _require_positive_scalar(curv)
    ratio = np.minimum(curv.a, curv.b) / curv.r_scalar
    node = int(np.argmin(ratio))
    return float(ratio[node]), node


def pinching_preservation_claimed(eps_star0: float) -> bool:
    """Whether eps-pinching is claimed preserved for this initial eps (eps < 1/4)"""

    return eps_star0 < EPS_PRESERVED_BELOW


def default_delta(eps_star0: float) -> float:
    """min(0.1, 2 eps^2), respecting delta <= 2 eps^2"""

    return min(DEFAULT_DELTA_CAP, 2.0 * eps_star0 * eps_star0)


def f_ratio(curv: CurvatureField) -> tuple[float, int]:
    """Maximum over nodes of f = S / R^2 = (a^2 + 2 b^2) / (a + 2 b)^2

    Raises:
        PinchingUndefinedError: if R <= 0 at some node
    """

    _require_positive_scalar(curv)
    f = curv.s_norm / curv.r_scalar ** 2
    node = int(np.argmax(f))
    return float(f[node]), node


def f_delta_field(curv: CurvatureField, delta: float) -> np.ndarray:
    if not (0.0 <= delta <= MAX_DELTA):
        raise InvalidInputError('delta must lie in [0, {}]'.format(MAX_DELTA), value=delta)
    _require_positive_scalar(curv)

    gamma = 2.0 - delta
    r = curv.r_scalar
    return curv.s_norm / r ** gamma - r ** (gamma - 2.0) / 3.0


def f_delta(curv: CurvatureField, delta: float) -> tuple[float, int]:
    """Maximum over nodes of S / R^gamma - R^(gamma - 2) / 3 with gamma = 2 - delta

    Raises:
        InvalidInputError: if delta is outside [0, 0.5]
        PinchingUndefinedError: if R <= 0 at some node
    """

    values = f_delta_field(curv, delta)
    node = int(np.argmax(values))
    return float(values[node]), node


def boundary_f_normal_derivative(e: EigenTriple, kappa: float) -> float:
    """nabla_nu f of f = S / R^2 at an umbilic boundary point

    (2 kappa / R^3) {nu R [3 (lam + mu) - 2 nu] - 2 (lam + mu) S}

    Raises:
        InvalidInputError: if R <= 0
    """

    r = e.r
    if r <= 0.0:
        raise InvalidInputError('scalar curvature must be positive', value=r)

    tangential = e.lam + e.mu
    braces = e.nu * r * (3.0 * tangential - 2.0 * e.nu) - 2.0 * tangential * e.s
    return 2.0 * kappa * braces / r ** 3


def boundary_fdelta_normal_derivative(e: EigenTriple, kappa: float, delta: float) -> float:
    """nabla_nu f_delta at an umbilic boundary point, gamma = 2 - delta

    2 kappa {nu [3 (lam + mu) - 2 nu] / R^gamma - gamma S (lam + mu) / R^(gamma + 1)
             + (delta / 3) R^(gamma - 3) (lam + mu)}

    Raises:
        InvalidInputError: if R <= 0 or delta is outside [0, 0.5]
    """

    if not (0.0 <= delta <= MAX_DELTA):
        raise InvalidInputError('delta must lie in [0, {}]'.format(MAX_DELTA), value=delta)
    r = e.r
    if r <= 0.0:
        raise InvalidInputError('scalar curvature must be positive', value=r)

    gamma = 2.0 - delta
    tangential = e.lam + e.mu
    return 2.0 * kappa * (e.nu * (3.0 * tangential - 2.0 * e.nu) / r ** gamma
                          - gamma * e.s * tangential / r ** (gamma + 1.0)
                          + delta / 3.0 * r ** (gamma - 3.0) * tangential)


def h_sign(x: float, y: float) -> float:
    """Sign function of nabla_nu f in the ratios x = lam/nu, y = mu/nu

    h(x, y) = (x + y + 1) [3 (x + y) - 2] - 2 (x^2 + y^2 + 1) (x + y)
    """

    return (x + y + 1.0) * (3.0 * (x + y) - 2.0) - 2.0 * (x * x + y * y + 1.0) * (x + y)


def constrained_h_max(eps: float) -> float:
    """Maximum of h on the line x + y = eps, reached at x = y = eps/2"""

    return -eps ** 3 + 3.0 * eps ** 2 - eps - 2.0


def h_negative_regions(eps: float) -> dict[str, bool]:
    """Which of the two negativity regions of the constrained maximum eps lies in

    The regions eps > 3 and eps < 1 are reported separately.
    """

    return {'above_3': eps > 3.0, 'below_1': eps < 1.0}


def normal_derivative_sign_map(x_values: Sequence[float], y_values: Sequence[float],
                               kappa: float = 1.0, delta: float = 0.0) -> np.ndarray:
    """nabla_nu f_delta over a grid of ratios (lam, mu, nu) = (x, y, 1)

    Row i, column j holds the value at x_values[i], y_values[j]. Negative
    entries mark where the maximum of f cannot sit on the boundary.
    """

    values = np.empty((len(x_values), len(y_values)))
    for i, x in enumerate(x_values):
        for j, y in enumerate(y_values):
            values[i, j] = boundary_fdelta_normal_derivative(EigenTriple(lam=x, mu=y, nu=1.0), kappa, delta)
    return values


def h_condition_margin(state: BoundaryState) -> float:
    """Largest delta with R_nu_nu >= delta g^{ab} R_ab at this instant: a_b / (2 b_b)

    Raises:
        InvalidInputError: if b_b <= 0
    """

    if state.b_b <= 0.0:
        raise InvalidInputError('tangential Ricci eigenvalue must be positive', value=state.b_b)

    return state.a_b / (2.0 * state.b_b)


def s_deviation(curv: CurvatureField) -> float:
    """max over nodes of S - R^2/3 = (2/3)(a - b)^2"""

    return float(np.max(curv.s_norm - curv.r_scalar ** 2 / 3.0))


def delta_pinch_fit(trace: FlowTrace) -> DeltaPinchFit:
    """Fit log(max(S - R^2/3)) against log(R_max) over the last two decades of R_max

    A slope below 2 means S - R^2/3 <= C R^(2 - delta) with delta > 0.

    Raises:
        FitWindowError: if R_max grows less than 100x over the trace or the
        window holds fewer than 3 usable records
    """

    r_max = trace.column('r_max')
    s_dev = trace.column('s_dev_max')
    if r_max.size < 2 or not (r_max[0] > 0.0 and r_max[-1] >= FIT_DYNAMIC_RANGE * r_max[0]):
        growth = float(r_max[-1] / r_max[0]) if r_max.size and r_max[0] > 0.0 else None
        raise FitWindowError('R_max grows by less than {:g}x'.format(FIT_DYNAMIC_RANGE), value=growth)

    in_window = np.flatnonzero(r_max >= r_max[-1] / 10.0 ** FIT_DECADES)
    window = (int(in_window[0]), int(in_window[-1]))

    if np.all(np.abs(s_dev[in_window]) <= ROUND_TOLERANCE * r_max[in_window] ** 2):
        return DeltaPinchFit(slope=NAN_SLOPE, intercept=NAN_SLOPE, window=window, stderr=0.0, identically_zero=True)

    usable = in_window[s_dev[in_window] > 0.0]
    if usable.size < 3:
        raise FitWindowError('fewer than 3 records with S - R^2/3 > 0 in the fit window')

    x = np.log(r_max[usable])
    y = np.log(s_dev[usable])
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    stderr = math.sqrt(max(float(cov[0, 0]), 0.0))

    logger.debug('delta pinch fit over records %d..%d: slope %.6f +/- %.2g', window[0], window[1], slope, stderr)
    return DeltaPinchFit(slope=float(slope), intercept=float(intercept), window=window, stderr=stderr)


def gradient_ratio(trace: FlowTrace, thetas: Sequence[float], power: float = 3.0) -> dict[float, float]:
    """C(theta) with max_{t<=tau} |DRm| <= theta max_{t<=tau} |Rm|^power + C(theta)

    |Rm| is proxied by max(|k_rad|, |k_sph|) and |DRm| by the largest
    arclength derivative of either sectional curvature. power = 3 is the
    displayed estimate; 1.5 gives the classical variant.
    """

    rm = np.maximum.accumulate(np.nan_to_num(trace.column('rm_max'), nan=0.0))
    drm = np.maximum.accumulate(np.nan_to_num(trace.column('drm_max'), nan=0.0))

    constants = {}
    for theta in thetas:
        if rm.size == 0:
            constants[theta] = 0.0
            continue
        constants[theta] = max(0.0, float(np.max(drm - theta * rm ** power)))
    return constants


def blow_up_time_bound(eps: float, r_min0: float) -> float:
    """Upper bound 1 / (eps^2 R_min(0)) on the blow-up time of an eps-pinched flow

    Follows from d/dt R >= Delta R + eps^2 R^2 with nabla_nu R >= 0 on the
    boundary.

    Raises:
        InvalidInputError: if eps or r_min0 is not positive
    """

    if not (eps > 0.0) or not (r_min0 > 0.0):
        raise InvalidInputError('eps and the initial minimum of R must be positive', value=min(eps, r_min0))

    return 1.0 / (eps * eps * r_min0)


def _extreme(values: np.ndarray, pick) -> tuple[float, int]:
    finite = np.flatnonzero(np.isfinite(values))
    if finite.size == 0:
        return float('nan'), -1
    index = int(finite[pick(values[finite])])
    return float(values[index]), index


def summarize_pinching(trace: FlowTrace, thetas: Sequence[float]) -> PinchingReport:
    """Worst values over the whole trace

    eps_star and the H-condition margin are minima, f_max and f_delta_max
    maxima; the nodes are those of the extreme record. delta_fit is None when
    the trace does not span enough growth of R_max.
    """

    eps_star, eps_record = _extreme(trace.column('eps_star'), np.argmin)
    f_max, f_record = _extreme(trace.column('f_max'), np.argmax)
    f_delta_max, _ = _extreme(trace.column('f_delta_max'), np.argmax)
    margin, _ = _extreme(trace.column('h_margin'), np.argmin)

    try:
        fit = delta_pinch_fit(trace)
    except FitWindowError as e:
        logger.warning('no delta pinch fit: %s', e)
        fit = None

    return PinchingReport(
        eps_star=eps_star,
        eps_node=trace.records[eps_record].eps_node if eps_record >= 0 else -1,
        f_max=f_max,
        f_node=trace.records[f_record].f_node if f_record >= 0 else -1,
        delta=trace.delta,
        f_delta_max=f_delta_max,
        h_condition_margin=margin,
        delta_fit=fit,
        grad_constants=gradient_ratio(trace, thetas),
        grad_constants_classical=gradient_ratio(trace, thetas, power=1.5)
    )
