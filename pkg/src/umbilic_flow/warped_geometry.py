"""Discrete warped-product metrics g = rho(x)^2 dx^2 + phi(x)^2 g_S2 on the 3-ball

The computational coordinate x runs over [0, 1] on a fixed uniform grid; x = 0
is the center of the ball and x = 1 its boundary sphere. Arclength derivatives
are d/ds = (1/rho) d/dx.

Finite differences are second order, except the first derivative of phi that
enters 1 - phi_s^2: near the center that difference cancels to O(s^2), so it is
taken with the fourth-order centered stencil to keep the sectional curvature of
the spheres second-order accurate at the first nodes.
"""

from __future__ import annotations
from dataclasses import dataclass
from .flow_exception import InvalidInputError, DegenerateMetricError
import logging
import math
import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

MIN_CELLS = 16

# origin ghosts per field, boundary ghosts per field
ORIGIN_GHOSTS = 2
BOUNDARY_GHOSTS = 1


def _frozen_array(values: ArrayLike) -> NDArray[np.float64]:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid x_i = i/n_cells, i = 0..n_cells, on the computational interval [0, 1]"""

    n_cells: int

    def __post_init__(self) -> None:
        if int(self.n_cells) != self.n_cells or self.n_cells < MIN_CELLS:
            raise InvalidInputError('n_cells must be an integer of at least {}'.format(MIN_CELLS), value=self.n_cells)

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def nodes(self) -> NDArray[np.float64]:
        return np.arange(self.n_nodes, dtype=np.float64) / self.n_cells


@dataclass(frozen=True)
class GhostNodes:
    """Ghost values outside [0, 1] that encode the center regularity and the Robin condition

    origin_rho and origin_phi hold the values at x_{-1}, x_{-2} (in that order).
    """

    origin_rho: tuple[float, float]
    origin_phi: tuple[float, float]
    boundary_rho: float
    boundary_phi: float


@dataclass(frozen=True, eq=False)
class WarpedMetric:
    """Rotationally symmetric metric on the ball plus its boundary umbilicity constant

    Attributes:
        grid (RadialGrid): computational grid
        rho (NDArray): radial metric factor per node, g_xx = rho^2
        phi (NDArray): sphere radius profile per node, phi_0 = 0
        kappa (float): constant with h = kappa g on the boundary
        time (float): flow time
        ghosts (GhostNodes | None): ghost values, set by apply_boundary_conditions
    """

    grid: RadialGrid
    rho: NDArray[np.float64]
    phi: NDArray[np.float64]
    kappa: float
    time: float = 0.0
    ghosts: GhostNodes | None = None

    def __post_init__(self) -> None:
        rho = _frozen_array(self.rho)
        phi = _frozen_array(self.phi)
        object.__setattr__(self, 'rho', rho)
        object.__setattr__(self, 'phi', phi)
        object.__setattr__(self, 'kappa', float(self.kappa))
        object.__setattr__(self, 'time', float(self.time))

        if rho.shape != (self.grid.n_nodes,) or phi.shape != (self.grid.n_nodes,):
            raise InvalidInputError('rho and phi must hold one value per grid node ({})'.format(self.grid.n_nodes))
        if not math.isfinite(self.kappa) or self.kappa < 0.0:
            raise InvalidInputError('kappa must be a finite nonnegative number', value=self.kappa)

        bad_rho = np.flatnonzero(~np.isfinite(rho) | (rho <= 0.0))
        if bad_rho.size:
            node = int(bad_rho[0])
            raise DegenerateMetricError('radial factor is not positive', node=node, value=float(rho[node]))

        bad_phi = np.flatnonzero(~np.isfinite(phi[1:]) | (phi[1:] <= 0.0))
        if bad_phi.size:
            node = int(bad_phi[0]) + 1
            raise DegenerateMetricError('sphere radius collapsed', node=node, value=float(phi[node]))

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def with_profiles(self, rho: ArrayLike, phi: ArrayLike, time: float) -> WarpedMetric:
        """New metric on the same grid and kappa, without ghosts"""

        return WarpedMetric(self.grid, rho, phi, self.kappa, time)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-node curvature of a warped product

    a is the radial Ricci eigenvalue (normal-normal at the boundary), b the
    spherical one with multiplicity 2 (the two tangential eigenvalues at the
    boundary).
    """

    k_rad: NDArray[np.float64]
    k_sph: NDArray[np.float64]
    a: NDArray[np.float64]
    b: NDArray[np.float64]
    r_scalar: NDArray[np.float64]
    s_norm: NDArray[np.float64]

    @classmethod
    def from_sectional(cls, k_rad: ArrayLike, k_sph: ArrayLike) -> CurvatureField:
        k_rad = _frozen_array(k_rad)
        k_sph = _frozen_array(k_sph)
        a = 2.0 * k_rad
        b = k_rad + k_sph
        return cls(k_rad, k_sph, _frozen_array(a), _frozen_array(b),
                   _frozen_array(a + 2.0 * b), _frozen_array(a * a + 2.0 * b * b))

    @classmethod
    def from_ricci(cls, a: ArrayLike, b: ArrayLike) -> CurvatureField:
        """Build a field from Ricci eigenvalues, inverting a = 2 k_rad, b = k_rad + k_sph"""

        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        return cls.from_sectional(0.5 * a, b - 0.5 * a)

    @property
    def r_max(self) -> float:
        return float(np.max(self.r_scalar))

    @property
    def r_min(self) -> float:
        return float(np.min(self.r_scalar))

    @property
    def ric_min(self) -> float:
        return float(min(np.min(self.a), np.min(self.b)))

    @property
    def max_abs_curvature(self) -> float:
        return float(np.max(np.abs(self.r_scalar)))

    @property
    def sectional(self) -> NDArray[np.float64]:
        return np.concatenate((self.k_rad, self.k_sph))


@dataclass(frozen=True)
class BoundaryState:
    """Curvature quantities restricted to the boundary sphere

    a_b = R_nu_nu and 2 b_b = g^{ab} R_ab; a_s, b_s, r_s are outward arclength
    derivatives of a, b and R.
    """

    a_b: float
    b_b: float
    kappa: float
    a_s: float
    b_s: float
    r_s: float

    def __post_init__(self) -> None:
        scale = max(abs(self.r_s), abs(self.a_s), abs(self.b_s), 1.0)
        if abs(self.r_s - (self.a_s + 2.0 * self.b_s)) > 1e-9 * scale:
            raise InvalidInputError('r_s must equal a_s + 2 b_s', value=self.r_s)

    @property
    def mean_curvature(self) -> float:
        return 2.0 * self.kappa

    @property
    def r_b(self) -> float:
        return self.a_b + 2.0 * self.b_b


def apply_boundary_conditions(metric: WarpedMetric) -> WarpedMetric:
    """Reset the origin node and regenerate the ghost values

    Origin: phi is odd and rho even across x = 0. Boundary: the phi ghost is
    chosen so that the fourth-order biased stencil
    (3 phi_{n+1} + 10 phi_n - 18 phi_{n-1} + 6 phi_{n-2} - phi_{n-3}) / (12 dx)
    equals rho_n kappa phi_n, i.e. phi_s = kappa phi (h = kappa g). The rho
    ghost is the cubic extrapolation of the last four nodes.

    Args:
        metric (WarpedMetric): metric whose interior nodes were just updated

    Returns:
        WarpedMetric: same profiles with phi_0 = 0 and fresh ghosts
    """

    rho = metric.rho
    phi = np.array(metric.phi)
    phi[0] = 0.0
    dx = metric.grid.dx

    boundary_phi = (12.0 * dx * rho[-1] * metric.kappa * phi[-1]
                    - 10.0 * phi[-1] + 18.0 * phi[-2] - 6.0 * phi[-3] + phi[-4]) / 3.0
    boundary_rho = 4.0 * rho[-1] - 6.0 * rho[-2] + 4.0 * rho[-3] - rho[-4]

    ghosts = GhostNodes(
        origin_rho=(float(rho[1]), float(rho[2])),
        origin_phi=(float(-phi[1]), float(-phi[2])),
        boundary_rho=float(boundary_rho),
        boundary_phi=float(boundary_phi)
    )

    return WarpedMetric(metric.grid, rho, phi, metric.kappa, metric.time, ghosts)


def with_ghosts(metric: WarpedMetric) -> WarpedMetric:
    return metric if metric.ghosts is not None else apply_boundary_conditions(metric)


def extended_profiles(metric: WarpedMetric) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Return (rho, phi) padded with their ghosts; node i sits at index i + ORIGIN_GHOSTS"""

    ghosts = with_ghosts(metric).ghosts
    rho = np.concatenate(([ghosts.origin_rho[1], ghosts.origin_rho[0]], metric.rho, [ghosts.boundary_rho]))
    phi = np.concatenate(([ghosts.origin_phi[1], ghosts.origin_phi[0]], metric.phi, [ghosts.boundary_phi]))
    return rho, phi


def boundary_residual(metric: WarpedMetric) -> float:
    """|phi_s(1) - kappa phi(1)| measured with the boundary stencil that defines the ghost"""

    _, phi = extended_profiles(metric)
    dx = metric.grid.dx
    phi_x = (3.0 * phi[-1] + 10.0 * phi[-2] - 18.0 * phi[-3] + 6.0 * phi[-4] - phi[-5]) / (12.0 * dx)
    return abs(phi_x / metric.rho[-1] - metric.kappa * metric.phi[-1])


def origin_drift(metric: WarpedMetric) -> float:
    """|phi_s(0) - 1|, the regularity defect at the center"""

    phi = metric.phi
    phi_x = (8.0 * phi[1] - phi[2]) / (6.0 * metric.grid.dx)
    return abs(phi_x / metric.rho[0] - 1.0)


def arclength_derivative(metric: WarpedMetric, field: ArrayLike) -> NDArray[np.float64]:
    """Arclength derivative (1/rho) d/dx of a per-node field

    Centered second-order differences inside, one-sided second-order
    stencils at both ends.

    Raises:
        InvalidInputError: if field is not defined on the metric's grid
    """

    values = np.asarray(field, dtype=np.float64)
    if values.shape != (metric.grid.n_nodes,):
        raise InvalidInputError('field has {} values, grid has {} nodes'.format(values.size, metric.grid.n_nodes))

    return np.gradient(values, metric.grid.dx, edge_order=2) / metric.rho


def curvature(metric: WarpedMetric) -> CurvatureField:
    """Sectional curvatures and Ricci eigenvalues of a warped product

    k_rad = -phi_ss / phi and k_sph = (1 - phi_s^2) / phi^2 on nodes 1..n. At the
    center both are set to their common limit, extrapolated from nodes 1 and 2
    as an even function of x.

    Raises:
        DegenerateMetricError: if the result is not finite
    """

    metric = with_ghosts(metric)
    rho_e, phi_e = extended_profiles(metric)
    n = metric.grid.n_cells
    dx = metric.grid.dx
    g = ORIGIN_GHOSTS
    rho = metric.rho
    phi = metric.phi

    # node i lives at extended index i + g
    phi_xx = (phi_e[g + 1:n + g + 2] - 2.0 * phi_e[g:n + g + 1] + phi_e[g - 1:n + g]) / (dx * dx)
    rho_x = (rho_e[g + 1:n + g + 2] - rho_e[g - 1:n + g]) / (2.0 * dx)

    phi_s = np.empty(n + 1)
    phi_s[:n] = (-phi_e[g + 2:n + g + 2] + 8.0 * phi_e[g + 1:n + g + 1]
                 - 8.0 * phi_e[g - 1:n + g - 1] + phi_e[g - 2:n + g - 2]) / (12.0 * dx * rho[:n])
    phi_s[n] = metric.kappa * phi[n]

    phi_ss = (phi_xx - phi_s * rho_x) / (rho * rho)

    k_rad = np.empty(n + 1)
    k_sph = np.empty(n + 1)
    k_rad[1:] = -phi_ss[1:] / phi[1:]
    k_sph[1:] = (1.0 - phi_s[1:] ** 2) / (phi[1:] ** 2)

    center = 0.5 * ((4.0 * k_rad[1] - k_rad[2]) + (4.0 * k_sph[1] - k_sph[2])) / 3.0
    k_rad[0] = center
    k_sph[0] = center

    if not (np.all(np.isfinite(k_rad)) and np.all(np.isfinite(k_sph))):
        node = int(np.flatnonzero(~np.isfinite(k_rad + k_sph))[0])
        raise DegenerateMetricError('curvature is not finite', node=node, action_description='curvature evaluation')

    return CurvatureField.from_sectional(k_rad, k_sph)


def second_fundamental_form(metric: WarpedMetric) -> tuple[float, float]:
    """Realized boundary umbilicity phi_s(1)/phi(1) and mean curvature H = 2 h

    Uses the one-sided second-order stencil on the stored nodes only, so it
    measures what the profile actually does rather than what the ghost imposes.

    Raises:
        DegenerateMetricError: if phi(1) = 0
    """

    phi = metric.phi
    if phi[-1] <= 0.0:
        raise DegenerateMetricError('boundary sphere has zero radius', node=metric.grid.n_cells)

    phi_x = (3.0 * phi[-1] - 4.0 * phi[-2] + phi[-3]) / (2.0 * metric.grid.dx)
    h_scalar = float(phi_x / metric.rho[-1] / phi[-1])
    return h_scalar, 2.0 * h_scalar


# numpy < 2 only has trapz
_trapezoid = getattr(np, 'trapezoid', None) or np.trapz


def volume(metric: WarpedMetric) -> float:
    """4 pi times the integral of rho phi^2 dx, composite trapezoid rule"""

    return 4.0 * math.pi * float(_trapezoid(metric.rho * metric.phi ** 2, dx=metric.grid.dx))


def total_scalar_curvature(metric: WarpedMetric, curv: CurvatureField | None = None) -> float:
    """Integral of R dV; the volume decreases at this rate under the flow"""

    if curv is None:
        curv = curvature(metric)
    return 4.0 * math.pi * float(_trapezoid(curv.r_scalar * metric.rho * metric.phi ** 2, dx=metric.grid.dx))


def rescale(metric: WarpedMetric, c: float) -> WarpedMetric:
    """Scale lengths by c: rho, phi -> c rho, c phi and kappa -> kappa / c

    Curvatures of the result scale by 1/c^2. Time is unchanged.

    Raises:
        InvalidInputError: if c is not positive
    """

    if not (c > 0.0) or not math.isfinite(c):
        raise InvalidInputError('scale factor must be positive', value=c)

    scaled = WarpedMetric(metric.grid, c * metric.rho, c * metric.phi, metric.kappa / c, metric.time)
    return apply_boundary_conditions(scaled)
