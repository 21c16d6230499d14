"""DeTurck-fixed form of the warped Ricci flow

In the grid coordinate x the plain flow rho_t = -a rho moves rho along
characteristics that leave the center with speed about 2 / (rho^2 x), and a
checkerboard at the first nodes grows without bound. Adding the Lie
derivative of g along the DeTurck field

    W = g^ij (Gamma^x_ij - Gamma~^x_ij)

of a fixed background metric g~ gives the strictly parabolic system

    rho_t = -a rho + (rho W)_x,    phi_t = -b phi + W phi_x

whose solution is the Ricci flow up to a diffeomorphism. The background is the
initial metric, so W vanishes at t = 0 and on every rescaling of it: the round
hemisphere keeps its coordinates. W = 0 at x = 1 is imposed through the rho
ghost, which keeps the boundary at the last node.

The rho rate is expanded pointwise, with the derivative of the background
term taken from the background itself so that the rate equals -a rho exactly
whenever the metric is a multiple of the background.
"""

from __future__ import annotations
from dataclasses import dataclass
from .flow_exception import InvalidInputError
from .warped_geometry import ORIGIN_GHOSTS, WarpedMetric, extended_profiles, with_ghosts
from numpy.typing import NDArray
import numpy as np

# rate of the center onto the even extrapolation, in units of 1 / (rho dx)^2
CENTER_RELAXATION = 1.0


@dataclass(frozen=True)
class NodeDerivatives:
    """Grid derivatives of rho and phi on nodes 1..n

    phi_x is fourth order below the boundary and kappa rho phi at it, the rest
    are centered second-order differences.
    """

    rho: NDArray[np.float64]
    phi: NDArray[np.float64]
    rho_x: NDArray[np.float64]
    rho_xx: NDArray[np.float64]
    phi_x: NDArray[np.float64]
    phi_xx: NDArray[np.float64]

    def sectional(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """(k_rad, k_sph) from these derivatives"""

        rho, phi = self.rho, self.phi
        k_rad = -(self.phi_xx - self.phi_x * self.rho_x / rho) / (rho * rho * phi)
        k_sph = (1.0 - (self.phi_x / rho) ** 2) / (phi * phi)
        return k_rad, k_sph


def node_derivatives(metric: WarpedMetric, boundary_rho: float | None = None) -> NodeDerivatives:
    """Derivatives on nodes 1..n, optionally with another rho ghost past the boundary"""

    metric = with_ghosts(metric)
    rho_e, phi_e = extended_profiles(metric)
    if boundary_rho is not None:
        rho_e[-1] = boundary_rho

    n = metric.grid.n_cells
    dx = metric.grid.dx
    g = ORIGIN_GHOSTS

    mid = slice(g + 1, n + g + 1)
    right = slice(g + 2, n + g + 2)
    left = slice(g, n + g)

    phi_x = np.empty(n)
    phi_x[:n - 1] = (-phi_e[g + 3:n + g + 2] + 8.0 * phi_e[g + 2:n + g + 1]
                     - 8.0 * phi_e[g:n + g - 1] + phi_e[g - 1:n + g - 2]) / (12.0 * dx)
    phi_x[n - 1] = metric.kappa * metric.rho[n] * metric.phi[n]

    return NodeDerivatives(
        rho=metric.rho[1:],
        phi=metric.phi[1:],
        rho_x=(rho_e[right] - rho_e[left]) / (2.0 * dx),
        rho_xx=(rho_e[right] - 2.0 * rho_e[mid] + rho_e[left]) / (dx * dx),
        phi_x=phi_x,
        phi_xx=(phi_e[right] - 2.0 * phi_e[mid] + phi_e[left]) / (dx * dx)
    )


def _rho_rate_without_c2(d: NodeDerivatives, b1, b2, c1) -> NDArray[np.float64]:
    rho, phi = d.rho, d.phi
    return (d.rho_xx / rho ** 2 - 2.0 * d.rho_x ** 2 / rho ** 3 + 2.0 * d.phi_x ** 2 / (rho * phi ** 2)
            - c1 / rho + b1 * d.rho_x / rho ** 2 + 2.0 * d.rho_x * b2 / phi ** 2
            - 4.0 * rho * b2 * d.phi_x / phi ** 3)


@dataclass(frozen=True, eq=False)
class GaugeBackground:
    """Background terms of the DeTurck field on nodes 1..n

    With the background profiles rho~ and phi~, W = rho_x / rho^3 - b1 / rho^2
    - 2 phi_x / (rho^2 phi) + 2 b2 / phi^2.

    Attributes:
        n_cells (int): grid size the terms belong to
        b1 (NDArray): rho~_x / rho~
        b2 (NDArray): phi~ phi~_x / rho~^2
        c1 (NDArray): d/dx b1
        c2 (NDArray): d/dx b2, fixed by the rate at the background
    """

    n_cells: int
    b1: NDArray[np.float64]
    b2: NDArray[np.float64]
    c1: NDArray[np.float64]
    c2: NDArray[np.float64]

    @classmethod
    def from_metric(cls, metric: WarpedMetric) -> GaugeBackground:
        metric = with_ghosts(metric)
        d = node_derivatives(metric)
        rho, phi = d.rho, d.phi

        b1 = d.rho_x / rho
        b2 = phi * d.phi_x / rho ** 2
        # b1 is odd about the center
        c1 = np.gradient(np.concatenate(([0.0], b1)), metric.grid.dx, edge_order=2)[1:]

        k_rad, _ = d.sectional()
        rest = _rho_rate_without_c2(d, b1, b2, c1)
        c2 = phi ** 2 / (2.0 * rho) * (-2.0 * k_rad * rho - rest)
        return cls(metric.n_cells, b1, b2, c1, c2)

    def field(self, d: NodeDerivatives) -> NDArray[np.float64]:
        """W on nodes 1..n"""

        rho, phi = d.rho, d.phi
        return d.rho_x / rho ** 3 - self.b1 / rho ** 2 - 2.0 * d.phi_x / (rho ** 2 * phi) + 2.0 * self.b2 / phi ** 2


def gauge_boundary_rho(metric: WarpedMetric, gauge: GaugeBackground) -> float:
    """rho ghost past the boundary for which W(1) = 0"""

    rho, phi = metric.rho[-1], metric.phi[-1]
    target = rho * gauge.b1[-1] + 2.0 * metric.kappa * rho * rho - 2.0 * rho ** 3 * gauge.b2[-1] / (phi * phi)
    return float(metric.rho[-2] + 2.0 * metric.grid.dx * target)


def deturck_rhs(metric: WarpedMetric, gauge: GaugeBackground) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Time derivatives (rho_t, phi_t) of the DeTurck-fixed flow per node

    The center keeps phi = 0. Its rho follows nodes 1 and 2 as an even
    function of x and relaxes onto that extrapolation within a few steps.

    Raises:
        InvalidInputError: if the background belongs to another grid
    """

    if gauge.n_cells != metric.n_cells:
        raise InvalidInputError('gauge background has {} cells, metric has {}'.format(gauge.n_cells, metric.n_cells))

    metric = with_ghosts(metric)
    d = node_derivatives(metric, gauge_boundary_rho(metric, gauge))
    k_rad, k_sph = d.sectional()
    w = gauge.field(d)

    n = metric.n_cells
    rho_t = np.empty(n + 1)
    phi_t = np.empty(n + 1)

    phi_t[1:] = -(k_rad + k_sph) * d.phi + w * d.phi_x
    rho_t[1:] = _rho_rate_without_c2(d, gauge.b1, gauge.b2, gauge.c1) + 2.0 * d.rho * gauge.c2 / d.phi ** 2

    even = (4.0 * metric.rho[1] - metric.rho[2]) / 3.0
    rho_t[0] = ((4.0 * rho_t[1] - rho_t[2]) / 3.0
                + CENTER_RELAXATION * (even - metric.rho[0]) / (metric.rho[0] * metric.grid.dx) ** 2)
    phi_t[0] = 0.0
    return rho_t, phi_t
