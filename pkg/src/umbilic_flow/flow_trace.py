"""Time series produced by a flow run, its normalized view and convergence tables"""

from __future__ import annotations
from dataclasses import dataclass, field, fields
from typing import Iterator, Sequence
from .flow_exception import InvalidInputError
from .warped_geometry import WarpedMetric
import math
import numpy as np

NAN = float('nan')

STOP_REASONS = ('t_end', 'blow-up', 'degenerate', 'max-steps')


@dataclass(frozen=True)
class MonitorRecord:
    """Monitored scalars of one recorded state

    Quantities a disabled monitor does not compute stay NaN.
    """

    step: int
    t: float
    dt: float = 0.0
    r_max: float = NAN
    r_min: float = NAN
    ric_min: float = NAN
    volume: float = NAN
    total_scalar: float = NAN
    kappa: float = NAN
    h_realized: float = NAN
    spread: float = NAN
    origin_drift: float = NAN
    bc_residual: float = NAN
    eps_star: float = NAN
    eps_node: int = -1
    f_max: float = NAN
    f_node: int = -1
    f_delta_max: float = NAN
    s_dev_max: float = NAN
    i1n: float = NAN
    i2n: float = NAN
    i3n: float = NAN
    h_margin: float = NAN
    grad_f_boundary: float = NAN
    grad_fdelta_boundary: float = NAN
    rm_max: float = NAN
    drm_max: float = NAN


@dataclass
class FlowTrace:
    """Ordered monitor records plus snapshots keyed by record index"""

    n_cells: int
    delta: float = NAN
    records: list[MonitorRecord] = field(default_factory=list)
    snapshots: dict[int, WarpedMetric] = field(default_factory=dict)
    stop_reason: str | None = None

    def append(self, record: MonitorRecord, snapshot: WarpedMetric | None = None) -> int:
        """Append a record (and optionally its state); returns the record index

        Raises:
            InvalidInputError: if the record time does not strictly increase or
            the snapshot time differs from the record time
        """

        if self.records and not record.t > self.records[-1].t:
            raise InvalidInputError('record times must strictly increase', value=record.t)
        if snapshot is not None and snapshot.time != record.t:
            raise InvalidInputError('snapshot time {} does not match record time {}'.format(snapshot.time, record.t))

        self.records.append(record)
        index = len(self.records) - 1
        if snapshot is not None:
            self.snapshots[index] = snapshot
        return index

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[MonitorRecord]:
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        """All values of one MonitorRecord field as an array"""

        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    @property
    def final_metric(self) -> WarpedMetric | None:
        if not self.snapshots:
            return None
        return self.snapshots[max(self.snapshots)]


MONITOR_FIELDS = tuple(f.name for f in fields(MonitorRecord))


@dataclass(frozen=True)
class NormalizedRecord:
    """One record of the volume-normalized flow g~ = psi g on the time scale t~"""

    t: float
    t_tilde: float
    psi: float
    kappa_tilde: float
    r_tilde: float
    volume_tilde: float
    spread_norm: float


@dataclass
class NormalizedTrace:
    records: list[NormalizedRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)


@dataclass
class StudyTable:
    """Grid-refinement table: one row per grid size, plus the fitted convergence order"""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple[float, ...]] = field(default_factory=list)
    order: float = NAN

    def values(self, column: str) -> np.ndarray:
        index = self.columns.index(column)
        return np.array([row[index] for row in self.rows], dtype=np.float64)


def fit_convergence_order(n_values: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares order p in error ~ C n^-p

    Returns NaN when fewer than two rows are given or an error is not
    positive (round-off level residuals have no order).
    """

    n = np.asarray(n_values, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if n.size < 2 or n.size != e.size:
        return NAN
    if not np.all(np.isfinite(e)) or np.any(e <= 0.0):
        return NAN

    slope, _ = np.polyfit(np.log(n), np.log(e), 1)
    return float(-slope)


def finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None
