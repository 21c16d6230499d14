"""Run directories on disk

A run directory holds

    config.txt              serialized HarnessConfig
    run.json                stop reason, delta, kappa, step index of every record
    trace.csv               one row per record, columns TRACE_COLUMNS
    snapshots/NNNNNN.json   full state of record NNNNNN (time, kappa, n_cells, rho, phi)
    report.json             RunReport

Monitors that trace.csv does not carry are re-measured from the snapshots when
a run is loaded.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping
from .flow_exception import SchemaError
from .flow_solver import measure_record, normalize_trace
from .flow_trace import NAN, FlowTrace, MonitorRecord, NormalizedTrace, StudyTable
from .harness_config import HarnessConfig, parse_config, serialize_config
from .warped_geometry import RadialGrid, WarpedMetric, apply_boundary_conditions
import csv
import json
import logging

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ('t', 'dt', 'R_max', 'R_min', 'ric_min', 'volume', 'eps_star', 'f_max', 'f_delta_max',
                 'i1n', 'i2n', 'i3n', 'h_margin', 'kappa_tilde', 't_tilde', 'spread_norm')

# trace.csv column -> MonitorRecord field
_RECORD_COLUMNS = {
    't': 't', 'dt': 'dt', 'R_max': 'r_max', 'R_min': 'r_min', 'ric_min': 'ric_min', 'volume': 'volume',
    'eps_star': 'eps_star', 'f_max': 'f_max', 'f_delta_max': 'f_delta_max',
    'i1n': 'i1n', 'i2n': 'i2n', 'i3n': 'i3n', 'h_margin': 'h_margin'
}

SNAPSHOT_FIELDS = ('time', 'kappa', 'n_cells', 'rho', 'phi')

CONFIG_FILE = 'config.txt'
META_FILE = 'run.json'
TRACE_FILE = 'trace.csv'
SNAPSHOT_DIR = 'snapshots'
REPORT_FILE = 'report.json'


@dataclass
class RunMeta:
    stop_reason: str | None
    delta: float
    kappa: float
    n_cells: int
    record_steps: list[int] = field(default_factory=list)
    snapshot_indices: list[int] = field(default_factory=list)


def snapshot_name(index: int) -> str:
    return '{:06d}.json'.format(index)


def _compose_float(value: float) -> str:
    return repr(float(value))


def trace_rows(trace: FlowTrace, normalized: NormalizedTrace) -> list[dict[str, float]]:
    """trace.csv rows as floats, in column order"""

    rows = []
    for record, norm in zip(trace.records, normalized.records):
        row = {column: float(getattr(record, name)) for column, name in _RECORD_COLUMNS.items()}
        row.update(kappa_tilde=norm.kappa_tilde, t_tilde=norm.t_tilde, spread_norm=norm.spread_norm)
        rows.append({column: row[column] for column in TRACE_COLUMNS})
    return rows


def run_meta(trace: FlowTrace) -> RunMeta:
    kappa = trace.records[0].kappa if trace.records else NAN
    return RunMeta(
        stop_reason=trace.stop_reason,
        delta=trace.delta,
        kappa=kappa,
        n_cells=trace.n_cells,
        record_steps=[r.step for r in trace.records],
        snapshot_indices=sorted(trace.snapshots)
    )


def rebuild_trace(config: HarnessConfig, meta: RunMeta, rows: list[Mapping[str, float]],
                  snapshots: Mapping[int, WarpedMetric]) -> FlowTrace:
    """FlowTrace as it can be recovered from persisted data

    Records with a snapshot are re-measured from it; the others keep the
    trace.csv columns only, with the curvature spread taken from spread_norm.
    """

    trace = FlowTrace(meta.n_cells, meta.delta, stop_reason=meta.stop_reason)
    for index, row in enumerate(rows):
        step = meta.record_steps[index]
        snapshot = snapshots.get(index)
        if snapshot is not None:
            record = measure_record(snapshot, step_index=step, dt=row['dt'], delta=meta.delta,
                                    monitor_identities=config.monitor_identities,
                                    monitor_pinching=config.monitor_pinching,
                                    monitor_gradient=config.monitor_gradient)
        else:
            values = {name: row[column] for column, name in _RECORD_COLUMNS.items()}
            record = MonitorRecord(step=step, kappa=meta.kappa, spread=row['spread_norm'], **values)
        trace.append(record, snapshot)
    return trace


def persisted_view(config: HarnessConfig, trace: FlowTrace) -> FlowTrace:
    """The trace load_run would return for this run, without touching the disk"""

    rows = trace_rows(trace, normalize_trace(trace)) if len(trace) else []
    snapshots = trace.snapshots if config.emit_json else {}
    return rebuild_trace(config, run_meta(trace), rows, snapshots)


def write_json(path: Path, content: Any) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(content, f, indent=2, allow_nan=True)
        f.write('\n')


def write_trace_csv(path: Path, rows: Iterable[Mapping[str, float]]) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=TRACE_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({column: _compose_float(row[column]) for column in TRACE_COLUMNS})


def snapshot_to_dict(metric: WarpedMetric) -> dict[str, Any]:
    return {
        'time': metric.time,
        'kappa': metric.kappa,
        'n_cells': metric.n_cells,
        'rho': [float(v) for v in metric.rho],
        'phi': [float(v) for v in metric.phi]
    }


def snapshot_from_dict(content: Any, path: Path | str | None = None) -> WarpedMetric:
    """Rebuild a metric from its snapshot JSON

    Raises:
        SchemaError: if a field is missing or malformed
    """

    if not isinstance(content, dict):
        raise SchemaError('snapshot must be a JSON object', path=path)
    for name in SNAPSHOT_FIELDS:
        if name not in content:
            raise SchemaError('missing field', path=path, field=name)

    n_cells = content['n_cells']
    if not isinstance(n_cells, int) or isinstance(n_cells, bool):
        raise SchemaError('n_cells must be an integer', path=path, field='n_cells')
    for name in ('rho', 'phi'):
        values = content[name]
        if not isinstance(values, list) or len(values) != n_cells + 1:
            raise SchemaError('expected a list of {} numbers'.format(n_cells + 1), path=path, field=name)
    for name in ('time', 'kappa'):
        if not isinstance(content[name], (int, float)) or isinstance(content[name], bool):
            raise SchemaError('expected a number', path=path, field=name)

    metric = WarpedMetric(RadialGrid(n_cells), content['rho'], content['phi'], content['kappa'], content['time'])
    return apply_boundary_conditions(metric)


def write_study_table(path: Path, table: StudyTable) -> None:
    """CSV with one row per grid size and the fitted order as a footer comment"""

    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([str(int(v)) if i == 0 else _compose_float(v) for i, v in enumerate(row)])
        f.write('# order = {}\n'.format(_compose_float(table.order)))


def read_study_table(path: Path) -> StudyTable:
    """Read a table written by write_study_table

    Raises:
        SchemaError: if a row is malformed or the order footer is missing
    """

    path = Path(path)
    with open(path, encoding='utf-8', newline='') as f:
        lines = f.read().splitlines()
    if not lines:
        raise SchemaError('empty study table', path=path)

    columns = tuple(lines[0].split(','))
    table = StudyTable(path.stem.removesuffix('_study'), columns)
    footer = False
    for number, line in enumerate(lines[1:], start=1):
        if line.startswith('# order = '):
            table.order = float(line[len('# order = '):])
            footer = True
            continue
        cells = line.split(',')
        if len(cells) != len(columns):
            raise SchemaError('expected {} values'.format(len(columns)), path=path, row=number)
        try:
            table.rows.append(tuple(float(c) for c in cells))
        except ValueError as e:
            raise SchemaError('value is not a number', path=path, row=number) from e

    if not footer:
        raise SchemaError('missing order footer', path=path)
    return table


def save_run(run_dir: Path, config: HarnessConfig, trace: FlowTrace) -> list[Path]:
    """Write config, metadata, trace and snapshots of a finished run

    trace.csv is written when config.emit_csv is set, the snapshots when
    config.emit_json is set.

    Returns:
        list[Path]: files written
    """

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    written = []

    (run_dir / CONFIG_FILE).write_text(serialize_config(config), encoding='utf-8')
    written.append(run_dir / CONFIG_FILE)

    meta = run_meta(trace)
    if not config.emit_json:
        meta.snapshot_indices = []
    write_json(run_dir / META_FILE, {
        'stop_reason': meta.stop_reason,
        'delta': meta.delta,
        'kappa': meta.kappa,
        'n_cells': meta.n_cells,
        'record_steps': meta.record_steps,
        'snapshots': meta.snapshot_indices
    })
    written.append(run_dir / META_FILE)

    if config.emit_csv:
        write_trace_csv(run_dir / TRACE_FILE, trace_rows(trace, normalize_trace(trace)) if len(trace) else [])
        written.append(run_dir / TRACE_FILE)

    if config.emit_json:
        snapshot_dir = run_dir / SNAPSHOT_DIR
        snapshot_dir.mkdir(exist_ok=True)
        for index, metric in trace.snapshots.items():
            write_json(snapshot_dir / snapshot_name(index), snapshot_to_dict(metric))
            written.append(snapshot_dir / snapshot_name(index))

    logger.info('wrote %d file(s) to %s', len(written), run_dir)
    return written


def _read_json(path: Path) -> Any:
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise SchemaError('file is missing', path=path) from e
    except json.JSONDecodeError as e:
        raise SchemaError('invalid JSON: {}'.format(e.msg), path=path, row=e.lineno) from e


def _read_meta(path: Path) -> RunMeta:
    content = _read_json(path)
    if not isinstance(content, dict):
        raise SchemaError('run metadata must be a JSON object', path=path)
    for name in ('stop_reason', 'delta', 'kappa', 'n_cells', 'record_steps', 'snapshots'):
        if name not in content:
            raise SchemaError('missing field', path=path, field=name)

    return RunMeta(
        stop_reason=content['stop_reason'],
        delta=float(content['delta']),
        kappa=float(content['kappa']),
        n_cells=int(content['n_cells']),
        record_steps=[int(s) for s in content['record_steps']],
        snapshot_indices=[int(i) for i in content['snapshots']]
    )


def read_trace_csv(path: Path) -> list[dict[str, float]]:
    """Rows of trace.csv as floats

    Raises:
        SchemaError: naming the first bad row (1 = first data row) and field
    """

    if not path.exists():
        raise SchemaError('file is missing', path=path)

    rows = []
    with open(path, encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise SchemaError('header does not match {}'.format(','.join(TRACE_COLUMNS)), path=path, row=0)

        for number, raw in enumerate(reader, start=1):
            if None in raw:
                raise SchemaError('too many values', path=path, row=number)
            row = {}
            for column in TRACE_COLUMNS:
                cell = raw.get(column)
                if cell is None or cell == '':
                    raise SchemaError('missing value', path=path, row=number, field=column)
                try:
                    row[column] = float(cell)
                except ValueError as e:
                    raise SchemaError('value \"{}\" is not a number'.format(cell), path=path, row=number, field=column) from e
            rows.append(row)

    for number, (prev, row) in enumerate(zip(rows, rows[1:]), start=2):
        if not row['t'] > prev['t']:
            raise SchemaError('time does not increase', path=path, row=number, field='t')

    return rows


def load_run(run_dir: Path) -> tuple[HarnessConfig, FlowTrace]:
    """Read a run directory back into its config and trace

    Raises:
        SchemaError: if a file is missing or does not match its schema
        ConfigError: if config.txt does not parse
    """

    run_dir = Path(run_dir)
    config_path = run_dir / CONFIG_FILE
    if not config_path.exists():
        raise SchemaError('file is missing', path=config_path)
    config = parse_config(config_path.read_text(encoding='utf-8'))

    meta = _read_meta(run_dir / META_FILE)
    trace_path = run_dir / TRACE_FILE
    rows = read_trace_csv(trace_path)
    if len(rows) != len(meta.record_steps):
        raise SchemaError('{} rows, expected {}'.format(len(rows), len(meta.record_steps)),
                          path=trace_path, row=min(len(rows), len(meta.record_steps)) + 1)

    snapshots = {}
    for index in meta.snapshot_indices:
        path = run_dir / SNAPSHOT_DIR / snapshot_name(index)
        if not 0 <= index < len(rows):
            raise SchemaError('snapshot of record {} has no row'.format(index), path=path)
        metric = snapshot_from_dict(_read_json(path), path)
        if metric.time != rows[index]['t']:
            raise SchemaError('snapshot time {} differs from trace time {}'.format(metric.time, rows[index]['t']),
                              path=path, field='time')
        snapshots[index] = metric

    logger.info('loaded %d record(s) and %d snapshot(s) from %s', len(rows), len(snapshots), run_dir)
    return config, rebuild_trace(config, meta, rows, snapshots)
