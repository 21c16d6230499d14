"""SVG line plots of the monitors and a gnuplot data/script pair, written without a display"""

from __future__ import annotations
from pathlib import Path
from .flow_trace import FlowTrace, NormalizedTrace

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt

import logging
import numpy as np

logger = logging.getLogger(__name__)

# file stem -> (record columns, y label, logarithmic y axis)
MONITOR_PLOTS = {
    'r_max': (('r_max', 'r_min'), 'scalar curvature', True),
    'ric_min': (('ric_min',), 'min Ricci eigenvalue', False),
    'volume': (('volume',), 'volume', False),
    'eps_star': (('eps_star',), 'eps*', False),
    'f_max': (('f_max', 'f_delta_max'), 'f', False),
    'identities': (('i1n', 'i2n', 'i3n'), 'normalized identity residual', False),
    'h_margin': (('h_margin',), 'H-condition margin', False),
    'gradient': (('rm_max', 'drm_max'), 'max |Rm|, max |DRm|', True),
}

# file stem -> (normalized columns, y label, logarithmic y axis), plotted against t~
NORMALIZED_PLOTS = {
    'kappa_tilde': (('kappa_tilde',), 'normalized boundary umbilicity', False),
    'spread_norm': (('spread_norm',), 'normalized curvature spread', True),
    'r_tilde': (('r_tilde',), 'average scalar curvature at unit volume', False),
}

GNUPLOT_COLUMNS = ('t', 'r_max', 'r_min', 'ric_min', 'volume', 'eps_star', 'f_max', 'f_delta_max',
                   'i1n', 'i2n', 'i3n', 'h_margin')


def exact_hemisphere_r(t: np.ndarray) -> np.ndarray:
    """Scalar curvature 6 / (1 - 4t) of the shrinking unit hemisphere"""

    return 6.0 / (1.0 - 4.0 * np.asarray(t, dtype=np.float64))


def _line_plot(path: Path, x: np.ndarray, series: dict[str, np.ndarray], x_label: str, y_label: str,
               log_y: bool, overlay: tuple[str, np.ndarray] | None = None) -> bool:
    if log_y:
        series = {name: np.where(values > 0.0, values, np.nan) for name, values in series.items()}
    finite = {name: values for name, values in series.items() if np.any(np.isfinite(values))}
    if not finite:
        logger.debug('nothing to plot for %s', path.name)
        return False

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, values in finite.items():
        ax.plot(x, values, label=name, linewidth=1.5)
    if overlay is not None:
        ax.plot(x, overlay[1], label=overlay[0], linestyle='--', linewidth=1.0, color='black')

    if log_y:
        ax.set_yscale('log')
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return True


def plot_trace(trace: FlowTrace, normalized: NormalizedTrace, out_dir: Path, hemisphere: bool = False) -> list[Path]:
    """Write one SVG per monitor into out_dir

    Args:
        trace (FlowTrace): records to plot
        normalized (NormalizedTrace): normalized view of trace
        out_dir (Path): destination directory, created if missing
        hemisphere (bool): overlay the exact curve 6 / (1 - 4t) on the R_max plot

    Returns:
        list[Path]: SVG files written; empty for an empty trace
    """

    if len(trace) == 0:
        logger.warning('trace holds no records, no plots written')
        return []

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    t = trace.column('t')
    for stem, (columns, label, log_y) in MONITOR_PLOTS.items():
        overlay = None
        if stem == 'r_max' and hemisphere:
            t_exact = t[t < 0.25]
            overlay = ('6 / (1 - 4t)', np.concatenate((exact_hemisphere_r(t_exact), np.full(t.size - t_exact.size, np.nan))))
        path = out_dir / '{}.svg'.format(stem)
        if _line_plot(path, t, {c: trace.column(c) for c in columns}, 't', label, log_y, overlay):
            written.append(path)

    t_tilde = normalized.column('t_tilde')
    for stem, (columns, label, log_y) in NORMALIZED_PLOTS.items():
        path = out_dir / '{}.svg'.format(stem)
        if _line_plot(path, t_tilde, {c: normalized.column(c) for c in columns}, 't~', label, log_y):
            written.append(path)

    logger.info('wrote %d plot(s) to %s', len(written), out_dir)
    return written


def write_gnuplot(trace: FlowTrace, out_dir: Path, hemisphere: bool = False) -> list[Path]:
    """Write trace.dat (whitespace separated) and trace.gp, a script that renders it to SVG

    Returns:
        list[Path]: the two files written, or nothing for an empty trace
    """

    if len(trace) == 0:
        logger.warning('trace holds no records, no gnuplot files written')
        return []

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / 'trace.dat'
    script_path = out_dir / 'trace.gp'

    data = np.column_stack([trace.column(c) for c in GNUPLOT_COLUMNS])
    np.savetxt(data_path, data, fmt='%.17g', header=' '.join(GNUPLOT_COLUMNS))

    lines = [
        'set terminal svg size 800,500',
        'set datafile missing "nan"',
        'set xlabel "t"',
    ]
    for index, column in enumerate(GNUPLOT_COLUMNS[1:], start=2):
        lines.append('set output "gp_{}.svg"'.format(column))
        command = 'plot "trace.dat" using 1:{} with lines title "{}"'.format(index, column)
        if column == 'r_max' and hemisphere:
            command += ', (x < 0.25 ? 6 / (1 - 4 * x) : 1/0) with lines dashtype 2 title "6 / (1 - 4t)"'
        lines.append(command)
    script_path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    logger.info('wrote %s and %s', data_path, script_path)
    return [data_path, script_path]
