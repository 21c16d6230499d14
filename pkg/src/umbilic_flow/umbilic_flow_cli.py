from .flow_exception import FlowException, InvalidInputError, PresetRejectedError, StudyAbortedError
from .exception_logging import log_info
from .boundary_identities import identity_convergence_study
from .flow_solver import normalize_trace, run, solution_error_study
from .flow_trace import StudyTable
from .harness_config import HarnessConfig, parse_config
from .plotting import plot_trace, write_gnuplot
from .presets import PRESETS, make_preset
from .run_report import RunReport, build_report, rejected_report
from .trace_io import REPORT_FILE, load_run, persisted_view, save_run, write_json, write_study_table
from .util import OUTPUT_LOG_LEVEL, logging_output, parse_grid_list
from .warped_geometry import curvature
from argparse import ArgumentParser
from dataclasses import replace
from pathlib import Path
import logging
import time

__LOG_LEVELS = (
    logging.WARNING,
    logging.INFO,
    logging.DEBUG
)

MIN_STUDY_GRIDS = 3

# round caps blow up at about 1.5 / R_max(0); studies sample at 0.4 of that
BLOW_UP_ESTIMATE = 1.5
STUDY_FRACTION = 0.4


def _read_config(path: str) -> HarnessConfig:
    with open(path, encoding='utf-8') as f:
        return parse_config(f.read())


def _summarize(report: RunReport) -> None:
    logging_output('stop reason: {}'.format(report.stop_reason))
    for v in report.verdicts:
        if v.status == 'not applicable':
            continue
        measured = 'n/a' if v.measured is None else '{:.6g}'.format(v.measured)
        logging_output('{:<26} {:<19} {:<9} measured {}'.format(v.name, v.status, '(' + v.kind.split()[0] + ')', measured))


def _write_report(run_dir: Path, config: HarnessConfig, report: RunReport) -> None:
    if config.emit_json:
        write_json(run_dir / REPORT_FILE, report.to_dict())
        logging.info('wrote {}'.format(run_dir / REPORT_FILE))


def _plot(run_dir: Path, config: HarnessConfig, trace) -> None:
    hemisphere = config.preset == 'round_cap' and len(trace) > 0 and trace.records[0].kappa == 0.0
    plot_dir = run_dir / 'plots'
    files = plot_trace(trace, normalize_trace(trace) if len(trace) else None, plot_dir, hemisphere)
    files += write_gnuplot(trace, plot_dir, hemisphere)
    if files:
        logging_output('wrote {} plot file(s) to {}'.format(len(files), plot_dir))


def cmd_run(args) -> int:
    config = _read_config(args.config)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    run_dir = Path(config.output_dir)

    start_time = time.time()
    try:
        trace = run(config.flow_config())
    except (PresetRejectedError, InvalidInputError) as e:
        run_dir.mkdir(parents=True, exist_ok=True)
        _write_report(run_dir, config, rejected_report(config, e))
        raise
    time_elapsed = time.time() - start_time

    save_run(run_dir, config, trace)
    report = build_report(config, persisted_view(config, trace))
    _write_report(run_dir, config, report)
    if config.emit_plots:
        _plot(run_dir, config, trace)

    logging_output('{} records in {:.2f} seconds, final t = {:.9g}'.format(len(trace), time_elapsed, trace.records[-1].t))
    _summarize(report)

    if trace.stop_reason == 'degenerate':
        logging.critical('the metric degenerated before the run finished')
        return 1
    return 0


def _study_time(config: HarnessConfig) -> float:
    if config.study_time is not None:
        return config.study_time
    metric = make_preset(config.preset, config.preset_params(), n_cells=config.n_list[0],
                         origin_tolerance=config.origin_tolerance)
    return STUDY_FRACTION * BLOW_UP_ESTIMATE / curvature(metric).r_max


def _write_table(out_dir: Path, table: StudyTable) -> None:
    path = out_dir / '{}_study.csv'.format(table.name)
    write_study_table(path, table)
    logging_output('{}: order {:.3f} over n = {}'.format(path, table.order, ', '.join(str(int(n)) for n in table.values('n'))))


def cmd_study(args) -> int:
    config = _read_config(args.config)
    if args.n_list is not None:
        try:
            config = replace(config, n_list=tuple(parse_grid_list(args.n_list)))
        except ValueError as e:
            raise InvalidInputError('error while parsing N_LIST: {}'.format(e)) from e
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    if len(config.n_list) < MIN_STUDY_GRIDS:
        raise InvalidInputError('a convergence study needs at least {} grid sizes'.format(MIN_STUDY_GRIDS))

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t_sample = _study_time(config)
    flow_config = config.flow_config()
    logging.info('sampling at t = {:.6g}'.format(t_sample))

    studies = [lambda: identity_convergence_study(flow_config, config.n_list, t_sample, jobs=args.jobs)]
    hemisphere = config.preset == 'round_cap' and make_preset(config.preset, config.preset_params(), n_cells=16).kappa == 0.0
    if hemisphere:
        studies.append(lambda: solution_error_study(flow_config, config.n_list, t_sample, jobs=args.jobs))

    for study in studies:
        try:
            table = study()
        except StudyAbortedError as e:
            if e.partial is not None and e.partial.rows:
                _write_table(out_dir, e.partial)
            raise
        _write_table(out_dir, table)

    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    config, trace = load_run(run_dir)
    report = build_report(config, trace)
    _write_report(run_dir, replace(config, emit_json=True), report)
    _summarize(report)
    return 0


def cmd_plot(args) -> int:
    run_dir = Path(args.run_dir)
    config, trace = load_run(run_dir)
    _plot(run_dir, config, trace)
    return 0


def cmd_presets(args) -> int:
    for name, spec in PRESETS.items():
        params = ', '.join('{} = {:.6g}'.format(k, v) for k, v in spec.defaults.items())
        logging_output('{:<14} {}'.format(name, params))
        logging_output('{:<14} {}'.format('', spec.description))
    return 0


def main_cli(argv=None):
    parser = ArgumentParser(prog='umbilic-flow', description='Ricci flow of rotationally symmetric 3-balls with umbilic boundary')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='Increase verbosity of program output')
    parser.add_argument('--quiet', action='store_true', help='Only print results and fatal errors')
    parser.add_argument('--version', action='version', version='%(prog)s 0.1a')
    subparsers = parser.add_subparsers(dest='command', required=True)

    run_parser = subparsers.add_parser('run', help='Run the flow from a configuration and write trace, snapshots and report')
    run_parser.add_argument('--config', required=True, help='Configuration file')
    run_parser.add_argument('--out', default=None, help='Output directory, overrides output_dir')
    run_parser.set_defaults(handler=cmd_run)

    study_parser = subparsers.add_parser('study', help='Grid convergence studies of the boundary identities and the exact solution')
    study_parser.add_argument('--config', required=True, help='Configuration file')
    study_parser.add_argument('--out', default=None, help='Output directory, overrides output_dir')
    study_parser.add_argument('--n-list', default=None, type=str, help='Comma separated grid sizes, overrides n_list', dest='n_list')
    study_parser.add_argument('-j', '--jobs', default=1, type=int, help='Number of grids run in parallel')
    study_parser.set_defaults(handler=cmd_study)

    report_parser = subparsers.add_parser('report', help='Regenerate report.json from a run directory')
    report_parser.add_argument('run_dir', help='Directory written by run')
    report_parser.set_defaults(handler=cmd_report)

    plot_parser = subparsers.add_parser('plot', help='Write SVG plots and a gnuplot pair for a run directory')
    plot_parser.add_argument('run_dir', help='Directory written by run')
    plot_parser.set_defaults(handler=cmd_plot)

    presets_parser = subparsers.add_parser('presets', help='List the initial metrics and their parameters')
    presets_parser.set_defaults(handler=cmd_presets)

    args = parser.parse_args(argv)

    # Configure logging
    logging.addLevelName(OUTPUT_LOG_LEVEL, 'OUTPUT')
    level = logging.CRITICAL if args.quiet else __LOG_LEVELS[min(args.verbose, len(__LOG_LEVELS) - 1)]
    logging.basicConfig(format='%(levelname)8s - %(message)s', level=level)

    try:
        status = args.handler(args)
    except (FlowException, OSError) as e:
        logging.critical(e)
        log_info(e)
        exit(1)

    if status:
        exit(status)

if __name__ == '__main__':
    main_cli()
