from .flow_exception import FlowException, DegenerateMetricError, PresetRejectedError, ConfigError, SchemaError, StudyAbortedError
import logging

def log_info(ex: FlowException | OSError) -> None:
    if isinstance(ex, DegenerateMetricError):
        logging.info('the sphere radius collapsed before the curvature threshold was reached. Try a finer grid or a lower r_stop.')
    elif isinstance(ex, PresetRejectedError):
        logging.info('this error typically indicates a perturbation that is too strong. Lower amp or mode until Ric > 0 everywhere.')
    elif isinstance(ex, ConfigError):
        logging.info('run "umbilic-flow presets" to list presets and their parameters.')
    elif isinstance(ex, SchemaError):
        logging.info('the trace directory must hold trace.csv, config.txt and the snapshots/ written by "umbilic-flow run".')
    elif isinstance(ex, StudyAbortedError):
        if ex.partial is not None and len(ex.partial.rows) > 0:
            logging.info('{} grid(s) completed before the failure; their rows were kept.'.format(len(ex.partial.rows)))
    elif isinstance(ex, OSError):
        logging.info('check that the output directory exists and is writable.')
