from __future__ import annotations
from dataclasses import dataclass, fields
from typing import Any, Callable
from .flow_exception import ConfigError
from .flow_solver import MAX_CFL, FlowConfig
from .presets import PRESETS, PRESET_NAMES
from .util import parse_float_expr, parse_int, parse_bool, parse_grid_list, parse_float_list, compose_float_list

PRESET_PARAMETERS = ('s_max', 'amp', 'mode', 'beta')


@dataclass(frozen=True)
class HarnessConfig:
    """Everything a harness command needs: the flow settings, monitor toggles and output options

    Optional values left as None take their documented defaults at run time
    (preset parameters from the preset, delta and epsilon from the initial
    pinching, study_time from the estimated blow-up time).
    """

    preset: str
    s_max: float | None = None
    amp: float | None = None
    mode: float | None = None
    beta: float | None = None
    n_cells: int = 256
    cfl: float = 0.25
    t_end: float | None = None
    r_stop: float = 1000.0
    record_every: int = 20
    snapshot_every: int = 1
    max_steps: int = 2000000
    origin_tolerance: float = 1e-3
    boundary_tolerance: float = 1e-10
    delta: float | None = None
    epsilon: float | None = None
    thetas: tuple[float, ...] = (0.1, 0.05)
    monitor_identities: bool = True
    monitor_pinching: bool = True
    monitor_gradient: bool = True
    output_dir: str = 'out'
    emit_csv: bool = True
    emit_json: bool = True
    emit_plots: bool = True
    study_time: float | None = None
    n_list: tuple[int, ...] = (64, 128, 256)

    def preset_params(self) -> dict[str, float]:
        return {key: getattr(self, key) for key in PRESET_PARAMETERS if getattr(self, key) is not None}

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            preset=self.preset,
            preset_params=self.preset_params(),
            n_cells=self.n_cells,
            cfl_factor=self.cfl,
            t_end=self.t_end,
            r_stop=self.r_stop,
            record_every=self.record_every,
            snapshot_every=self.snapshot_every,
            max_steps=self.max_steps,
            origin_tolerance=self.origin_tolerance,
            boundary_tolerance=self.boundary_tolerance,
            delta=self.delta,
            monitor_identities=self.monitor_identities,
            monitor_pinching=self.monitor_pinching,
            monitor_gradient=self.monitor_gradient
        )


def _optional(parser: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(value: str) -> Any:
        return None if value.strip().lower() == 'none' else parser(value)
    return parse


def _compose_optional(value: Any) -> str:
    return 'none' if value is None else repr(value)


def _compose_bool(value: bool) -> str:
    return 'true' if value else 'false'


__KEY_METAS = {
    'preset': {'parser': lambda v: v.strip(), 'composer': str},
    's_max': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'amp': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'mode': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'beta': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'n_cells': {'parser': parse_int, 'composer': str},
    'cfl': {'parser': parse_float_expr, 'composer': repr},
    't_end': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'r_stop': {'parser': parse_float_expr, 'composer': repr},
    'record_every': {'parser': parse_int, 'composer': str},
    'snapshot_every': {'parser': parse_int, 'composer': str},
    'max_steps': {'parser': parse_int, 'composer': str},
    'origin_tolerance': {'parser': parse_float_expr, 'composer': repr},
    'boundary_tolerance': {'parser': parse_float_expr, 'composer': repr},
    'delta': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'epsilon': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'thetas': {'parser': lambda v: tuple(parse_float_list(v)), 'composer': compose_float_list},
    'monitor_identities': {'parser': parse_bool, 'composer': _compose_bool},
    'monitor_pinching': {'parser': parse_bool, 'composer': _compose_bool},
    'monitor_gradient': {'parser': parse_bool, 'composer': _compose_bool},
    'output_dir': {'parser': lambda v: v.strip(), 'composer': str},
    'emit_csv': {'parser': parse_bool, 'composer': _compose_bool},
    'emit_json': {'parser': parse_bool, 'composer': _compose_bool},
    'emit_plots': {'parser': parse_bool, 'composer': _compose_bool},
    'study_time': {'parser': _optional(parse_float_expr), 'composer': _compose_optional},
    'n_list': {'parser': lambda v: tuple(parse_grid_list(v)), 'composer': lambda v: ','.join(str(n) for n in v)},
}

CONFIG_KEYS = tuple(f.name for f in fields(HarnessConfig))


def _validate(values: dict[str, Any], lines: dict[str, int]) -> None:
    def fail(key: str, msg: str) -> None:
        raise ConfigError(msg, line=lines.get(key), key=key)

    preset = values.get('preset')
    if not preset:
        fail('preset', 'a preset is required, expected one of {}'.format(', '.join(PRESET_NAMES)))
    if preset not in PRESETS:
        fail('preset', 'unknown preset \"{}\", expected one of {}'.format(preset, ', '.join(PRESET_NAMES)))
    for key in PRESET_PARAMETERS:
        if values.get(key) is not None and key not in PRESETS[preset].defaults:
            fail(key, 'preset {} takes no parameter {}'.format(preset, key))

    if 'cfl' in values and not (0.0 < values['cfl'] <= MAX_CFL):
        fail('cfl', 'must lie in (0, {}]'.format(MAX_CFL))
    for key in ('t_end', 'r_stop', 'origin_tolerance', 'boundary_tolerance', 'study_time'):
        if values.get(key) is not None and not values[key] > 0.0:
            fail(key, 'must be positive')
    for key in ('n_cells', 'record_every', 'snapshot_every', 'max_steps'):
        if key in values and values[key] < 1:
            fail(key, 'must be at least 1')
    if values.get('delta') is not None and not (0.0 <= values['delta'] <= 0.5):
        fail('delta', 'must lie in [0, 0.5]')
    if values.get('epsilon') is not None and not (0.0 < values['epsilon'] <= 1.0 / 3.0):
        fail('epsilon', 'must lie in (0, 1/3]')
    if 'thetas' in values and (not values['thetas'] or any(not (0.0 < t < 1.0) for t in values['thetas'])):
        fail('thetas', 'every theta must lie in (0, 1)')


def parse_config(text: str) -> HarnessConfig:
    """Parse a plain-text harness configuration

    One `key = value` per line; `#` starts a comment. Keys that are not
    given take their defaults; `none` clears an optional value.

    Args:
        text (str): configuration text

    Raises:
        ConfigError: on an unknown or repeated key, an unparsable value or a
        value outside its range; the error names the line and the key

    Returns:
        HarnessConfig: parsed configuration
    """

    values = {}
    lines = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('expected \"key = value\"', line=number)

        key, value = (part.strip() for part in line.split('=', 1))
        if key not in __KEY_METAS:
            raise ConfigError('unknown key', line=number, key=key)
        if key in values:
            raise ConfigError('key given twice (first on line {})'.format(lines[key]), line=number, key=key)

        try:
            values[key] = __KEY_METAS[key]['parser'](value)
        except ValueError as e:
            raise ConfigError(str(e), line=number, key=key) from e
        lines[key] = number

    _validate(values, lines)
    return HarnessConfig(**values)


def serialize_config(config: HarnessConfig) -> str:
    """Write every key of config, one per line, so that parse_config reads it back unchanged"""

    return ''.join('{} = {}\n'.format(key, __KEY_METAS[key]['composer'](getattr(config, key))) for key in CONFIG_KEYS)
