from __future__ import annotations
from typing import Any


class FlowException(Exception):
    """Exception thrown when an error occurs during flow, monitor or harness operations"""

    def __init__(self, *args: object, **kwargs: Any) -> None:
        super().__init__(*args)

        self.node = kwargs.get('node', None)
        self.value = kwargs.get('value', None)
        self.action_description = kwargs.get('action_description', None)

    def __str__(self) -> str:
        msg = super().__str__()

        context = []
        if self.action_description is not None:
            context.append('during {}'.format(self.action_description))
        if self.node is not None:
            context.append('at node {}'.format(self.node))
        if self.value is not None:
            context.append('value {:.6g}'.format(self.value))

        if context:
            msg += ' ({})'.format(', '.join(context))

        return msg


class InvalidInputError(FlowException, ValueError):
    """Exception thrown when an operation receives arguments outside its domain"""


class DegenerateMetricError(FlowException):
    """Exception thrown when the sphere radius profile collapses or becomes non-finite

    The last state that still satisfied the metric invariants is kept in
    `last_valid` so a run can record it instead of throwing it away.
    """

    def __init__(self, *args: object, last_valid: Any = None, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.last_valid = last_valid


class PinchingUndefinedError(FlowException):
    """Exception thrown when a scale-invariant ratio needs R > 0 and R <= 0 somewhere"""


class PresetRejectedError(FlowException):
    """Exception thrown when a preset parameter combination violates the positivity screen"""


class FitWindowError(FlowException):
    """Exception thrown when a trace does not span enough curvature growth to fit a power law"""


class StudyAbortedError(FlowException):
    """Exception thrown when a run inside a convergence study fails before the sample time

    The rows that did complete are kept in `partial`.
    """

    def __init__(self, *args: object, partial: Any = None, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.partial = partial


class ConfigError(FlowException):
    """Exception thrown when a harness configuration cannot be parsed or validated"""

    def __init__(self, *args: object, line: int | None = None, key: str | None = None, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.line = line
        self.key = key

    def __str__(self) -> str:
        msg = super().__str__()
        if self.key is not None:
            msg = 'key \"{}\": {}'.format(self.key, msg)
        if self.line is not None:
            msg = 'line {}: {}'.format(self.line, msg)
        return msg


class SchemaError(FlowException):
    """Exception thrown when a persisted trace, snapshot or report does not match its schema"""

    def __init__(self, *args: object, path: str | None = None, row: int | None = None, field: str | None = None, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.path = path
        self.row = row
        self.field = field

    def __str__(self) -> str:
        msg = super().__str__()
        location = []
        if self.path is not None:
            location.append(str(self.path))
        if self.row is not None:
            location.append('row {}'.format(self.row))
        if self.field is not None:
            location.append('field \"{}\"'.format(self.field))
        if location:
            msg = '{}: {}'.format(', '.join(location), msg)
        return msg
