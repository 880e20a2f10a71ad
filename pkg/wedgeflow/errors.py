"""Exception hierarchy shared by the services and the CLI."""


class WedgeflowError(Exception):
    """Base class for every error raised on purpose by wedgeflow."""

    exit_code = 1


class ConfigError(WedgeflowError):
    """Run configuration text or values are invalid.

    ``messages`` follows the marshmallow layout: field path -> list of messages.
    """

    exit_code = 2

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = {"_schema": [messages]}
        self.messages = messages
        super().__init__(self.describe())

    def describe(self):
        lines = []
        for field, errors in sorted(_flatten(self.messages).items()):
            for error in errors:
                lines.append(f"{field}: {error}")
        return "; ".join(lines) or "invalid configuration"


def _flatten(messages, prefix=""):
    flat = {}
    if isinstance(messages, dict):
        for key, value in messages.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            flat.update(_flatten(value, path))
    elif isinstance(messages, list | tuple):
        if all(isinstance(m, str) for m in messages):
            flat[prefix or "_schema"] = list(messages)
        else:
            for index, value in enumerate(messages):
                flat.update(_flatten(value, f"{prefix}[{index}]"))
    else:
        flat[prefix or "_schema"] = [str(messages)]
    return flat


class RegimeError(WedgeflowError):
    """A state left the x-supersonic regime where the eigensystem is defined."""


class ShockSolveError(WedgeflowError):
    """No admissible downstream state exists for a prescribed shock slope."""


class WaveKindError(WedgeflowError, ValueError):
    """An operation received a wave of the wrong kind."""


class RiemannSolveError(WedgeflowError):
    """A Riemann solver failed to converge or to bracket its unknowns."""


class StructuralFailure(WedgeflowError):
    """The flow left the perturbative regime the construction is valid in.

    ``context`` describes the event being processed; ``history`` holds the run
    history up to the last valid snapshot when raised from a run.
    """

    exit_code = 3

    def __init__(self, message, context=None, history=None):
        super().__init__(message)
        self.context = context or {}
        self.history = history


class MonitorViolation(WedgeflowError):
    """A monitored inequality or oracle identity failed under --strict."""

    exit_code = 4


EXIT_CODES = {
    "ok": 0,
    "config": ConfigError.exit_code,
    "structural": StructuralFailure.exit_code,
    "monitor": MonitorViolation.exit_code,
}
