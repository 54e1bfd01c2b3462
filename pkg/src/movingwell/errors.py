"""Exception taxonomy.

Two families matter to callers: configuration/model errors (bad parameters,
mismatched preconditions) and numerical alarms raised while a computation is
running (norm drift, node guards, exhausted truncation). The CLI maps the
former to exit code 2 and the latter to exit code 1.
"""


class MovingWellError(Exception):
    """Base class for every error raised by this package."""


class ModelError(MovingWellError):
    """Invalid parameters or violated operation preconditions."""


class DomainMismatchError(ModelError):
    """A grid or sample point does not match the well domain at time t."""


class ScenarioError(MovingWellError):
    """Scenario file cannot be parsed or fails validation."""


class NumericalAlarm(MovingWellError):
    """A runtime numerical guard tripped; results were not produced."""


class NodeGuardError(NumericalAlarm):
    """Evaluation requested at or too close to a wavefunction node."""


class NormDriftError(NumericalAlarm):
    """Integrated state norm drifted beyond the configured alarm threshold."""


class TruncationError(NumericalAlarm):
    """Requested tolerance unreachable within the basis-size hard cap."""


class IntegrationError(NumericalAlarm):
    """The ODE integrator failed (step-size underflow or internal error)."""


class TrajectoryAbortError(NumericalAlarm):
    """A Bohmian trajectory approached a node and was aborted cleanly."""


class PostselectionError(NumericalAlarm):
    """An ensemble run produced no postselected cavities."""
