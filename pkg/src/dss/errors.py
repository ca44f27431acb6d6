from typing import Dict, Optional


class DssError(Exception):
    """
    Base class for every error raised on purpose by the simulator, the learner
    and the command-line tools.
    """


class ConfigError(DssError, ValueError):
    """
    An invalid scenario, run configuration or hyper-parameter value.
    """


class DomainError(DssError, ValueError):
    """
    A model was evaluated outside the range where it is valid.
    """


class DimensionError(DssError, ValueError):
    """
    A tensor or action index does not match the configured network shape.
    """


class EpisodeFinishedError(DssError, RuntimeError):
    """
    The environment was stepped after its last subframe.
    """


class NonFiniteLossError(DssError):
    """
    The training loss became NaN or infinite.

    :ivar diagnostics: Loss components and batch statistics at the failing step.
    :vartype diagnostics: Dict
    """

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CheckpointError(DssError):
    """
    A checkpoint file is missing, truncated or has a bad header.
    """


class OracleBudgetError(DssError):
    """
    The oracle planner explored more nodes than its budget allows.
    """


class ResultsSchemaError(DssError):
    """
    A results CSV has a missing or unsupported schema version.
    """


class EmptyReplayError(DssError, RuntimeError):
    """
    A batch was requested from a replay buffer holding no trajectory.
    """
