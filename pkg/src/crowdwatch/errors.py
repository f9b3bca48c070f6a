"""Exception hierarchy shared by all crowdwatch modules.

The CLI maps these onto exit codes: ParameterError/ConfigError -> 2,
IngestionError -> 3, FormatError/TrainingError -> 4, EvaluationError -> 5.
"""


class CrowdwatchError(Exception):
    """Base class for all crowdwatch errors."""


class ParameterError(CrowdwatchError):
    """An argument or tunable is out of its documented range."""


class ConfigError(ParameterError):
    """A configuration file or pipeline precondition is invalid."""


class IngestionError(CrowdwatchError):
    """An input file is missing or unreadable."""


class FormatError(CrowdwatchError):
    """Input bytes or records do not match the expected format."""


class TrainingError(CrowdwatchError):
    """Training data is insufficient or degenerate."""


class EvaluationError(CrowdwatchError):
    """Evaluation preconditions are violated (e.g. a single-class label set)."""
