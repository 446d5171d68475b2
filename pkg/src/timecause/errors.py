"""Exception hierarchy shared across the package.

Every error raised by timecause derives from :class:`TimecauseError`.
The CLI maps these onto exit codes: configuration problems exit 2,
file/parse problems exit 3, degenerate data exits 4.
"""


class TimecauseError(Exception):
    """Base class for all timecause errors."""


class ConfigError(TimecauseError, ValueError):
    """Invalid parameter or violated precondition."""


class LagTooLarge(ConfigError):
    """Requested lag consumes an entire trajectory."""


class TooFewTrajectories(ConfigError):
    """Fewer trajectories than cross-fitting folds."""


class IndexOutOfRange(ConfigError):
    """Variable or column index outside the panel layout."""


class EmptyPanel(ConfigError):
    """Panel contains no trajectories."""


class ShapeMismatch(TimecauseError, ValueError):
    """Array dimensions disagree with the fitted/declared layout."""


class DomainError(TimecauseError, ValueError):
    """Argument outside a special function's domain."""


class ConvergenceError(TimecauseError):
    """Iterative evaluation failed to converge within its cap."""


class SingularSystem(TimecauseError):
    """Regularized kernel system unsolvable even after jitter escalation."""


class TooFewSamples(TimecauseError, ValueError):
    """Statistic requires at least two samples."""


class DegenerateCandidate(TimecauseError):
    """Candidate's lagged columns carry no variance in any training fold."""


class DegenerateData(TimecauseError):
    """Input data admits no meaningful test at all."""


class DegenerateLabels(TimecauseError, ValueError):
    """Ranking labels are all-positive or all-negative."""


class ParseError(TimecauseError, ValueError):
    """Malformed input file; carries file position context."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class InconsistentSchema(ParseError):
    """File rows disagree with the declared header/layout."""


class UnevenTrajectories(ParseError):
    """Trajectory blocks in an expression file have unequal lengths."""


class UnknownGene(ParseError):
    """Gold-standard edge references a gene absent from the expression header."""


class SchemaVersionMismatch(ParseError):
    """Serialized report was written with an unsupported schema version."""
