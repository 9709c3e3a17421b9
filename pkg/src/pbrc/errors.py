"""Exception hierarchy shared by all pbrc modules.

Two branches: ``NumericError`` for linear-algebra and model-construction
failures, ``DataError`` for everything wrong with datasets and labels. The
CLI maps each branch to a distinct exit code.
"""


class PbrcError(Exception):
    """Base class for all pbrc errors."""


class NumericError(PbrcError):
    """Base class for numerical failures."""


class DimensionError(NumericError):
    """Shapes of the operands do not agree."""


class ConvergenceError(NumericError):
    """Iteration did not converge; carries the best estimate reached."""

    def __init__(self, message, best_estimate):
        super().__init__(message, best_estimate)
        self.best_estimate = best_estimate

    def __str__(self):
        return self.args[0]


class DegenerateMatrixError(NumericError):
    """Matrix has no usable spectrum (e.g. spectral radius zero)."""


class SingularMatrixError(NumericError):
    """System matrix is singular or numerically indefinite."""


class DegenerateTaskError(NumericError):
    """Classification task is degenerate (fewer than two classes)."""


class EncodingError(PbrcError):
    """A sequence failed to encode; carries the sample id."""

    def __init__(self, sample_id, detail):
        super().__init__(sample_id, detail)
        self.sample_id = sample_id

    def __str__(self):
        return f"encoding failed for sample {self.sample_id!r}: {self.args[1]}"


class DataError(PbrcError):
    """Base class for dataset and label errors."""


class SchemaError(DataError):
    """Record does not match the manifest schema."""


class ParseError(DataError):
    """Malformed on-disk record; carries the 1-based line number."""

    def __init__(self, line_number, detail):
        super().__init__(line_number, detail)
        self.line_number = line_number

    def __str__(self):
        return f"line {self.line_number}: {self.args[1]}"


class IntegrityError(DataError):
    """Dataset-level inconsistency (duplicate ids, broken split refs)."""


class EmptyInputError(DataError):
    """Input that must be nonempty is empty."""


class UnknownLabelError(DataError):
    """Evaluation labels not present in the model; carries the offenders."""

    def __init__(self, labels):
        super().__init__(sorted(labels))
        self.labels = sorted(labels)

    def __str__(self):
        return f"labels not known to the model: {', '.join(map(repr, self.labels))}"
