"""Exception hierarchy for the whole toolkit.

Three branches map onto the CLI exit codes: configuration problems (2),
data-contract violations (3), and failures inside a pipeline stage (4).
"""


class StressKitError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(StressKitError):
    """A configuration value is missing, unknown, or out of its domain."""


class DataError(StressKitError):
    """Input data violates an operation's contract."""


class StageError(StressKitError):
    """A pipeline stage could not produce its output."""


# --- configuration -----------------------------------------------------------

class InvalidSpec(ConfigError):
    """Synthetic-data spec violates its invariants."""


class UnknownParam(ConfigError):
    """Hyperparameter name not declared for this model kind."""


class InvalidParamValue(ConfigError):
    """Hyperparameter value outside its declared domain."""


class UnsupportedModel(ConfigError):
    """Model kind cannot be trained by this package."""


# --- data --------------------------------------------------------------------

class MissingLabelColumn(DataError):
    """CSV header lacks the requested label column."""


class NonFiniteValue(DataError):
    """A CSV cell failed to parse as a finite number."""

    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-finite or unparseable value at row {row}, column {col!r}")


class EmptyDataset(DataError):
    """No data rows were found."""


class DuplicateFeatureName(DataError):
    """Two columns share a name."""


class InvalidDataset(DataError):
    """Matrix/label arrays violate the dataset invariants."""


class ClassTooSmall(DataError):
    """A class has too few samples for the requested operation."""


class ClassTooSmallForK(DataError):
    """A class has fewer than k+1 samples, so k neighbours do not exist."""


class UnknownClass(DataError):
    """Requested class id is not present in the dataset."""


class SeriesTooShort(DataError):
    """Signal is too short for the requested windowing."""


class ConstantSignal(DataError):
    """Operation undefined on a constant signal."""


class WindowTooSmall(DataError):
    """Window spans fewer samples than the operation requires."""


class NonPositiveInput(DataError):
    """Value must be strictly positive."""


class MismatchedDuration(DataError):
    """Channels do not cover the same time span."""


class TooFewRows(DataError):
    """Operation needs more rows than the dataset has."""


class AllFeaturesFiltered(DataError):
    """Correlation filter removed every feature."""


class SingleClassTraining(DataError):
    """Training data contains fewer than two classes."""


class WidthMismatch(DataError):
    """Feature-vector width differs from the fitted model's."""


class LengthMismatch(DataError):
    """Paired label arrays differ in length."""


class LabelOutOfRange(DataError):
    """A label is outside {0..C-1}."""


class EmptyMatrix(DataError):
    """Confusion matrix has zero total count."""


class ClassSmallerThanK(DataError):
    """A class has fewer samples than the number of folds."""


class SubjectTooSmall(DataError):
    """Subject has too few rows for a within-subject evaluation."""

    def __init__(self, subject_id, n_rows):
        self.subject_id = subject_id
        self.n_rows = n_rows
        super().__init__(f"subject {subject_id!r} has only {n_rows} rows (need >= 10)")


# --- stages ------------------------------------------------------------------

class AllCandidatesFailed(StageError):
    """Every grid-search candidate failed to fit."""


class PipelineStageError(StageError):
    """Wraps an error with the name of the stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
