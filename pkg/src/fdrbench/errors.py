"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateTrainingError(RuntimeError):
    """Training data contains a single class; no score function can be fit."""


class DegenerateSurrogateError(DegenerateTrainingError):
    """Queried labels are all-zero or all-one; no surrogate can be trained."""


class AttackInitializationError(RuntimeError):
    """No starting adversarial candidates were supplied to the attack."""


class DatasetFormatError(ValueError):
    """A data file could not be parsed; message carries row/column context."""


class DatasetSizeError(ValueError):
    """The source pools are too small for the requested split sizes."""


class UsageError(ValueError):
    """Bad CLI or config usage (unknown format, missing key, ...)."""
