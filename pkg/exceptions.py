from typing import Optional


class RobustPRError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(RobustPRError, ValueError):
    """Lengths or shapes do not agree, or a dimension is not positive."""


class InvalidBudgetError(RobustPRError, ValueError):
    """Sparsity budget outside [0, len(w)]."""


class InvalidParameterError(RobustPRError, ValueError):
    """A fraction, level or count lies outside its admissible range."""


class DivergenceError(RobustPRError, ArithmeticError):
    def __init__(self, iteration: int, message: Optional[str] = None):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


class ArtifactIOError(RobustPRError, OSError):
    def __init__(self, path, message: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class UnsupportedFormatError(RobustPRError, ValueError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"unsupported image format: {self.path}")


class UsageError(RobustPRError, ValueError):
    """Bad command-line input; the message names the offending flag."""
