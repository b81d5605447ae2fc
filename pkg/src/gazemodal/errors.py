"""Exception hierarchy shared by every gazemodal package."""

from pathlib import Path
from typing import Optional, Union


class GazeModalError(Exception):
    """Base class for all gazemodal errors."""


class DimensionError(GazeModalError, ValueError):
    """Array shapes do not conform."""

    def __init__(self, message: str, axis: Optional[Union[int, str]] = None):
        self.axis = axis
        if axis is not None:
            message = f"{message} (axis {axis})"
        super().__init__(message)


class EmptyInputError(GazeModalError, ValueError):
    """An operation received an empty sequence."""


class ArgumentError(GazeModalError, ValueError):
    """An argument is outside its valid range."""


class UndefinedMetricError(GazeModalError, ValueError):
    """A metric is undefined for the given inputs."""


class ConfigError(GazeModalError):
    """Malformed or unknown configuration."""


class DataError(GazeModalError):
    """Base class for dataset problems."""


class DatasetLoadError(DataError):
    """A study or dataset file could not be loaded."""

    def __init__(
        self,
        message: str,
        study_id: Optional[str] = None,
        path: Optional[Union[str, Path]] = None,
    ):
        self.reason = message
        self.study_id = study_id
        self.path = Path(path) if path is not None else None
        context = []
        if study_id is not None:
            context.append(f"study {study_id}")
        if path is not None:
            context.append(f"path {path}")
        super().__init__(f"{message} ({', '.join(context)})" if context else message)


class MissingModalityError(DataError):
    """A record lacks an input the architecture requires."""


class ExperimentError(DataError):
    """A cross-validation run failed inside a fold."""

    def __init__(self, message: str, fold: Optional[int] = None):
        self.fold = fold
        super().__init__(f"fold {fold}: {message}" if fold is not None else message)
