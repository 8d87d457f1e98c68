"""
Exceptions raised by pyLifting.

Every class carries the exit status the command line reports for it.
"""
from typing import Optional, Tuple


class LiftingError(Exception):
    """
    Base class for all library errors.
    """

    exit_code: int = 1


class ConfigError(LiftingError, ValueError):
    """
    Invalid run or solver configuration.
    """

    exit_code = 2


class LabelRangeError(LiftingError, ValueError):
    """
    A scalar value lies outside the label range [gamma_1, gamma_L].
    """

    exit_code = 2


class DimensionError(LiftingError, ValueError):
    """
    Array shapes do not match the pixel grid or the label space.
    """

    exit_code = 2


class DataTermError(LiftingError):
    """
    A cost sampler produced a value that is not a finite cost.
    """

    exit_code = 2

    def __init__(self, message: str, pixel: Optional[Tuple[int, ...]] = None) -> None:
        super().__init__(message)
        self.pixel = pixel


class SceneError(LiftingError):
    """
    Synthetic scene shapes overlap or do not fit into the grid.
    """

    exit_code = 2


class UsageError(LiftingError):
    """
    A brute-force oracle was asked for an instance beyond its size caps.
    """

    exit_code = 2


class PgmParseError(LiftingError):
    """
    Malformed or unsupported PGM data.
    """

    exit_code = 2

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ImageIOError(LiftingError):
    """
    Reading or writing an output file failed.
    """

    exit_code = 2

    def __init__(self, message: str, path: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class SolverError(LiftingError):
    """
    A solver diverged or an inner proximal solve did not converge.
    """

    exit_code = 3

    def __init__(
        self,
        message: str,
        pixel: Optional[int] = None,
        step: Optional[int] = None,
    ) -> None:
        super().__init__(message)
        self.pixel = pixel
        self.step = step


class IntegralityError(SolverError):
    """
    Too many pixels of a lifted iterate are not sublabel-integral.
    """


def exit_code_for(error: BaseException) -> int:
    """
    Exit status for an exception escaping a command.
    """
    if isinstance(error, LiftingError):
        return error.exit_code
    return 1
