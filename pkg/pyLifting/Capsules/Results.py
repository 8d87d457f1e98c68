"""
Result container capturing the first failure of a chain of stages.
"""
import logging
from typing import Any, Callable, Generic, Optional, Union

from pyLifting import T, U
from pyLifting.Capsules.Errors import LiftingError, exit_code_for
from pyLifting.Capsules.Monads import Monad

logger = logging.getLogger(__name__)


def handle_error(e: Exception) -> Exception:
    """
    Log a captured error and hand it back to the caller.

    Library errors are expected outcomes (bad flags, solver divergence) and
    are logged as one line; anything else is logged with its traceback.
    """
    if isinstance(e, LiftingError):
        logger.error(f"{type(e).__name__}: {e}")
    else:
        logger.error(f"unexpected {type(e).__name__}: {e}", exc_info=e)
    return e


class Encapsulate(Monad, Generic[T]):
    """
    Container that handles errors. Executes a function on the value; if an
    exception is raised, the returned container has value `None` and holds
    the exception, and later functions are skipped.

    ```python
    result = Encapsulate(cfg) >> prepare >> execute

    result.unwrap()       # raises the captured exception, if any
    result.unwrap_or(0)   # falls back to 0 on failure
    result.exit_code      # 0, or the exit status of the captured error
    ```
    """

    def __init__(self, value: Optional[T], exception: Optional[Exception] = None) -> None:
        """
        Create Encapsulate container with value and exception
        (one of which will always be None)
        """
        super().__init__(value)
        self.exception = exception

    def bind(self, func: Callable[[T], Any]) -> "Encapsulate":
        """
        Execute function on value. If an exception already exists, the
        function won't be executed.
        """
        if self.exception is not None:
            return self
        try:
            return Encapsulate(func(self.value))
        except Exception as e:
            return Encapsulate(None, handle_error(e))

    def unwrap(self) -> T:
        """
        If an exception was captured, raise it. Otherwise evaluate to value.
        """
        if self.exception is not None:
            raise self.exception
        return self.value

    def unwrap_or(self, value: U) -> Union[T, U]:
        """
        If an exception was captured, default to the given value.
        """
        if self.exception is not None:
            return value
        return self.value

    @property
    def exit_code(self) -> int:
        """
        Process exit status for this result.
        """
        if self.exception is None:
            return 0
        return exit_code_for(self.exception)

    def __str__(self) -> str:
        """
        Custom string representation
        """
        if self.exception is not None:
            return f"{self.__class__.__name__}({self.exception})"
        return f"{self.__class__.__name__}({self.value})"
