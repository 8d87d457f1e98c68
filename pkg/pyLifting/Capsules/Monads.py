"""
The base container for chaining computation stages.
"""

import logging
from typing import Any, Callable, Generic

from pyLifting import T

logger = logging.getLogger(__name__)


class Monad(Generic[T]):
    """
    Identity container (also the parent class of `Encapsulate`).

    No additional work is handled on function calls, apart from returning
    a new container with an updated value.

    ```python
    def build_space(cfg):
        return LabelSpace.uniform(cfg.gamma_min, cfg.gamma_max, cfg.labels)

    x = Monad(cfg) >> build_space

    x.unwrap()
    # LabelSpace(labels=(0.0, 0.333..., 0.666..., 1.0))
    ```
    """

    def __init__(self, value: T) -> None:
        """
        Initialise a container with the given value
        """
        self.value: T = value

    def bind(self, func: Callable[[T], Any]) -> "Monad":
        """
        Apply `func` to the contained value and wrap the result.

        ```python
        Monad(2).bind(lambda x: x + 1).unwrap() == 3
        ```
        """
        return Monad(func(self.value))

    def __rshift__(self, other: Callable[[T], Any]) -> "Monad":
        """
        Dunder method to alias bind into >>
        """
        return self.bind(other)

    def unwrap(self) -> T:
        """
        Return only the value of the container without wrapping it.

        ```python
        Monad(4).unwrap() == 4
        ```
        """
        return self.value

    def __str__(self) -> str:
        """
        String representation
        """
        return f"{self.__class__.__name__}({self.value})"

    def __repr__(self) -> str:
        """
        For repls
        """
        return self.__str__()
