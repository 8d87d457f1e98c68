"""
Sublabel-accurate functional lifting and lifted Bregman iterations

.. include:: ../README.md

"""
from typing import TypeVar

import numpy as np
import numpy.typing as npt

T = TypeVar('T')
U = TypeVar('U')

FloatArray = npt.NDArray[np.float64]

__version__ = "0.1.0"
