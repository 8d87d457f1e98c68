from pyLifting.Capsules.Errors import (
    ConfigError,
    DataTermError,
    DimensionError,
    ImageIOError,
    IntegralityError,
    LabelRangeError,
    LiftingError,
    PgmParseError,
    SceneError,
    SolverError,
    UsageError,
    exit_code_for,
)
from pyLifting.Capsules.Monads import Monad
from pyLifting.Capsules.Results import Encapsulate, handle_error
