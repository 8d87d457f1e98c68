"""
Label space, sublabel coordinates, and the maps between scalar values and
lifted vectors.

A label space with labels gamma_1 < ... < gamma_L splits the range into
l = L - 1 intervals. A value gamma_i + alpha (gamma_{i+1} - gamma_i) is lifted
to the vector 1_i^alpha in R^l: i - 1 ones, alpha, then zeros.

```python
space = LabelSpace((0.0, 0.5, 1.0))
lift_scalar(space, 0.75)            # array([1. , 0.5])
project_lifted(space, [1.0, 0.5])   # 0.75
```
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, DimensionError, LabelRangeError

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-3

LiftedVector = FloatArray


@dataclass(frozen=True)
class LabelSpace:
    """
    Ordered label grid gamma_1 < ... < gamma_L.
    """

    labels: Tuple[float, ...]

    def __post_init__(self) -> None:
        labels = tuple(float(g) for g in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ConfigError(f"a label space needs at least 2 labels, got {len(labels)}")
        if not all(np.isfinite(labels)):
            raise ConfigError(f"labels must be finite: {labels}")
        if any(b <= a for a, b in zip(labels, labels[1:])):
            raise ConfigError(f"labels must be strictly increasing: {labels}")

    @classmethod
    def uniform(cls, gamma_min: float, gamma_max: float, count: int) -> "LabelSpace":
        """
        `count` equally spaced labels spanning [gamma_min, gamma_max].
        """
        if count < 2:
            raise ConfigError(f"a label space needs at least 2 labels, got {count}")
        if not gamma_max > gamma_min:
            raise ConfigError(f"empty label range [{gamma_min}, {gamma_max}]")
        return cls(tuple(np.linspace(gamma_min, gamma_max, count)))

    @property
    def L(self) -> int:
        """Number of labels."""
        return len(self.labels)

    @property
    def l(self) -> int:  # noqa: E743
        """Number of intervals, the dimension of a lifted vector."""
        return len(self.labels) - 1

    @property
    def gamma(self) -> FloatArray:
        """
        The labels gamma_1 < ... < gamma_L as a float array.
        """
        return np.asarray(self.labels, dtype=float)

    @property
    def gamma_tilde(self) -> FloatArray:
        """
        Interval widths gamma_{i+1} - gamma_i, i = 1..l.
        """
        return np.diff(self.gamma)

    @property
    def gamma_min(self) -> float:
        return self.labels[0]

    @property
    def gamma_max(self) -> float:
        return self.labels[-1]


@dataclass(frozen=True)
class SublabelCoord:
    """
    Interval index i (1-based, 1..l) and fraction alpha in [0, 1].
    """

    i: int
    alpha: float

    def __post_init__(self) -> None:
        if self.i < 1:
            raise ConfigError(f"interval index must be >= 1, got {self.i}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")


def value_of(space: LabelSpace, c: SublabelCoord) -> float:
    """
    gamma_i + alpha (gamma_{i+1} - gamma_i).
    """
    if c.i > space.l:
        raise ConfigError(f"interval index {c.i} exceeds l = {space.l}")
    lo, hi = space.labels[c.i - 1], space.labels[c.i]
    return lo + c.alpha * (hi - lo)


def indicator(space: LabelSpace, c: SublabelCoord) -> LiftedVector:
    """
    The lifted vector 1_i^alpha.
    """
    if c.i > space.l:
        raise ConfigError(f"interval index {c.i} exceeds l = {space.l}")
    u = np.zeros(space.l)
    u[: c.i - 1] = 1.0
    u[c.i - 1] = c.alpha
    return u


def coord_of(space: LabelSpace, t: float) -> SublabelCoord:
    """
    Sublabel coordinate of t on half-open intervals [gamma_i, gamma_{i+1});
    the top label maps to (l, 1).
    """
    _check_range(space, np.asarray(t, dtype=float))
    i = int(np.searchsorted(space.gamma, t, side="right"))
    i = min(max(i, 1), space.l)
    lo, hi = space.labels[i - 1], space.labels[i]
    alpha = float(np.clip((t - lo) / (hi - lo), 0.0, 1.0))
    return SublabelCoord(i, alpha)


def lift_scalar(space: LabelSpace, t: float) -> LiftedVector:
    """
    The unique sublabel-integral vector projecting to t.
    """
    return indicator(space, coord_of(space, t))


def project_lifted(space: LabelSpace, u: Union[Sequence[float], FloatArray]) -> float:
    """
    gamma_1 + <u, gamma_tilde>.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (space.l,):
        raise DimensionError(f"lifted vector must have length {space.l}, got shape {u.shape}")
    return float(space.gamma_min + u @ space.gamma_tilde)


def integrality_check(
    u: Union[Sequence[float], FloatArray], eps: float = DEFAULT_EPS
) -> Tuple[bool, Optional[SublabelCoord]]:
    """
    Whether u is within componentwise distance eps of some 1_i^alpha.

    i is the index of the first entry below 1 - eps (l if there is none)
    and alpha is entry i clamped to [0, 1].
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    u = np.asarray(u, dtype=float)
    below = np.flatnonzero(u < 1.0 - eps)
    i = int(below[0]) + 1 if below.size else u.size
    head_ok = np.all(np.abs(u[: i - 1] - 1.0) <= eps)
    tail_ok = np.all(np.abs(u[i:]) <= eps)
    mid_ok = -eps <= u[i - 1] <= 1.0 + eps
    if head_ok and tail_ok and mid_ok:
        return True, SublabelCoord(i, float(np.clip(u[i - 1], 0.0, 1.0)))
    return False, None


def round_to_integral(space: LabelSpace, u: Union[Sequence[float], FloatArray]) -> LiftedVector:
    """
    Nearest sublabel-integral vector in label value: the lift of the clamped
    projection of u.
    """
    t = np.clip(project_lifted(space, u), space.gamma_min, space.gamma_max)
    return lift_scalar(space, float(t))


def lift_field(space: LabelSpace, t: FloatArray) -> FloatArray:
    """
    Lift a scalar field of any shape to shape (..., l).
    """
    t = np.asarray(t, dtype=float)
    _check_range(space, t)
    lower = space.gamma[:-1]
    return np.clip((t[..., None] - lower) / space.gamma_tilde, 0.0, 1.0)


def project_field(space: LabelSpace, u: FloatArray) -> FloatArray:
    """
    Project a lifted field of shape (..., l) to a scalar field.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != space.l:
        raise DimensionError(f"lifted field must end in an axis of length {space.l}, got {u.shape}")
    return space.gamma_min + u @ space.gamma_tilde


def round_field(space: LabelSpace, u: FloatArray) -> FloatArray:
    """
    `round_to_integral` applied to every pixel of a lifted field.
    """
    t = np.clip(project_field(space, u), space.gamma_min, space.gamma_max)
    return lift_field(space, t)


def integrality_field(
    u: FloatArray, eps: float = DEFAULT_EPS
) -> Tuple[np.ndarray, np.ndarray, FloatArray]:
    """
    `integrality_check` for every pixel of a lifted field of shape (..., l).

    Returns the boolean mask of integral pixels, the 1-based interval index
    and the clamped alpha; index and alpha are meaningful where the mask holds.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    u = np.asarray(u, dtype=float)
    l = u.shape[-1]
    below = u < 1.0 - eps
    i = np.where(below.any(axis=-1), below.argmax(axis=-1) + 1, l)
    k = np.arange(1, l + 1)
    head = k < i[..., None]
    tail = k > i[..., None]
    mid = np.take_along_axis(u, (i - 1)[..., None], axis=-1)[..., 0]
    ok = (
        np.all(np.where(head, np.abs(u - 1.0) <= eps, True), axis=-1)
        & np.all(np.where(tail, np.abs(u) <= eps, True), axis=-1)
        & (mid >= -eps)
        & (mid <= 1.0 + eps)
    )
    return ok, i, np.clip(mid, 0.0, 1.0)


def _check_range(space: LabelSpace, t: FloatArray) -> None:
    if t.size and (np.any(~np.isfinite(t)) or t.min() < space.gamma_min or t.max() > space.gamma_max):
        bad = t[(~np.isfinite(t)) | (t < space.gamma_min) | (t > space.gamma_max)].flat[0]
        raise LabelRangeError(
            f"value {bad} outside the label range [{space.gamma_min}, {space.gamma_max}]"
        )
