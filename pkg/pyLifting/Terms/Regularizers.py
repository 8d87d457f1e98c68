"""
Forward-difference gradient, its adjoint, and the lifted total variation.

Fields live on a `PixelGrid` of shape (height, width). A scalar field has
shape (H, W), a lifted field (H, W, l). The gradient appends a direction
axis of length d = 2 (index 0 differences along rows, index 1 along
columns), so a dual field has shape (H, W, l, 2).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, DimensionError
from pyLifting.Labels.Lifting import LabelSpace

logger = logging.getLogger(__name__)

DIRECTIONS = 2


class TVKind(str, Enum):
    ISO = "iso"
    ANISO = "aniso"


@dataclass(frozen=True)
class PixelGrid:
    height: int
    width: int
    h: float = 1.0

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ConfigError(f"grid must hold at least one pixel, got {self.height}x{self.width}")
        if not self.h > 0:
            raise ConfigError(f"grid spacing must be positive, got {self.h}")

    @classmethod
    def like(cls, field: FloatArray, h: float = 1.0) -> "PixelGrid":
        return cls(field.shape[0], field.shape[1], h)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @property
    def size(self) -> int:
        return self.height * self.width

    @property
    def operator_norm_sq(self) -> float:
        """
        Bound on the squared operator norm of the 2-D forward-difference gradient.
        """
        return 8.0 / self.h**2

    def check(self, field: FloatArray) -> None:
        if field.shape[:2] != self.shape:
            raise DimensionError(f"field of shape {field.shape} does not live on a {self.height}x{self.width} grid")


@dataclass(frozen=True)
class ConstraintSet:
    """
    Dual constraint set of the lifted TV: per-row L2 balls (iso) or per-entry
    boxes (aniso) of radii gamma_tilde.
    """

    kind: TVKind
    radii: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TVKind(self.kind))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if not self.radii or min(self.radii) <= 0:
            raise ConfigError(f"constraint radii must be strictly positive, got {self.radii}")

    @classmethod
    def for_space(cls, space: LabelSpace, kind: TVKind) -> "ConstraintSet":
        return cls(TVKind(kind), tuple(space.gamma_tilde))

    @property
    def radius(self) -> FloatArray:
        return np.asarray(self.radii, dtype=float)


def grad(u: FloatArray, grid: PixelGrid) -> FloatArray:
    """
    Forward differences divided by h, zero across the last row and column.
    """
    u = np.asarray(u, dtype=float)
    grid.check(u)
    g = np.zeros(u.shape + (DIRECTIONS,))
    g[:-1, ..., 0] = u[1:] - u[:-1]
    g[:, :-1, ..., 1] = u[:, 1:] - u[:, :-1]
    return g / grid.h


def div_adjoint(q: FloatArray, grid: PixelGrid) -> FloatArray:
    """
    The adjoint of `grad`, so that <q, grad(u)> = <div_adjoint(q), u>.
    """
    q = np.asarray(q, dtype=float)
    grid.check(q)
    if q.shape[-1] != DIRECTIONS:
        raise DimensionError(f"dual field must end in a direction axis of length {DIRECTIONS}, got {q.shape}")
    out = np.zeros(q.shape[:-1])
    q0, q1 = q[..., 0], q[..., 1]
    out[:-1] -= q0[:-1]
    out[1:] += q0[:-1]
    out[:, :-1] -= q1[:, :-1]
    out[:, 1:] += q1[:, :-1]
    return out / grid.h


def project_K(q: FloatArray, cset: ConstraintSet) -> FloatArray:
    """
    Euclidean projection of a dual field (..., l, 2) onto the constraint set.
    """
    q = np.asarray(q, dtype=float)
    r = cset.radius
    if q.shape[-2] != r.size:
        raise DimensionError(f"dual field has {q.shape[-2]} rows, constraint set {r.size}")
    if cset.kind is TVKind.ANISO:
        return np.clip(q, -r[:, None], r[:, None])
    norms = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / np.maximum(1.0, norms / r[:, None])


def lifted_tv(u: FloatArray, cset: ConstraintSet, grid: PixelGrid) -> float:
    """
    Support function of the constraint set evaluated at grad(u).
    """
    g = grad(u, grid)
    r = cset.radius
    if g.shape[-2] != r.size:
        raise DimensionError(f"lifted field has {g.shape[-2]} channels, constraint set {r.size}")
    if cset.kind is TVKind.ANISO:
        return float(np.sum(np.abs(g).sum(axis=-1) * r))
    return float(np.sum(np.linalg.norm(g, axis=-1) * r))


def scalar_tv(u: FloatArray, kind: TVKind, grid: PixelGrid) -> float:
    """
    Total variation of a scalar image: the sum of |du/dx1| + |du/dx2| (aniso)
    or of the gradient norm (iso) over the forward differences of `grad`.

    Args:
        u: scalar image on `grid`
        kind: anisotropic or isotropic norm of the gradient
        grid: pixel grid giving the spacing h

    Returns:
        the total variation as a float
    """
    g = grad(u, grid)
    if TVKind(kind) is TVKind.ANISO:
        return float(np.abs(g).sum())
    return float(np.linalg.norm(g, axis=-1).sum())


def project_unit(p: FloatArray, kind: TVKind) -> FloatArray:
    """
    Projection of a scalar dual field (H, W, 2) onto the unit L-infinity box
    (aniso) or unit L2 ball per pixel (iso).
    """
    if TVKind(kind) is TVKind.ANISO:
        return np.clip(p, -1.0, 1.0)
    return p / np.maximum(1.0, np.linalg.norm(p, axis=-1, keepdims=True))
