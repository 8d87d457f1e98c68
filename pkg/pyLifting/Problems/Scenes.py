"""
Synthetic scenes of discs and squares, rasterised images and textured
stereo pairs.

A disc of radius R centred at (cr, cc) covers (r - cr)^2 + (c - cc)^2 <= R^2;
a square of half-side k covers cr - k <= r < cr + k and cc - k <= c < cc + k,
so its side is 2k pixels.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, SceneError
from pyLifting.Problems.Samplers import StereoPair
from pyLifting.Terms.Regularizers import PixelGrid

logger = logging.getLogger(__name__)


class ShapeKind(str, Enum):
    DISC = "disc"
    SQUARE = "square"


@dataclass(frozen=True)
class Shape:
    kind: ShapeKind
    center: Tuple[int, int]
    size: int
    height: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        if self.size < 1:
            raise SceneError(f"{self.kind.value} size must be at least 1, got {self.size}")

    @property
    def box(self) -> Tuple[int, int, int, int]:
        """
        Inclusive (row_min, row_max, col_min, col_max) of covered pixels.
        """
        (cr, cc), k = self.center, self.size
        if self.kind is ShapeKind.DISC:
            return cr - k, cr + k, cc - k, cc + k
        return cr - k, cr + k - 1, cc - k, cc + k - 1

    @property
    def area(self) -> float:
        if self.kind is ShapeKind.DISC:
            return float(np.pi * self.size**2)
        return float((2 * self.size) ** 2)

    def mask(self, grid: PixelGrid) -> np.ndarray:
        r, c = np.indices(grid.shape)
        (cr, cc), k = self.center, self.size
        if self.kind is ShapeKind.DISC:
            return (r - cr) ** 2 + (c - cc) ** 2 <= k**2
        return (r >= cr - k) & (r < cr + k) & (c >= cc - k) & (c < cc + k)


@dataclass(frozen=True)
class SyntheticScene:
    shapes: Tuple[Shape, ...] = field(default_factory=tuple)
    background: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "shapes", tuple(self.shapes))

    def validate(self, grid: PixelGrid, bounds: Optional[Tuple[float, float]] = None) -> None:
        """
        Raise `SceneError` when a shape leaves the grid, two shapes' bounding
        boxes intersect, or, given label `bounds`, the background or a shape's
        value (background + height) falls outside them.
        """
        for s in self.shapes:
            r0, r1, c0, c1 = s.box
            if r0 < 0 or c0 < 0 or r1 >= grid.height or c1 >= grid.width:
                raise SceneError(f"{s.kind.value} at {s.center} of size {s.size} does not fit a {grid.height}x{grid.width} grid")
        for a_idx, a in enumerate(self.shapes):
            for b in self.shapes[a_idx + 1 :]:
                ar0, ar1, ac0, ac1 = a.box
                br0, br1, bc0, bc1 = b.box
                if ar0 <= br1 and br0 <= ar1 and ac0 <= bc1 and bc0 <= ac1:
                    raise SceneError(f"shapes at {a.center} and {b.center} overlap")
        if bounds is None:
            return
        lo, hi = bounds
        for value in (self.background, *(self.background + s.height for s in self.shapes)):
            if not lo <= value <= hi:
                raise SceneError(f"scene value {value:g} lies outside the label range [{lo:g}, {hi:g}]")


def make_scene_image(
    scene: SyntheticScene, grid: PixelGrid, bounds: Optional[Tuple[float, float]] = None
) -> FloatArray:
    """
    Background value outside shapes, background + height inside.
    """
    scene.validate(grid, bounds)
    image = np.full(grid.shape, float(scene.background))
    for s in scene.shapes:
        image[s.mask(grid)] += s.height
    return image


def add_noise(image: FloatArray, sigma: float, seed: int, bounds: Tuple[float, float]) -> FloatArray:
    """
    Seeded Gaussian noise of standard deviation `sigma`, clipped to `bounds`.

    Args:
        image: grey image
        sigma: noise level, 0 returns a copy of the image
        seed: generator seed
        bounds: (low, high) every output value is clipped to

    Returns:
        the noisy image
    """
    if sigma < 0:
        raise ConfigError(f"noise level must be non-negative, got {sigma}")
    image = np.asarray(image, dtype=float)
    if sigma == 0:
        return image.copy()
    rng = np.random.default_rng(seed)
    return np.clip(image + sigma * rng.standard_normal(image.shape), *bounds)


def make_texture(grid: PixelGrid, seed: int) -> FloatArray:
    """
    Seeded smooth noise normalised to [0, 1].
    """
    rng = np.random.default_rng(seed)
    noise = ndimage.gaussian_filter(rng.random(grid.shape), sigma=1.0, mode="reflect")
    lo, hi = noise.min(), noise.max()
    if hi - lo <= 0:
        return np.zeros(grid.shape)
    return (noise - lo) / (hi - lo)


def make_stereo_pair(
    scene: SyntheticScene,
    grid: PixelGrid,
    shift: int,
    texture_seed: int,
    bounds: Optional[Tuple[float, float]] = None,
) -> StereoPair:
    """
    Identical textured backgrounds; inside each shape I1 carries the texture
    displaced by `shift` columns while the shape outline stays in place, so
    that I1(x1, x2 + shift) = I2(x) wherever the displaced sample stays
    inside the shape. Given disparity `bounds`, the scene values are
    checked against them.
    """
    if shift < 0:
        raise ConfigError(f"shift must be non-negative, got {shift}")
    scene.validate(grid, bounds)
    texture = make_texture(grid, texture_seed)
    cols = np.clip(np.arange(grid.width) - shift, 0, grid.width - 1)
    displaced = texture[:, cols]
    I1 = texture.copy()
    truth = np.zeros(grid.shape)
    for s in scene.shapes:
        mask = s.mask(grid)
        I1[mask] = displaced[mask]
        truth[mask] = float(shift)
    return StereoPair(I1=I1, I2=texture.copy(), truth=truth)


def _place(n: int, frac: float) -> int:
    return int(np.floor(frac * n + 0.5))


def _layout(
    kind: ShapeKind, size: int, fractions: Sequence[Tuple[float, float, float]], heights: Sequence[float], background: float
) -> SyntheticScene:
    shapes = tuple(
        Shape(kind, (_place(size, fr), _place(size, fc)), max(1, _place(size, fk)), h)
        for (fr, fc, fk), h in zip(fractions, heights)
    )
    scene = SyntheticScene(shapes, background)
    scene.validate(PixelGrid(size, size))
    return scene


def rof_squares_scene(size: int = 32) -> SyntheticScene:
    """
    Three squares of decreasing size on a 0.1 background; no grey value sits
    on a uniform label.
    """
    fractions = [(9 / 32, 9 / 32, 7 / 32), (23 / 32, 10 / 32, 5 / 32), (16 / 32, 25 / 32, 3 / 32)]
    return _layout(ShapeKind.SQUARE, size, fractions, [0.5, 0.6, 0.7], 0.1)


def three_discs_scene(size: int = 64, height: float = 1.0) -> SyntheticScene:
    fractions = [(18 / 64, 18 / 64, 12 / 64), (46 / 64, 20 / 64, 8 / 64), (32 / 64, 48 / 64, 5 / 64)]
    return _layout(ShapeKind.DISC, size, fractions, [height] * 3, 0.0)


def three_squares_scene(size: int = 64, height: float = 1.0) -> SyntheticScene:
    fractions = [(18 / 64, 18 / 64, 10 / 64), (46 / 64, 20 / 64, 7 / 64), (32 / 64, 48 / 64, 4 / 64)]
    return _layout(ShapeKind.SQUARE, size, fractions, [height] * 3, 0.0)
