"""
Cost samplers: the ROF quadratic and two stereo matching costs.

Stereo costs compare I2 at x with I1 displaced by t along the second pixel
coordinate, sampled bilinearly with replicated borders.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, DimensionError
from pyLifting.Terms.DataTerms import CostSampler
from pyLifting.Terms.Regularizers import PixelGrid, grad

logger = logging.getLogger(__name__)

UNBOUNDED = (-np.inf, np.inf)


@dataclass(frozen=True, eq=False)
class StereoPair:
    """
    Rectified grayscale images in [0, 1]; disparity runs along columns.
    `truth` is the disparity the pair was generated with, if known.
    """

    I1: FloatArray
    I2: FloatArray
    truth: Optional[FloatArray] = None

    def __post_init__(self) -> None:
        if self.I1.shape != self.I2.shape or self.I1.ndim != 2:
            raise DimensionError(f"stereo images must be equal 2-D shapes, got {self.I1.shape} and {self.I2.shape}")
        for name, image in (("I1", self.I1), ("I2", self.I2)):
            if not np.all(np.isfinite(image)) or image.min() < 0.0 or image.max() > 1.0:
                raise ConfigError(f"{name} must hold finite values in [0, 1]")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.I1.shape


class RofSampler(CostSampler):
    """
    lam / 2 (t - f(x))^2
    """

    def __init__(self, f: FloatArray, lam: float) -> None:
        if not lam > 0:
            raise ConfigError(f"lambda must be positive, got {lam}")
        f = np.asarray(f, dtype=float)
        super().__init__(f.shape, UNBOUNDED)
        self.f = f
        self.lam = float(lam)

    def __call__(self, t: FloatArray) -> FloatArray:
        t = np.asarray(t, dtype=float)
        return 0.5 * self.lam * (t[None, None, :] - self.f[..., None]) ** 2


class StereoSimpleSampler(CostSampler):
    """
    weight * min(tau, |I1(x1, x2 + t) - I2(x)|)
    """

    def __init__(self, pair: StereoPair, tau_thresh: float, weight: float = 1.0) -> None:
        _check_thresholds(tau_thresh, weight)
        super().__init__(pair.shape, UNBOUNDED)
        self.pair = pair
        self.tau_thresh = float(tau_thresh)
        self.weight = float(weight)

    def __call__(self, t: FloatArray) -> FloatArray:
        t = np.asarray(t, dtype=float)
        out = np.empty(self.shape + (t.size,))
        for k, shift in enumerate(t):
            diff = np.abs(warp_columns(self.pair.I1, shift) - self.pair.I2)
            out[..., k] = self.weight * np.minimum(self.tau_thresh, diff)
        return out


class StereoPatchSampler(CostSampler):
    """
    weight * sum over the (2r+1)^2 window of sum_j min(tau, |d_j I1(y1, y2 + t) - d_j I2(y)|)
    with forward-difference image derivatives d_j.
    """

    def __init__(self, pair: StereoPair, tau_thresh: float, patch_radius: int, weight: float = 1.0) -> None:
        _check_thresholds(tau_thresh, weight)
        if patch_radius < 0:
            raise ConfigError(f"patch radius must be non-negative, got {patch_radius}")
        super().__init__(pair.shape, UNBOUNDED)
        grid = PixelGrid(*pair.shape)
        self.d1 = grad(pair.I1, grid)
        self.d2 = grad(pair.I2, grid)
        self.tau_thresh = float(tau_thresh)
        self.patch_radius = int(patch_radius)
        self.weight = float(weight)

    @property
    def bound(self) -> float:
        return self.weight * (2 * self.patch_radius + 1) ** 2 * 2 * self.tau_thresh

    def __call__(self, t: FloatArray) -> FloatArray:
        t = np.asarray(t, dtype=float)
        window = np.ones((2 * self.patch_radius + 1,) * 2)
        out = np.empty(self.shape + (t.size,))
        for k, shift in enumerate(t):
            pointwise = np.zeros(self.shape)
            for j in range(2):
                diff = np.abs(warp_columns(self.d1[..., j], shift) - self.d2[..., j])
                pointwise += np.minimum(self.tau_thresh, diff)
            out[..., k] = self.weight * ndimage.correlate(pointwise, window, mode="nearest")
        return out


def warp_columns(image: FloatArray, shift: float) -> FloatArray:
    """
    image(x1, x2 + shift), bilinear, replicating the border.
    """
    rows, cols = np.indices(image.shape, dtype=float)
    return ndimage.map_coordinates(image, [rows, cols + shift], order=1, mode="nearest")


def rof_sampler(f: FloatArray, lam: float) -> RofSampler:
    return RofSampler(f, lam)


def stereo_simple_sampler(pair: StereoPair, tau_thresh: float, weight: float = 1.0) -> StereoSimpleSampler:
    return StereoSimpleSampler(pair, tau_thresh, weight)


def stereo_patch_sampler(
    pair: StereoPair, tau_thresh: float, patch_radius: int, weight: float = 1.0
) -> StereoPatchSampler:
    return StereoPatchSampler(pair, tau_thresh, patch_radius, weight)


def _check_thresholds(tau_thresh: float, weight: float) -> None:
    if not tau_thresh > 0:
        raise ConfigError(f"saturation threshold must be positive, got {tau_thresh}")
    if not weight > 0:
        raise ConfigError(f"data weight must be positive, got {weight}")
