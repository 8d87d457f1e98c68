"""
Brute-force ground truth for small instances: convex envelopes by
enumerating Caratheodory subsets, dense-grid proximal maps and exhaustive
energy minimisation over tiny grids.

Nothing here calls the data term, regulariser or solver code it is used to
check; support points, gradients and TV are computed independently.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import UsageError

logger = logging.getLogger(__name__)

MAX_DIM = 3
MAX_POINTS = 16
MAX_PIXELS = 4
MAX_COMBINATIONS = 5e7
RESIDUAL_TOL = 1e-9
WEIGHT_TOL = 1e-12


class EnvelopeOracle:
    """
    Convex envelope of at most 16 points (s_j, c_j) with s_j in R^l, l <= 3.

    ```python
    oracle = EnvelopeOracle([[0.0], [0.5], [1.0]], [0.2, 0.0, 0.2])
    oracle.envelope_value([0.25])   # 0.1
    ```
    """

    def __init__(self, points: Sequence[Sequence[float]], costs: Sequence[float]) -> None:
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.costs = np.asarray(costs, dtype=float).reshape(-1)
        n, l = self.points.shape
        if l > MAX_DIM or n > MAX_POINTS:
            raise UsageError(f"envelope oracle handles l <= {MAX_DIM} and <= {MAX_POINTS} points, got l={l}, {n}")
        if self.costs.size != n:
            raise UsageError(f"{n} points but {self.costs.size} costs")
        if len({tuple(p) for p in self.points}) != n:
            raise UsageError("support points must be distinct")
        self._subsets = list(self._affine_subsets())

    @classmethod
    def from_labels(cls, labels: Sequence[float], M: int, rho) -> "EnvelopeOracle":
        """
        Points 1_i^(m/M) with costs rho(gamma_i + m/M (gamma_{i+1} - gamma_i)).
        """
        labels = [float(g) for g in labels]
        l = len(labels) - 1
        points, costs = [np.zeros(l)], [rho(labels[0])]
        for i in range(l):
            for m in range(1, M + 1):
                s = np.zeros(l)
                s[:i] = 1.0
                s[i] = m / M
                points.append(s)
                costs.append(rho(labels[i] + m / M * (labels[i + 1] - labels[i])))
        return cls(points, costs)

    @property
    def l(self) -> int:  # noqa: E743
        return self.points.shape[1]

    def shifted(self, b: Sequence[float]) -> "EnvelopeOracle":
        """
        Oracle of the envelope minus <b, u>.
        """
        return EnvelopeOracle(self.points, self.costs - self.points @ np.asarray(b, dtype=float))

    def _affine_subsets(self):
        n, l = self.points.shape
        lifted = np.vstack([self.points.T, np.ones(n)])
        for k in range(1, l + 2):
            for idx in itertools.combinations(range(n), k):
                A = lifted[:, idx]
                if np.linalg.matrix_rank(A) == k:
                    yield np.asarray(idx), A, np.linalg.pinv(A)

    def envelope_value(self, u: Sequence[float]) -> float:
        return float(self.envelope_values(np.asarray(u, dtype=float).reshape(1, -1))[0])

    def envelope_values(self, U: FloatArray) -> FloatArray:
        """
        Envelope at every row of U (m, l); +inf outside the hull.
        """
        U = np.atleast_2d(np.asarray(U, dtype=float))
        rhs = np.hstack([U, np.ones((U.shape[0], 1))])
        best = np.full(U.shape[0], np.inf)
        for idx, A, A_pinv in self._subsets:
            lam = rhs @ A_pinv.T
            residual = np.linalg.norm(lam @ A.T - rhs, axis=1)
            ok = (residual <= RESIDUAL_TOL) & np.all(lam >= -WEIGHT_TOL, axis=1)
            value = np.where(ok, lam @ self.costs[idx], np.inf)
            best = np.minimum(best, value)
        return best

    def conjugate_value(self, v: Sequence[float]) -> float:
        return float(np.max(self.points @ np.asarray(v, dtype=float) - self.costs))


def monotone_grid(l: int, step: float) -> FloatArray:
    """
    All points 1 >= u^1 >= ... >= u^l >= 0 on a grid of spacing `step`.
    """
    if l < 1 or l > 2:
        raise UsageError(f"grid search is limited to l <= 2, got {l}")
    axis = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    if l == 1:
        return axis[:, None]
    a, b = np.meshgrid(axis, axis, indexing="ij")
    keep = a >= b
    return np.stack([a[keep], b[keep]], axis=1)


def prox_oracle(oracle: EnvelopeOracle, z: Sequence[float], tau: float, grid_step: float) -> FloatArray:
    """
    Best grid point of tau * envelope(u) + 1/2 |u - z|^2 over the monotone box.
    """
    grid = monotone_grid(oracle.l, grid_step)
    z = np.asarray(z, dtype=float)
    objective = tau * oracle.envelope_values(grid) + 0.5 * np.sum((grid - z) ** 2, axis=1)
    return grid[int(np.argmin(objective))]


@dataclass(frozen=True)
class TinyInstance:
    """
    A grid of at most 2x2 pixels with one envelope oracle per pixel
    (row-major), TV radii and TV kind ("aniso" or "iso").
    """

    shape: Tuple[int, int]
    oracles: Tuple[EnvelopeOracle, ...]
    radii: Tuple[float, ...]
    kind: str = "aniso"

    def __post_init__(self) -> None:
        pixels = self.shape[0] * self.shape[1]
        if pixels > MAX_PIXELS:
            raise UsageError(f"exhaustive search is limited to {MAX_PIXELS} pixels, got {pixels}")
        if len(self.oracles) != pixels:
            raise UsageError(f"{pixels} pixels but {len(self.oracles)} oracles")
        if any(o.l != len(self.radii) for o in self.oracles):
            raise UsageError("oracle dimension and radii disagree")


def tiny_tv(instance: TinyInstance, u: FloatArray) -> FloatArray:
    """
    Lifted TV of a batch of fields u with shape (B, H, W, l).
    """
    radii = np.asarray(instance.radii)
    d0 = np.zeros_like(u)
    d1 = np.zeros_like(u)
    d0[:, :-1] = u[:, 1:] - u[:, :-1]
    d1[:, :, :-1] = u[:, :, 1:] - u[:, :, :-1]
    if instance.kind == "aniso":
        per_row = np.abs(d0) + np.abs(d1)
    else:
        per_row = np.sqrt(d0**2 + d1**2)
    return np.sum(per_row * radii, axis=(1, 2, 3))


def exhaustive_min(instance: TinyInstance, grid_step: float) -> Tuple[FloatArray, float]:
    """
    Global minimum of data + lifted TV over all per-pixel grid points.
    """
    l = len(instance.radii)
    grid = monotone_grid(l, grid_step)
    pixels = len(instance.oracles)
    if float(len(grid)) ** pixels > MAX_COMBINATIONS:
        raise UsageError(f"{len(grid)}^{pixels} grid combinations exceed {MAX_COMBINATIONS:g}")
    data = [o.envelope_values(grid) for o in instance.oracles]
    finite = [np.flatnonzero(np.isfinite(d)) for d in data]
    H, W = instance.shape
    best_energy, best_u = np.inf, None
    rest = list(itertools.product(*finite[1:])) if pixels > 1 else [()]
    rest_idx = np.asarray(rest, dtype=int).reshape(len(rest), pixels - 1)
    rest_data = sum((data[p + 1][rest_idx[:, p]] for p in range(pixels - 1)), np.zeros(len(rest)))
    for first in finite[0]:
        idx = np.hstack([np.full((len(rest), 1), first), rest_idx])
        u = grid[idx].reshape(len(rest), H, W, l)
        energy = data[0][first] + rest_data + tiny_tv(instance, u)
        k = int(np.argmin(energy))
        if energy[k] < best_energy:
            best_energy, best_u = float(energy[k]), u[k]
    return best_u, best_energy


def envelope_convexity_violations(oracle: EnvelopeOracle, a: Sequence[float], b: Sequence[float]) -> List[float]:
    """
    Midpoint-inequality violations along the segment a-b sampled at 11 points.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    theta = np.linspace(0.0, 1.0, 11)
    values = oracle.envelope_values(a + theta[:, None] * (b - a))
    return [float(values[k] - 0.5 * (values[k - 1] + values[k + 1])) for k in range(1, 10)]
