"""
The sampled-and-convexified lifted data term.

Every pixel shares the same support points: the lifted vectors 1_i^(m/M) for
m = 0..M on each of the l intervals, with interval endpoints shared, so that
there are N = l*M + 1 of them. Each pixel tabulates its cost at the
corresponding label values. The represented function is the convex envelope
of (support point, cost) pairs over the monotone box, minus a per-pixel
linear shift <b, u>:

```python
term = build_lifted(sampler, space, M=64)
term = set_bregman_shift(term, p)           # b = p * gamma_tilde
res = prox_field(term, z, tau=0.25)         # res.u, res.weights
```

The proximal map is computed in barycentric coordinates over the support
points: minimise tau <c - S b, lam> + 1/2 |lam S - z|^2 over the probability
simplex by accelerated projected gradient with adaptive restart. The
Frank-Wolfe gap g of lam bounds the distance of u = lam S to the exact prox
by sqrt(2 g).
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, DataTermError, DimensionError, SolverError
from pyLifting.Labels.Lifting import DEFAULT_EPS, LabelSpace, integrality_field

logger = logging.getLogger(__name__)

Pixel = Union[int, Tuple[int, int]]

BOX_SLACK = 1e-12
PROX_TOL = 1e-8
PROX_ITERS = 20000
GAP_EVERY = 5


class CostSampler(ABC):
    """
    Evaluates rho(x, t) for every pixel x of a grid at a list of label values.
    """

    def __init__(self, shape: Tuple[int, int], bounds: Tuple[float, float]) -> None:
        self.shape = (int(shape[0]), int(shape[1]))
        self.bounds = (float(bounds[0]), float(bounds[1]))

    @abstractmethod
    def __call__(self, t: FloatArray) -> FloatArray:
        """
        Costs of shape (H, W, T) for the T label values `t`.
        """


class PointwiseSampler(CostSampler):
    """
    Sampler built from a function of t alone, or of t broadcast against the
    grid when the function returns an (H, W, T) array.

    ```python
    PointwiseSampler((1, 1), (0.0, 1.0), lambda t: (t - 0.5) ** 2)
    ```
    """

    def __init__(
        self,
        shape: Tuple[int, int],
        bounds: Tuple[float, float],
        func: Callable[[FloatArray], FloatArray],
    ) -> None:
        super().__init__(shape, bounds)
        self.func = func

    def __call__(self, t: FloatArray) -> FloatArray:
        values = np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)
        return np.broadcast_to(values, self.shape + (len(t),)).copy()


@dataclass(frozen=True, eq=False)
class LiftedDataTerm:
    """
    Per-pixel costs at the shared support points and the per-pixel linear
    shift. Build with `build_lifted`; the shift setters return new terms.
    """

    space: LabelSpace
    subsamples: int
    shape: Tuple[int, int]
    costs: FloatArray
    shift: FloatArray

    def __post_init__(self) -> None:
        n = self.space.l * self.subsamples + 1
        pixels = self.shape[0] * self.shape[1]
        if self.costs.shape != (pixels, n):
            raise DimensionError(f"costs must have shape {(pixels, n)}, got {self.costs.shape}")
        if self.shift.shape != (pixels, self.space.l):
            raise DimensionError(f"shift must have shape {(pixels, self.space.l)}, got {self.shift.shape}")

    @property
    def pixels(self) -> int:
        return self.costs.shape[0]

    @cached_property
    def support(self) -> FloatArray:
        """
        Support points (N, l), edge by edge.
        """
        k = np.arange(self.space.l * self.subsamples + 1)[:, None]
        j = np.arange(self.space.l)[None, :]
        return np.clip(k - j * self.subsamples, 0, self.subsamples) / self.subsamples

    @cached_property
    def t_values(self) -> FloatArray:
        """
        Label value of every support point.
        """
        return self.space.gamma_min + self.support @ self.space.gamma_tilde

    @property
    def shifted_costs(self) -> FloatArray:
        """
        c_j - <s_j, b> per pixel, the costs seen by the proximal map.
        """
        return self.costs - self.shift @ self.support.T

    @cached_property
    def lipschitz(self) -> float:
        """
        Largest eigenvalue of the centred scatter of the support points.
        """
        centred = self.support - self.support.mean(axis=0)
        return float(np.linalg.eigvalsh(centred.T @ centred)[-1])

    @cached_property
    def edge_hulls(self) -> FloatArray:
        """
        Lower convex envelope of the samples on each interval, evaluated at
        the sample positions; shape (P, l, M + 1).
        """
        M = self.subsamples
        alphas = np.arange(M + 1) / M
        hulls = np.empty((self.pixels, self.space.l, M + 1))
        for i in range(self.space.l):
            edge = self.costs[:, i * M : (i + 1) * M + 1]
            for p in range(self.pixels):
                hulls[p, i] = _lower_hull_values(alphas, edge[p])
        return hulls

    def pixel_index(self, pixel: Pixel) -> int:
        if isinstance(pixel, tuple):
            r, c = pixel
            if not (0 <= r < self.shape[0] and 0 <= c < self.shape[1]):
                raise DimensionError(f"pixel {pixel} outside a {self.shape[0]}x{self.shape[1]} grid")
            return r * self.shape[1] + c
        if not 0 <= pixel < self.pixels:
            raise DimensionError(f"pixel {pixel} outside a grid of {self.pixels} pixels")
        return int(pixel)


@dataclass(frozen=True)
class ProxResult:
    u: FloatArray
    weights: FloatArray
    iters: int
    gap: float


def build_lifted(sampler: CostSampler, space: LabelSpace, M: int) -> LiftedDataTerm:
    """
    Tabulate the sampler at every support point; the shift starts at zero.
    """
    if M < 1:
        raise ConfigError(f"subsampling must be at least 1, got {M}")
    lo, hi = sampler.bounds
    if lo > space.gamma_min or hi < space.gamma_max:
        raise ConfigError(f"sampler range [{lo}, {hi}] does not cover the labels [{space.gamma_min}, {space.gamma_max}]")
    shape = sampler.shape
    pixels = shape[0] * shape[1]
    zero = np.zeros((pixels, space.l))
    term = LiftedDataTerm(space, M, shape, np.zeros((pixels, space.l * M + 1)), zero)
    costs = np.asarray(sampler(term.t_values), dtype=float)
    if costs.shape != shape + (term.t_values.size,):
        raise DimensionError(f"sampler returned shape {costs.shape}, expected {shape + (term.t_values.size,)}")
    bad = ~np.isfinite(costs)
    if bad.any():
        r, c, j = (int(v) for v in np.argwhere(bad)[0])
        raise DataTermError(
            f"cost {costs[r, c, j]} at pixel ({r}, {c}), t = {term.t_values[j]:.6g} is not finite",
            pixel=(r, c),
        )
    logger.debug(f"tabulated {pixels} pixels at {term.t_values.size} support points")
    return replace(term, costs=costs.reshape(pixels, -1))


def set_bregman_shift(term: LiftedDataTerm, p: FloatArray) -> LiftedDataTerm:
    """
    Replace the shift by b(x) = p(x) * gamma_tilde.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != term.shape:
        raise DimensionError(f"subgradient of shape {p.shape} does not match the grid {term.shape}")
    _check_finite(p.reshape(term.pixels, -1), term, "subgradient")
    return replace(term, shift=p.reshape(-1, 1) * term.space.gamma_tilde)


def set_lifted_shift(term: LiftedDataTerm, b: FloatArray) -> LiftedDataTerm:
    """
    Replace the shift by an arbitrary per-pixel vector field of shape (H, W, l).
    """
    b = np.asarray(b, dtype=float)
    if b.shape != term.shape + (term.space.l,):
        raise DimensionError(f"shift of shape {b.shape} does not match {term.shape + (term.space.l,)}")
    b = b.reshape(term.pixels, -1)
    _check_finite(b, term, "shift")
    return replace(term, shift=b.copy())


def eval_conjugate(term: LiftedDataTerm, pixel: Pixel, v: FloatArray) -> float:
    """
    max_j <s_j, v + b> - c_j over the support points of the pixel.
    """
    p = term.pixel_index(pixel)
    v = _as_lifted(term, v)
    return float(np.max(term.support @ (v + term.shift[p]) - term.costs[p]))


def eval_envelope(term: LiftedDataTerm, pixel: Pixel, u: FloatArray) -> float:
    """
    Convex envelope of the support points at u minus <b, u>; +inf outside
    the hull of the support points.
    """
    p = term.pixel_index(pixel)
    u = _as_lifted(term, u)
    if not _in_monotone_box(u):
        return float("inf")
    S = term.support
    a_eq = np.vstack([S.T, np.ones(S.shape[0])])
    b_eq = np.append(u, 1.0)
    res = linprog(term.costs[p], A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status == 2:
        return float("inf")
    if res.status != 0:
        raise SolverError(f"envelope evaluation failed: {res.message}", pixel=p)
    return float(res.fun - u @ term.shift[p])


def eval_integral(term: LiftedDataTerm, u: FloatArray, eps: float = DEFAULT_EPS) -> FloatArray:
    """
    Per-pixel shifted envelope values of a lifted field (H, W, l).

    At sublabel-integral pixels the envelope is the interval's 1-D lower
    hull, interpolated at alpha; any other pixel falls back to
    `eval_envelope`.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != term.shape + (term.space.l,):
        raise DimensionError(f"lifted field of shape {u.shape} does not match {term.shape + (term.space.l,)}")
    flat = u.reshape(term.pixels, -1)
    ok, i, alpha = integrality_field(flat, eps)
    M = term.subsamples
    pos = alpha * M
    lo = np.minimum(np.floor(pos).astype(int), M - 1)
    frac = pos - lo
    rows = term.edge_hulls[np.arange(term.pixels), i - 1]
    values = (1 - frac) * rows[np.arange(term.pixels), lo] + frac * rows[np.arange(term.pixels), lo + 1]
    j = np.arange(term.space.l)
    active = (i - 1)[:, None]
    snapped = np.where(j < active, 1.0, np.where(j == active, alpha[:, None], 0.0))
    values = values - np.sum(snapped * term.shift, axis=1)
    for p in np.flatnonzero(~ok):
        values[p] = eval_envelope(term, int(p), flat[p])
    return values.reshape(term.shape)


def prox_field(
    term: LiftedDataTerm,
    z: FloatArray,
    tau: float,
    weights: Optional[FloatArray] = None,
    max_iters: int = PROX_ITERS,
    tol: float = PROX_TOL,
    strict: bool = True,
) -> ProxResult:
    """
    Proximal map of tau * (envelope - <b, .>) for every pixel at once.

    `z` has shape (P, l) or (H, W, l); `weights` warm-starts the barycentric
    coordinates (P, N). The iteration stops as soon as every pixel's gap is
    at most `tol`, so warm weights that already qualify are returned as they
    are. With `strict`, reaching `max_iters` before the gap falls below `tol`
    raises `SolverError` naming the worst pixel.
    """
    if not tau > 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    z = np.asarray(z, dtype=float)
    out_shape = z.shape
    z = z.reshape(term.pixels, term.space.l)
    S = term.support
    linear = tau * term.shifted_costs

    def gradient(lam: FloatArray) -> FloatArray:
        return linear + (lam @ S - z) @ S.T

    def objective(lam: FloatArray) -> FloatArray:
        r = lam @ S - z
        return np.sum(linear * lam, axis=1) + 0.5 * np.sum(r * r, axis=1)

    start = _best_vertex(linear, S, z)
    lam = start if weights is None else np.array(weights, dtype=float)
    step = 1.0 / max(term.lipschitz, 1e-12)
    y = lam.copy()
    t = np.ones(term.pixels)
    gap = frank_wolfe_gap(gradient(lam), lam)
    iters = 0
    while gap.max() > tol and iters < max_iters:
        iters += 1
        g = gradient(y)
        new = project_simplex_rows(y - step * g)
        restart = np.sum(g * (new - lam), axis=1) > 0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = np.where(restart, 0.0, (t - 1.0) / t_new)
        y = new + beta[:, None] * (new - lam)
        t = np.where(restart, 1.0, t_new)
        lam = new
        if iters % GAP_EVERY == 0 or iters == max_iters:
            gap = frank_wolfe_gap(gradient(lam), lam)
    if strict and gap.max() > tol:
        worst = int(np.argmax(gap))
        raise SolverError(
            f"proximal map did not converge in {max_iters} iterations (gap {gap[worst]:.3g})",
            pixel=worst,
        )
    worse = objective(lam) > objective(start)
    lam[worse] = start[worse]
    u = lam @ S
    return ProxResult(u=u.reshape(out_shape), weights=lam, iters=iters, gap=float(gap.max()))


def prox_data(
    term: LiftedDataTerm,
    pixel: Pixel,
    z: FloatArray,
    tau: float,
    max_iters: int = PROX_ITERS,
    tol: float = PROX_TOL,
) -> FloatArray:
    """
    Proximal map at a single pixel.
    """
    p = term.pixel_index(pixel)
    z = _as_lifted(term, z)
    single = replace(term, shape=(1, 1), costs=term.costs[p : p + 1], shift=term.shift[p : p + 1])
    try:
        res = prox_field(single, z[None, :], tau, max_iters=max_iters, tol=tol)
    except SolverError as e:
        raise SolverError(str(e), pixel=p) from e
    return res.u[0]


def data_energy(term: LiftedDataTerm, weights: FloatArray) -> float:
    """
    Unshifted data energy attained by barycentric weights (P, N).
    """
    return float(np.sum(term.costs * weights))


def project_simplex_rows(C: FloatArray) -> FloatArray:
    """
    Euclidean projection of every row of C onto the probability simplex.
    """
    n = C.shape[1]
    a = -np.sort(-C, axis=1)
    css = np.cumsum(a, axis=1) - 1.0
    k = np.arange(1, n + 1)
    cond = a - css / k > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(C.shape[0]), rho] / (rho + 1)
    return np.maximum(C - theta[:, None], 0.0)


def frank_wolfe_gap(g: FloatArray, lam: FloatArray) -> FloatArray:
    """
    Per-row gap <g, lam> - min_k g_k of simplex weights `lam` under gradient `g`.

    Args:
        g: objective gradient at `lam`, shape (P, N)
        lam: barycentric weights, one probability vector per row

    Returns:
        the (P,) gaps, an upper bound on each row's suboptimality
    """
    return np.sum(g * lam, axis=1) - g.min(axis=1)


def _best_vertex(linear: FloatArray, S: FloatArray, z: FloatArray) -> FloatArray:
    d = np.sum((S[None, :, :] - z[:, None, :]) ** 2, axis=2)
    best = np.argmin(linear + 0.5 * d, axis=1)
    lam = np.zeros_like(linear)
    lam[np.arange(lam.shape[0]), best] = 1.0
    return lam


def _lower_hull_values(x: FloatArray, y: FloatArray) -> FloatArray:
    hull = []
    for k in range(x.size):
        while len(hull) > 1:
            a, b = hull[-2], hull[-1]
            if (x[b] - x[a]) * (y[k] - y[a]) - (x[k] - x[a]) * (y[b] - y[a]) <= 0.0:
                hull.pop()
            else:
                break
        hull.append(k)
    return np.interp(x, x[hull], y[hull])


def _in_monotone_box(u: FloatArray) -> bool:
    return bool(
        u[0] <= 1.0 + BOX_SLACK and u[-1] >= -BOX_SLACK and np.all(np.diff(u) <= BOX_SLACK)
    )


def _as_lifted(term: LiftedDataTerm, v: FloatArray) -> FloatArray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != term.space.l:
        raise DimensionError(f"lifted vector must have length {term.space.l}, got {v.size}")
    return v


def _check_finite(values: FloatArray, term: LiftedDataTerm, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        p = int(np.argwhere(bad)[0][0])
        r, c = divmod(p, term.shape[1])
        raise DataTermError(f"{what} is not finite at pixel ({r}, {c})", pixel=(r, c))
