"""
Over-relaxed primal-dual hybrid gradient for the lifted problem

    min_u  sum_x env_x(u(x)) - <b(x), u(x)>  +  max_{q in K} <q, grad u>

and for the scalar ROF model used by the classical Bregman iteration.

Each iteration performs

    q    <- P_K(q + sigma grad(u_bar))
    u'   <- prox_{tau data}(u - tau div_adjoint(q))
    u_bar = 2 u' - u

and every `check_every` iterations the energy and the relative change of u
since the previous check are inspected. The lifted prox is solved only as
accurately as that change requires, see `prox_tolerance`.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, DimensionError, SolverError
from pyLifting.Terms.DataTerms import LiftedDataTerm, data_energy, prox_field
from pyLifting.Terms.Regularizers import (
    ConstraintSet,
    PixelGrid,
    TVKind,
    div_adjoint,
    grad,
    lifted_tv,
    project_K,
    project_unit,
    scalar_tv,
)

logger = logging.getLogger(__name__)

# Frank-Wolfe gap accepted from the inner prox before the first check, the
# share of the outer residual its error may take, and the gap below which
# rounding in the cost scale dominates
PROX_GAP_START = 1e-6
PROX_FRACTION = 0.1
PROX_GAP_FLOOR = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """
    Stopping rule and step sizes. `sigma` and `tau` default to h / sqrt(8).
    """

    max_iters: int = 20000
    tol: float = 1e-7
    sigma: Optional[float] = None
    tau: Optional[float] = None
    check_every: int = 50
    prox_iters: int = 50

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be positive, got {self.max_iters}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.check_every < 1:
            raise ConfigError(f"check_every must be positive, got {self.check_every}")
        if self.prox_iters < 1:
            raise ConfigError(f"prox_iters must be positive, got {self.prox_iters}")
        for name in ("sigma", "tau"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")

    def step_sizes(self, grid: PixelGrid) -> Tuple[float, float]:
        default = grid.h / math.sqrt(8.0)
        sigma = default if self.sigma is None else self.sigma
        tau = default if self.tau is None else self.tau
        # the bound is not attained on a finite grid, so equality converges
        if sigma * tau * grid.operator_norm_sq > 1.0 + 1e-12:
            raise ConfigError(
                f"step sizes sigma={sigma}, tau={tau} violate sigma*tau*{grid.operator_norm_sq:g} <= 1"
            )
        return sigma, tau


@dataclass(frozen=True)
class WarmStart:
    u: FloatArray
    q: FloatArray
    weights: Optional[FloatArray] = None


@dataclass(frozen=True)
class SaddleSolution:
    """
    Result of `solve_lifted`; `energy_trace` holds the primal energy at every
    check, `final_residual` the relative change of u over the last interval.
    """

    u: FloatArray
    q: FloatArray
    weights: FloatArray
    iters_used: int
    final_residual: float
    primal_energy: float
    data_energy: float
    tv_energy: float
    converged: bool
    energy_trace: Tuple[float, ...] = ()

    def warm(self) -> WarmStart:
        return WarmStart(self.u, self.q, self.weights)


@dataclass(frozen=True)
class ScalarSolution:
    u: FloatArray
    q: FloatArray
    iters_used: int
    final_residual: float
    energy: float
    converged: bool
    energy_trace: Tuple[float, ...] = ()

    def warm(self) -> WarmStart:
        return WarmStart(self.u, self.q)


def solve_lifted(
    data: LiftedDataTerm,
    cset: ConstraintSet,
    grid: PixelGrid,
    warm: Optional[WarmStart] = None,
    cfg: SolverConfig = SolverConfig(),
) -> SaddleSolution:
    """
    Approximate saddle point of the lifted problem.

    Hitting `max_iters` returns the last iterate with `converged` unset.
    """
    sigma, tau = cfg.step_sizes(grid)
    if data.shape != grid.shape:
        raise DimensionError(f"data term on {data.shape} does not match the grid {grid.shape}")
    l = data.space.l
    field_shape = grid.shape + (l,)
    if warm is None:
        weights = _cold_weights(data)
        u = (weights @ data.support).reshape(field_shape)
        q = np.zeros(field_shape + (2,))
    else:
        u = np.array(warm.u, dtype=float)
        q = project_K(np.array(warm.q, dtype=float), cset)
        if u.shape != field_shape or q.shape != field_shape + (2,):
            raise DimensionError(f"warm start of shape {u.shape}, {q.shape} does not match {field_shape}")
        weights = warm.weights
    u_bar = u.copy()
    u_check = u
    residual = math.inf
    gap_floor = PROX_GAP_FLOOR * (1.0 + tau * float(np.abs(data.shifted_costs).max()))
    prox_tol = max(PROX_GAP_START, gap_floor)
    trace: List[float] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        q = project_K(q + sigma * grad(u_bar, grid), cset)
        z = u - tau * div_adjoint(q, grid)
        res = prox_field(data, z, tau, weights=weights, max_iters=cfg.prox_iters, tol=prox_tol, strict=False)
        u_new, weights = res.u, res.weights
        u_bar = 2.0 * u_new - u
        if it % cfg.check_every == 0 or it == cfg.max_iters:
            residual = _relative_change(u_new, u_check)
            energy = _lifted_energy(data, weights, u_new, cset, grid)
            if not (math.isfinite(energy) and math.isfinite(residual)):
                raise SolverError(f"lifted solve diverged at iteration {it} (energy {energy})")
            trace.append(energy)
            logger.debug(
                f"lifted it={it} residual={residual:.3e} energy={energy:.9g} "
                f"prox_gap={res.gap:.2e} prox_tol={prox_tol:.2e}"
            )
            if residual < cfg.tol:
                u = u_new
                converged = True
                break
            prox_tol = min(prox_tol, prox_tolerance(residual, u_new, gap_floor))
            u_check = u_new
        u = u_new
    if not converged:
        logger.warning(f"lifted solve stopped at max_iters={cfg.max_iters} (residual {residual:.3e} > tol {cfg.tol:g})")
    tv = lifted_tv(u, cset, grid)
    shifted = data_energy(data, weights) - float(np.sum(data.shift * u.reshape(data.pixels, -1)))
    return SaddleSolution(
        u=u,
        q=q,
        weights=weights,
        iters_used=it,
        final_residual=residual,
        primal_energy=shifted + tv,
        data_energy=data_energy(data, weights),
        tv_energy=tv,
        converged=converged,
        energy_trace=tuple(trace),
    )


def solve_scalar_rof(
    f: FloatArray,
    lam: float,
    p_shift: FloatArray,
    kind: TVKind,
    grid: PixelGrid,
    cfg: SolverConfig = SolverConfig(),
    warm: Optional[WarmStart] = None,
) -> ScalarSolution:
    """
    min_u sum lam/2 (u - f)^2 - p_shift u + TV_kind(u).

    The primal prox is the closed form (z + tau (lam f + p)) / (1 + tau lam).
    """
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    sigma, tau = cfg.step_sizes(grid)
    f = np.asarray(f, dtype=float)
    p_shift = np.asarray(p_shift, dtype=float)
    grid.check(f)
    if f.shape != grid.shape or p_shift.shape != grid.shape:
        raise DimensionError(f"image {f.shape} and shift {p_shift.shape} must both be {grid.shape}")
    kind = TVKind(kind)
    if warm is None:
        u = (f + p_shift / lam).copy()
        q = np.zeros(grid.shape + (2,))
    else:
        u = np.array(warm.u, dtype=float)
        q = project_unit(np.array(warm.q, dtype=float), kind)
    u_bar = u.copy()
    u_check = u
    target = lam * f + p_shift
    residual = math.inf
    trace: List[float] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        q = project_unit(q + sigma * grad(u_bar, grid), kind)
        z = u - tau * div_adjoint(q, grid)
        u_new = (z + tau * target) / (1.0 + tau * lam)
        u_bar = 2.0 * u_new - u
        if it % cfg.check_every == 0 or it == cfg.max_iters:
            residual = _relative_change(u_new, u_check)
            energy = rof_energy(u_new, f, lam, p_shift, kind, grid)
            if not (math.isfinite(energy) and math.isfinite(residual)):
                raise SolverError(f"scalar solve diverged at iteration {it} (energy {energy})")
            trace.append(energy)
            logger.debug(f"scalar it={it} residual={residual:.3e} energy={energy:.9g}")
            if residual < cfg.tol:
                u = u_new
                converged = True
                break
            u_check = u_new
        u = u_new
    if not converged:
        logger.warning(f"scalar solve stopped at max_iters={cfg.max_iters} (residual {residual:.3e} > tol {cfg.tol:g})")
    return ScalarSolution(
        u=u,
        q=q,
        iters_used=it,
        final_residual=residual,
        energy=rof_energy(u, f, lam, p_shift, kind, grid),
        converged=converged,
        energy_trace=tuple(trace),
    )


def prox_tolerance(residual: float, u: FloatArray, floor: float) -> float:
    """
    Gap tolerance for the inner prox given the last outer residual.

    A gap g keeps every pixel within sqrt(2 g) of its exact prox, so the
    returned value holds that distance to `PROX_FRACTION` of the root mean
    square change of `u` since the previous check.

    Args:
        residual: relative change of `u` over the last `check_every` iterations
        u: current lifted field
        floor: smallest tolerance the gap can be resolved to

    Returns:
        the tolerance, never below `floor`
    """
    rms = float(np.linalg.norm(u)) / math.sqrt(max(u.size, 1))
    return max(floor, 0.5 * (PROX_FRACTION * residual * rms) ** 2)


def rof_energy(
    u: FloatArray, f: FloatArray, lam: float, p_shift: FloatArray, kind: TVKind, grid: PixelGrid
) -> float:
    """
    lam/2 |u - f|^2 - <p_shift, u> + TV_kind(u), the objective of `solve_scalar_rof`.
    """
    return float(0.5 * lam * np.sum((u - f) ** 2) - np.sum(p_shift * u) + scalar_tv(u, kind, grid))


def _lifted_energy(
    data: LiftedDataTerm, weights: FloatArray, u: FloatArray, cset: ConstraintSet, grid: PixelGrid
) -> float:
    shifted = data_energy(data, weights) - float(np.sum(data.shift * u.reshape(data.pixels, -1)))
    return shifted + lifted_tv(u, cset, grid)


def _cold_weights(data: LiftedDataTerm) -> FloatArray:
    best = np.argmin(data.shifted_costs, axis=1)
    weights = np.zeros_like(data.costs)
    weights[np.arange(data.pixels), best] = 1.0
    return weights


def _relative_change(new: FloatArray, old: FloatArray) -> float:
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(new), 1e-12))
