"""
Classical and lifted Bregman iterations.

Classical (ROF only):

    u_k = argmin  H(u) + TV(u) - <p_{k-1}, u>,    p_k = p_{k-1} - lam (u_k - f)

Lifted: the same loop on the lifted problem, with the subgradient
p_k = div_adjoint(q_k) of the dual maximiser. Three variants share one
code path:

- ``transformed``: q_k is rewritten row by row into gamma_tilde times the
  scalar field q_k^i / gamma_tilde_i of the active interval i, so that the
  subgradient becomes p_scalar * gamma_tilde and the next shift is the
  scalar p_scalar carried through `set_bregman_shift`.
- ``untransformed``: the raw div_adjoint(q_k) is used as the next per-pixel
  shift.
- ``lifted``: one of the two, chosen by the `transform` flag.

```python
problem = BregmanProblem(grid, TVKind.ANISO, space, rof_sampler(f, 20.0), 64, f=f, lam=20.0)
states = run_iteration(Mode.TRANSFORMED, problem, K=5, cfg=SolverConfig())
states[-1].u_scalar
```
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, IntegralityError, SolverError
from pyLifting.Labels.Lifting import (
    DEFAULT_EPS,
    LabelSpace,
    integrality_field,
    project_field,
    round_field,
)
from pyLifting.Problems.Scenes import SyntheticScene
from pyLifting.Solvers.PrimalDual import (
    SaddleSolution,
    SolverConfig,
    WarmStart,
    solve_lifted,
    solve_scalar_rof,
)
from pyLifting.Terms.DataTerms import (
    CostSampler,
    LiftedDataTerm,
    build_lifted,
    eval_integral,
    set_bregman_shift,
    set_lifted_shift,
)
from pyLifting.Terms.Regularizers import (
    ConstraintSet,
    PixelGrid,
    TVKind,
    div_adjoint,
    lifted_tv,
    scalar_tv,
)

logger = logging.getLogger(__name__)

MAX_NONINTEGRAL = 0.2


class Mode(str, Enum):
    CLASSICAL = "classical"
    LIFTED = "lifted"
    UNTRANSFORMED = "untransformed"
    TRANSFORMED = "transformed"

    def uses_transform(self, transform: bool) -> bool:
        if self is Mode.TRANSFORMED:
            return True
        if self is Mode.UNTRANSFORMED:
            return False
        return transform


@dataclass(frozen=True)
class StepEnergies:
    data: float
    tv: float
    fidelity: Optional[float] = None

    @property
    def total(self) -> float:
        return self.data + self.tv


@dataclass(frozen=True, eq=False)
class BregmanState:
    k: int
    mode: Mode
    u_scalar: FloatArray
    p_scalar: FloatArray
    u_lifted: Optional[FloatArray] = None
    q_dual: Optional[FloatArray] = None
    p_lifted: Optional[FloatArray] = None
    energies: Optional[StepEnergies] = None
    nonintegral_count: int = 0
    solver_iters: int = 0
    converged: bool = True
    heuristic: bool = False
    warm: Optional[WarmStart] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class BregmanProblem:
    """
    Everything a Bregman run needs apart from the mode. `f` and `lam` are
    required by the classical mode and used for the fidelity diagnostic.
    """

    grid: PixelGrid
    kind: TVKind
    space: LabelSpace
    sampler: CostSampler
    subsamples: int
    f: Optional[FloatArray] = None
    lam: Optional[float] = None
    eps: float = DEFAULT_EPS
    max_nonintegral: float = MAX_NONINTEGRAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TVKind(self.kind))
        if self.subsamples < 1:
            raise ConfigError(f"subsampling must be at least 1, got {self.subsamples}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not 0.0 <= self.max_nonintegral <= 1.0:
            raise ConfigError(f"max_nonintegral must lie in [0, 1], got {self.max_nonintegral}")
        if self.sampler.shape != self.grid.shape:
            raise ConfigError(f"sampler grid {self.sampler.shape} does not match {self.grid.shape}")

    @cached_property
    def base_term(self) -> LiftedDataTerm:
        return build_lifted(self.sampler, self.space, self.subsamples)

    @property
    def constraint_set(self) -> ConstraintSet:
        return ConstraintSet.for_space(self.space, self.kind)


@dataclass(frozen=True, eq=False)
class TransformedSubgradient:
    q_t: FloatArray
    p_scalar: FloatArray
    flagged: int


def initial_state(problem: BregmanProblem, mode: Mode) -> BregmanState:
    """
    The k = 0 state: every subgradient is zero.
    """
    shape = problem.grid.shape
    lifted = None if mode is Mode.CLASSICAL else np.zeros(shape + (problem.space.l,))
    return BregmanState(
        k=0,
        mode=mode,
        u_scalar=np.zeros(shape),
        p_scalar=np.zeros(shape),
        p_lifted=lifted,
    )


def classical_step(
    state: BregmanState,
    f: FloatArray,
    lam: float,
    kind: TVKind,
    grid: PixelGrid,
    cfg: SolverConfig,
) -> BregmanState:
    k = state.k + 1
    try:
        sol = solve_scalar_rof(f, lam, state.p_scalar, kind, grid, cfg, warm=state.warm)
    except SolverError as e:
        raise SolverError(f"step {k}: {e}", pixel=e.pixel, step=k) from e
    residual = sol.u - f
    energies = StepEnergies(
        data=float(0.5 * lam * np.sum(residual**2)),
        tv=scalar_tv(sol.u, kind, grid),
        fidelity=float(np.linalg.norm(residual)),
    )
    return BregmanState(
        k=k,
        mode=Mode.CLASSICAL,
        u_scalar=sol.u,
        p_scalar=state.p_scalar - lam * residual,
        q_dual=sol.q,
        energies=energies,
        solver_iters=sol.iters_used,
        converged=sol.converged,
        warm=sol.warm(),
    )


def extract_subgradient(sol: SaddleSolution, grid: PixelGrid) -> FloatArray:
    """
    Lifted subgradient div_adjoint(q) of the lifted TV at `sol.u`.
    """
    return div_adjoint(sol.q, grid)


def transform_subgradient(
    q: FloatArray, u: FloatArray, space: LabelSpace, grid: PixelGrid, eps: float = DEFAULT_EPS
) -> TransformedSubgradient:
    """
    Rewrite every pixel's dual matrix as gamma_tilde times its active row
    divided by that row's radius.

    The active interval i comes from `integrality_field`; pixels that are
    not sublabel-integral are rounded first and counted in `flagged`.
    """
    ok, index, _ = integrality_field(u, eps)
    flagged = int(np.count_nonzero(~ok))
    if flagged:
        _, rounded_index, _ = integrality_field(round_field(space, u), eps)
        index = np.where(ok, index, rounded_index)
    gt = space.gamma_tilde
    active = np.take_along_axis(q, (index - 1)[..., None, None], axis=-2)[..., 0, :]
    s = active / gt[index - 1][..., None]
    q_t = gt[None, None, :, None] * s[..., None, :]
    return TransformedSubgradient(q_t=q_t, p_scalar=div_adjoint(s, grid), flagged=flagged)


def lifted_step(
    state: BregmanState,
    base: LiftedDataTerm,
    space: LabelSpace,
    cset: ConstraintSet,
    grid: PixelGrid,
    cfg: SolverConfig,
    transform: bool,
    eps: float = DEFAULT_EPS,
    max_nonintegral: float = MAX_NONINTEGRAL,
    f: Optional[FloatArray] = None,
) -> BregmanState:
    """
    One lifted Bregman step on `base`, the unshifted data term.

    Raises `IntegralityError` when transforming and more than
    `max_nonintegral` of the pixels are not sublabel-integral.
    """
    k = state.k + 1
    if transform:
        term = set_bregman_shift(base, state.p_scalar)
    else:
        term = set_lifted_shift(base, state.p_lifted)
    try:
        sol = solve_lifted(term, cset, grid, warm=state.warm, cfg=cfg)
    except SolverError as e:
        raise SolverError(f"step {k}: {e}", pixel=e.pixel, step=k) from e

    gt = space.gamma_tilde
    if transform:
        tr = transform_subgradient(sol.q, sol.u, space, grid, eps)
        if tr.flagged > max_nonintegral * grid.size:
            raise IntegralityError(
                f"step {k}: {tr.flagged} of {grid.size} pixels are not sublabel-integral", step=k
            )
        q_dual, p_scalar, flagged = tr.q_t, tr.p_scalar, tr.flagged
        p_lifted = p_scalar[..., None] * gt
    else:
        p_lifted = extract_subgradient(sol, grid)
        q_dual = sol.q
        p_scalar = p_lifted @ gt / float(gt @ gt)
        flagged = int(np.count_nonzero(~integrality_field(sol.u, eps)[0]))

    u_scalar = project_field(space, sol.u)
    fidelity = None if f is None else float(np.linalg.norm(u_scalar - f))
    return BregmanState(
        k=k,
        mode=state.mode,
        u_scalar=u_scalar,
        p_scalar=p_scalar,
        u_lifted=sol.u,
        q_dual=q_dual,
        p_lifted=p_lifted,
        energies=StepEnergies(data=sol.data_energy, tv=sol.tv_energy, fidelity=fidelity),
        nonintegral_count=flagged,
        solver_iters=sol.iters_used,
        converged=sol.converged,
        heuristic=transform and cset.kind is TVKind.ISO,
        warm=sol.warm(),
    )


def run_iteration(
    mode: Mode,
    problem: BregmanProblem,
    K: int,
    cfg: SolverConfig = SolverConfig(),
    transform: bool = True,
    progress: bool = False,
    on_step: Optional[Callable[[BregmanState], None]] = None,
) -> List[BregmanState]:
    """
    K Bregman steps from p_0 = 0; returns the states of steps 1..K.
    `on_step` sees every state as soon as it is computed.
    """
    mode = Mode(mode)
    if K < 1:
        raise ConfigError(f"the number of Bregman steps must be at least 1, got {K}")
    use_transform = mode.uses_transform(transform)
    if mode is Mode.CLASSICAL and (problem.f is None or problem.lam is None):
        raise ConfigError("the classical iteration needs the ROF datum f and lambda")
    if mode is not Mode.CLASSICAL and use_transform and problem.kind is TVKind.ISO:
        logger.warning("subgradient transform with isotropic TV is heuristic")

    state = initial_state(problem, mode)
    states = []
    for _ in tqdm(range(K), desc=mode.value, disable=not progress):
        if mode is Mode.CLASSICAL:
            state = classical_step(state, problem.f, problem.lam, problem.kind, problem.grid, cfg)
        else:
            state = lifted_step(
                state,
                problem.base_term,
                problem.space,
                problem.constraint_set,
                problem.grid,
                cfg,
                use_transform,
                eps=problem.eps,
                max_nonintegral=problem.max_nonintegral,
                f=problem.f,
            )
        e = state.energies
        logger.info(
            f"{mode.value} k={state.k} data={e.data:.9g} tv={e.tv:.9g} "
            f"nonintegral={state.nonintegral_count} iters={state.solver_iters}"
        )
        states.append(state)
        if on_step is not None:
            on_step(state)
    return states


def first_detection(
    states: Sequence[BregmanState], scene: SyntheticScene, grid: PixelGrid, fraction: float = 0.5
) -> List[Optional[int]]:
    """
    Per shape, the first step whose mean interior value rises above the
    background by `fraction` of the shape's height; None if none does.
    """
    found: List[Optional[int]] = []
    for shape in scene.shapes:
        mask = shape.mask(grid)
        hit = None
        for state in states:
            rise = float(state.u_scalar[mask].mean()) - scene.background
            if rise >= fraction * shape.height:
                hit = state.k
                break
        found.append(hit)
    return found


def rounding_energy_change(
    sol: SaddleSolution, term: LiftedDataTerm, cset: ConstraintSet, grid: PixelGrid
) -> float:
    """
    Relative change of the total energy when every pixel of a lifted
    solution is rounded to the nearest sublabel-integral vector.
    """
    rounded = round_field(term.space, sol.u)
    energy = float(np.sum(eval_integral(term, rounded))) + lifted_tv(rounded, cset, grid)
    return abs(energy - sol.primal_energy) / max(abs(sol.primal_energy), 1e-12)
