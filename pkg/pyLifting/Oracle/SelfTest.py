"""
Invariant suite behind `pylifting selftest`.

Every check returns a `CheckResult`; the suite passes iff all of them do.
`radius_scale` corrupts the radii handed to the dual projections so that a
broken projection can be seen to fail the suite.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from pyLifting.Labels.Lifting import LabelSpace, lift_field, round_field
from pyLifting.Oracle.BruteForce import EnvelopeOracle, prox_oracle
from pyLifting.Solvers.Bregman import transform_subgradient
from pyLifting.Terms.DataTerms import PointwiseSampler, build_lifted, prox_data
from pyLifting.Terms.Regularizers import (
    ConstraintSet,
    PixelGrid,
    TVKind,
    div_adjoint,
    grad,
    lifted_tv,
    project_K,
    scalar_tv,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_shift_identity(rng: np.random.Generator) -> CheckResult:
    """
    The envelope of rho - p t equals the envelope of rho minus <p gamma_tilde, u>
    when gamma_1 = 0.
    """
    worst = 0.0
    labels = (0.0, 0.3, 0.6, 1.0)
    gt = np.diff(labels)
    for _ in range(5):
        knots = np.sort(rng.random(4))
        values = rng.random(4)
        p = rng.uniform(-1.0, 1.0)
        rho1 = lambda t: float(np.interp(t, knots, values))  # noqa: E731
        rho2 = lambda t: rho1(t) - p * t  # noqa: E731
        o1 = EnvelopeOracle.from_labels(labels, 3, rho1)
        o2 = EnvelopeOracle.from_labels(labels, 3, rho2)
        weights = rng.dirichlet(np.ones(len(o1.points)), size=20)
        U = weights @ o1.points
        diff = o2.envelope_values(U) - (o1.envelope_values(U) - U @ (p * gt))
        worst = max(worst, float(np.max(np.abs(diff))))
    return CheckResult("linear shift identity", worst <= 1e-8, f"max |diff| = {worst:.2e}")


def check_adjointness(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for shape in ((16, 16), (1, 9), (7, 1)):
        grid = PixelGrid(*shape)
        u = rng.standard_normal(shape + (3,))
        q = rng.standard_normal(shape + (3, 2))
        lhs = np.sum(q * grad(u, grid))
        rhs = np.sum(div_adjoint(q, grid) * u)
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(q) * np.linalg.norm(u)))
    return CheckResult("adjointness", worst <= 1e-10, f"max relative mismatch = {worst:.2e}")


def check_coarea(rng: np.random.Generator) -> CheckResult:
    space = LabelSpace((0.0, 0.2, 0.5, 1.0))
    cset = ConstraintSet.for_space(space, TVKind.ANISO)
    grid = PixelGrid(16, 16)
    worst = 0.0
    for _ in range(5):
        u = rng.random(grid.shape)
        lifted = lifted_tv(lift_field(space, u), cset, grid)
        scalar = scalar_tv(u, TVKind.ANISO, grid)
        worst = max(worst, abs(lifted - scalar) / max(scalar, 1e-12))
    return CheckResult("anisotropic coarea", worst <= 1e-9, f"max relative mismatch = {worst:.2e}")


def check_projections(rng: np.random.Generator, radius_scale: float = 1.0) -> CheckResult:
    """
    Projected points are feasible for the true radii, feasible points are
    fixed, and the projection is idempotent, for both kinds.
    """
    space = LabelSpace((0.0, 0.25, 0.6, 1.0))
    radii = space.gamma_tilde
    failures = []
    for kind in TVKind:
        true_set = ConstraintSet.for_space(space, kind)
        used_set = ConstraintSet(kind, tuple(radii * radius_scale))
        q = 3.0 * rng.standard_normal((8, 8, 3, 2))
        pq = project_K(q, used_set)
        if kind is TVKind.ANISO:
            feasible = np.all(np.abs(pq) <= radii[:, None] + 1e-12)
        else:
            feasible = np.all(np.linalg.norm(pq, axis=-1) <= radii + 1e-12)
        on_boundary = project_K(q, true_set)
        fixed = np.allclose(project_K(on_boundary, used_set), on_boundary, rtol=0.0, atol=1e-12)
        idempotent = np.allclose(project_K(pq, used_set), pq, rtol=0.0, atol=1e-12)
        if not (feasible and fixed and idempotent):
            failures.append(f"{kind.value}: feasible={feasible} fixed={fixed} idempotent={idempotent}")
    return CheckResult("dual projections", not failures, "; ".join(failures) or "ok")


def check_prox_oracle(rng: np.random.Generator) -> CheckResult:
    step = 1e-3
    worst = 0.0
    space = LabelSpace((0.0, 1.0))
    for _ in range(5):
        values = rng.random(9)
        sampler = PointwiseSampler((1, 1), (0.0, 1.0), lambda t: np.interp(t, np.linspace(0, 1, 9), values))
        term = build_lifted(sampler, space, 8)
        oracle = EnvelopeOracle.from_labels(space.labels, 8, lambda t: float(np.interp(t, np.linspace(0, 1, 9), values)))
        z = rng.uniform(-0.5, 1.5, 1)
        tau = rng.uniform(0.05, 1.0)
        worst = max(worst, float(np.max(np.abs(prox_data(term, 0, z, tau) - prox_oracle(oracle, z, tau, step)))))
    return CheckResult("prox vs oracle", worst <= 5 * step, f"max |diff| = {worst:.2e}")


def check_transform(rng: np.random.Generator, radius_scale: float = 1.0) -> CheckResult:
    space = LabelSpace((0.0, 0.25, 0.6, 1.0))
    grid = PixelGrid(8, 8)
    cset = ConstraintSet(TVKind.ANISO, tuple(space.gamma_tilde * radius_scale))
    true_set = ConstraintSet.for_space(space, TVKind.ANISO)
    q = project_K(3.0 * rng.standard_normal(grid.shape + (3, 2)), cset)
    u = round_field(space, rng.uniform(0.0, 1.0, grid.shape + (3,)))
    tr = transform_subgradient(q, u, space, grid)
    feasible = np.allclose(project_K(tr.q_t, true_set), tr.q_t, rtol=0.0, atol=1e-12)
    structured = np.allclose(div_adjoint(tr.q_t, grid), tr.p_scalar[..., None] * space.gamma_tilde, rtol=0.0, atol=1e-12)
    return CheckResult("subgradient transform", feasible and structured, f"feasible={feasible} structured={structured}")


def run_selftest(radius_scale: float = 1.0, seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: List[Callable[[], CheckResult]] = [
        lambda: check_shift_identity(rng),
        lambda: check_adjointness(rng),
        lambda: check_coarea(rng),
        lambda: check_projections(rng, radius_scale),
        lambda: check_prox_oracle(rng),
        lambda: check_transform(rng, radius_scale),
    ]
    results = []
    for check in checks:
        result = check()
        logger.debug(f"{result.name}: {'pass' if result.passed else 'FAIL'} ({result.detail})")
        results.append(result)
    return results


def format_report(results: List[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}" for r in results]
    return "\n".join(lines)
