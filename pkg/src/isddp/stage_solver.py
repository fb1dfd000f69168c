"""Shared stage-subproblem machinery for the forward and backward passes.

Forward (primal) solves use lazy cut-row generation: solve against a small
working subset of the pool, add the most violated cut at the incumbent, and
repeat until the incumbent's epigraph value dominates the whole pool.  The
trail of the final solve then yields certified delta-suboptimal vertices.

Backward (dual) solves hand the full pool to the kernel's explicit-dual
path, which scales with the number of cuts only through matrix columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cuts import CutPool
from .lp_core import (
    DualCertificate,
    LinearProgram,
    PrimalDualSolution,
    SolveStatus,
    solve_dual_inexact,
    solve_exact,
    solve_with_primal_trail,
)
from .models import StageModel
from .schedules import ErrorBudget


class StageSolveError(RuntimeError):
    """A stage subproblem failed to solve; carries the stage index."""

    def __init__(self, message: str, stage: Optional[int] = None, path: Optional[int] = None):
        super().__init__(message)
        self.stage = stage
        self.path = path


@dataclass
class ForwardStageResult:
    x: np.ndarray        # chosen (possibly suboptimal) basic decision
    value: float         # cost.x + pool value at x
    optimum: float       # exact optimum of the stage problem
    budget_resolved: float


def stage_lp(
    stage: StageModel,
    x_prev: np.ndarray,
    pool: CutPool,
    cut_subset: Optional[list[int]] = None,
) -> LinearProgram:
    """Assemble the stage LP against a pool (floor always included as row 0)."""
    rhs = stage.b - stage.B @ x_prev
    rows: list[tuple[np.ndarray, float]] = [
        (np.zeros(stage.var_dim), pool.floor)
    ]
    cuts = pool.cuts
    indices = range(len(cuts)) if cut_subset is None else cut_subset
    for i in indices:
        rows.append((cuts[i].beta, cuts[i].theta))
    return LinearProgram(
        num_vars=stage.var_dim,
        num_eq=stage.num_eq,
        cost=stage.c,
        eq_matrix=stage.A,
        eq_rhs=rhs,
        cut_rows=rows,
        has_epigraph=True,
    )


def _raise_bad_status(status: SolveStatus, t: Optional[int], path: Optional[int]) -> None:
    where = f"stage {t}" if t is not None else "stage subproblem"
    if path is not None:
        where += f" (path {path})"
    if status is SolveStatus.INFEASIBLE:
        raise StageSolveError(f"{where} is infeasible", stage=t, path=path)
    raise StageSolveError(f"{where} is unbounded", stage=t, path=path)


def _row_generation(
    stage: StageModel,
    x_prev: np.ndarray,
    pool: CutPool,
    *,
    want_trail: bool,
    t: Optional[int],
    path: Optional[int],
) -> tuple[PrimalDualSolution, list]:
    """Solve the stage problem against the full pool via lazy cut rows."""
    gen_tol = 1e-9
    working: list[int] = []
    thetas = pool.thetas()
    betas = pool.beta_matrix()
    for _ in range(len(pool) + 2):
        lp = stage_lp(stage, x_prev, pool, cut_subset=working)
        if want_trail:
            sol, trail = solve_with_primal_trail(lp)
        else:
            sol, trail = solve_exact(lp), []
        if sol.status is not SolveStatus.OPTIMAL:
            _raise_bad_status(sol.status, t, path)
        x = sol.x
        f_lp = sol.obj - float(stage.c @ x)
        if not len(pool):
            return sol, trail
        vals = thetas + betas @ x
        worst = int(np.argmax(vals))
        if vals[worst] <= f_lp + gen_tol * (1.0 + abs(vals[worst])):
            return sol, trail
        working.append(worst)
    raise StageSolveError("cut-row generation failed to converge", stage=t, path=path)


def solve_forward_stage(
    stage: StageModel,
    x_prev: np.ndarray,
    pool: CutPool,
    budget: ErrorBudget,
    *,
    t: Optional[int] = None,
    path: Optional[int] = None,
) -> ForwardStageResult:
    """Budget-suboptimal basic decision for one forward stage.

    Solves to optimality (recording the vertex trail of the last
    row-generation round), evaluates each trail vertex against the full
    pool, and returns the earliest one within budget of the optimum.
    """
    sol, trail = _row_generation(
        stage, x_prev, pool, want_trail=True, t=t, path=path
    )
    x_star = sol.x
    optimum = float(stage.c @ x_star) + pool.evaluate(x_star)
    resolved = budget.resolve(optimum)
    slack = 1e-12 * (1.0 + abs(optimum))
    if trail:
        xs = np.stack([x for _, x in trail])
        full_vals = xs @ stage.c + pool.evaluate_many(xs)
        for i in range(len(trail)):
            if full_vals[i] <= optimum + resolved + slack:
                return ForwardStageResult(
                    x=xs[i].copy(),
                    value=float(full_vals[i]),
                    optimum=optimum,
                    budget_resolved=resolved,
                )
    return ForwardStageResult(
        x=x_star.copy(), value=optimum, optimum=optimum, budget_resolved=resolved
    )


def solve_backward_stage(
    stage: StageModel,
    x_prev: np.ndarray,
    pool: CutPool,
    budget: ErrorBudget,
    *,
    t: Optional[int] = None,
    path: Optional[int] = None,
) -> tuple[DualCertificate, float]:
    """Budget-certified dual point of one backward stage, plus its optimum.

    The certificate's ``mu`` covers the pool rows floor-first, matching
    ``pool.thetas_with_floor()``.
    """
    lp = stage_lp(stage, x_prev, pool)
    try:
        cert = solve_dual_inexact(
            lp,
            eps=budget.absolute,
            rel_eps=budget.relative or None,
        )
    except Exception as exc:  # kernel faults carry no stage context
        raise StageSolveError(
            f"backward solve failed at stage {t}: {exc}", stage=t, path=path
        ) from exc
    # Retrospective certificates measure eps against the true optimum.
    optimum = cert.dual_obj + cert.eps_certified
    return cert, optimum


def stage_value_exact(
    stage: StageModel,
    x_prev: np.ndarray,
    pool: CutPool,
    *,
    t: Optional[int] = None,
) -> float:
    """Exact optimal value of a stage problem against the full pool."""
    sol, _ = _row_generation(stage, x_prev, pool, want_trail=False, t=t, path=None)
    return float(stage.c @ sol.x) + pool.evaluate(sol.x)
