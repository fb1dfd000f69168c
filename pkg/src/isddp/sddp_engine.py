"""Sampled multistage decomposition with inexact cuts.

Each iteration draws N forward scenario paths, simulates the current policy
along them (budget-suboptimal solves), then sweeps stages T..2 building one
probability-aggregated cut per (path, stage) from certified dual points of
all realization subproblems.  Pools are frozen while a stage is being
processed and cuts are appended in fixed path order, so the serial result
is what any parallel schedule must reproduce.  An exact first-stage solve
yields the lower bound; the upper bound is a one-sided confidence bound on
sampled policy costs.

Sampling is counter-based (one block cipher stream per (seed, iteration,
path)), so runs are reproducible and paths independent across iterations.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cuts import Cut, CutPool, build_middle_cut, build_terminal_cut
from .ddp_engine import BudgetLike, _as_budget, make_pools, relative_gap
from .models import IterationRecord, RunLog, RunStatus, StochasticModel
from .schedules import ErrorBudget, ScheduleSpec, backward_budget, forward_budgets
from .stage_solver import solve_backward_stage, solve_forward_stage, stage_value_exact

_EVAL_STREAM = 1  # counter word separating policy-evaluation draws from training


@dataclass(frozen=True)
class SamplePath:
    """Realization indices for stages 2..T plus the seed lineage that drew them."""

    indices: tuple[int, ...]
    iteration: int
    path_id: int


def _path_rng(seed: int, iteration: int, path_id: int, stream: int = 0) -> np.random.Generator:
    bits = np.random.Philox(
        key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        counter=[0, path_id, iteration, stream],
    )
    return np.random.Generator(bits)


def sample_paths(
    model: StochasticModel, n: int, iteration: int, seed: int
) -> list[SamplePath]:
    """N independent scenario paths; deterministic given (seed, iteration)."""
    if n < 1:
        raise ValueError("need at least one path")
    cum = [np.cumsum(st.probs) for st in model.stages]
    paths = []
    for p in range(n):
        rng = _path_rng(seed, iteration, p)
        u = rng.random(len(model.stages))
        idx = tuple(int(np.searchsorted(cum[i], u[i], side="right")) for i in range(len(cum)))
        idx = tuple(min(j, len(model.stages[i].probs) - 1) for i, j in enumerate(idx))
        paths.append(SamplePath(indices=idx, iteration=iteration, path_id=p))
    return paths


@dataclass
class SddpForwardResult:
    trajectories: list[list[np.ndarray]]
    cost_samples: np.ndarray
    stage_values: np.ndarray  # (n_paths, T) forward subproblem optima
    deltas_resolved: tuple


def forward_pass_sddp(
    model: StochasticModel,
    pools: dict[int, CutPool],
    paths: Sequence[SamplePath],
    deltas: Sequence[BudgetLike],
) -> SddpForwardResult:
    """Simulate the current policy along each sampled path.

    Identical (stage, state) subproblems across paths are solved once; the
    deterministic kernel makes the shared result exact for every path.
    """
    T = model.horizon
    budgets = [_as_budget(d) for d in deltas]
    if len(budgets) != T:
        raise ValueError(f"need {T} deltas, got {len(budgets)}")
    cache: dict = {}
    trajectories: list[list[np.ndarray]] = []
    costs = np.zeros(len(paths))
    values = np.zeros((len(paths), T))
    resolved = [0.0] * T
    for p, path in enumerate(paths):
        x_prev = model.x0
        traj: list[np.ndarray] = []
        for t in range(1, T + 1):
            if t == 1:
                stage = model.stage1
            else:
                stage = model.stages[t - 2].realizations[path.indices[t - 2]]
            key = (t, x_prev.tobytes(), path.indices[t - 2] if t > 1 else 0)
            hit = cache.get(key)
            if hit is None:
                hit = solve_forward_stage(
                    stage, x_prev, pools[t + 1], budgets[t - 1], t=t, path=p
                )
                cache[key] = hit
            traj.append(hit.x)
            values[p, t - 1] = hit.optimum
            resolved[t - 1] = hit.budget_resolved
            costs[p] += float(stage.c @ hit.x)
            x_prev = hit.x
        trajectories.append(traj)
    return SddpForwardResult(trajectories, costs, values, tuple(resolved))


@dataclass
class SddpBackwardResult:
    new_cuts: list[Cut]
    lb: float
    eps_resolved: tuple


def backward_pass_sddp(
    model: StochasticModel,
    pools: dict[int, CutPool],
    trajectories: Sequence[Sequence[np.ndarray]],
    epsilons: Sequence[Union[BudgetLike, Sequence[BudgetLike]]],
    *,
    iteration: int = 0,
) -> SddpBackwardResult:
    """Stage-major backward sweep: all paths' cuts at stage t are built
    against the frozen pool t+1, then appended to pool t in path order.

    ``epsilons`` has one entry per stage 2..T; an entry may be a single
    budget or one budget per path.
    """
    T = model.horizon
    n_paths = len(trajectories)
    budgets: list[list[ErrorBudget]] = []
    if len(epsilons) != max(0, T - 1):
        raise ValueError(f"need {T - 1} epsilon entries, got {len(epsilons)}")
    for entry in epsilons:
        if isinstance(entry, (list, tuple, np.ndarray)):
            row = [_as_budget(e) for e in entry]
            if len(row) != n_paths:
                raise ValueError("per-path epsilons must cover every path")
        else:
            row = [_as_budget(entry)] * n_paths
        budgets.append(row)

    new_cuts: list[Cut] = []
    eps_resolved = [0.0] * max(0, T - 1)
    for t in range(T, 1, -1):
        st = model.stages[t - 2]
        pool_next = pools[t + 1]
        realizations = [
            (r.b, r.B, float(p)) for r, p in zip(st.realizations, st.probs)
        ]
        cache: dict = {}
        stage_cuts: list[Cut] = []
        for p in range(n_paths):
            x_prev = trajectories[p][t - 2]
            budget = budgets[t - 2][p]
            key = (x_prev.tobytes(), budget)
            certs = cache.get(key)
            if certs is None:
                certs = [
                    solve_backward_stage(r, x_prev, pool_next, budget, t=t, path=p)[0]
                    for r in st.realizations
                ]
                cache[key] = certs
            eps_resolved[t - 2] = max(
                eps_resolved[t - 2], max(c.eps_certified for c in certs)
            )
            if t == T:
                cut = build_terminal_cut(
                    realizations,
                    certs,
                    stage=t,
                    iteration=iteration,
                    eps_used=budget.nominal,
                )
            else:
                cut = build_middle_cut(
                    realizations,
                    certs,
                    pool_next.thetas_with_floor(),
                    stage=t,
                    iteration=iteration,
                    eps_used=budget.nominal,
                )
            stage_cuts.append(cut)
        for cut in stage_cuts:
            pools[t].add(cut)
        new_cuts.extend(stage_cuts)
    lb = stage_value_exact(model.stage1, model.x0, pools[2], t=1)
    return SddpBackwardResult(new_cuts, lb, tuple(eps_resolved))


def upper_bound_ci(cost_samples: np.ndarray, z: float = 1.96) -> float:
    """Upper end of the one-sided normal confidence interval on the mean."""
    cost_samples = np.asarray(cost_samples, dtype=float)
    n = cost_samples.shape[0]
    if n == 0:
        raise ValueError("need at least one cost sample")
    if n == 1:
        warnings.warn("single cost sample: returning it without a CI margin")
        return float(cost_samples[0])
    mean = float(cost_samples.mean())
    std = float(cost_samples.std(ddof=1))
    return mean + z * std / np.sqrt(n)


def run_isddp(
    model: StochasticModel,
    schedule: ScheduleSpec,
    n_paths: int,
    gap_tol: float,
    max_iter: int,
    seed: int,
    *,
    initial_pools: Optional[dict[int, CutPool]] = None,
) -> RunLog:
    """Iterate sampled forward/backward passes until the relative gap closes."""
    if not (0.0 < gap_tol < 1.0):
        raise ValueError("gap_tol must lie in (0, 1)")
    T = model.horizon
    pools = initial_pools if initial_pools is not None else make_pools(model)
    log = RunLog(
        algorithm="isddp",
        meta={
            "schedule_mode": schedule.mode.value,
            "eps_bar": schedule.eps_bar,
            "eps0": schedule.eps0,
            "n_paths": n_paths,
            "gap_tol": gap_tol,
            "seed": seed,
        },
    )
    try:
        for k in range(1, max_iter + 1):
            t_start = time.perf_counter()
            paths = sample_paths(model, n_paths, k, seed)
            deltas = forward_budgets(schedule, k, T)
            fwd = forward_pass_sddp(model, pools, paths, deltas)
            ub = upper_bound_ci(fwd.cost_samples) if n_paths > 1 else float(fwd.cost_samples[0])
            if T == 1:
                lb = ub
                eps_resolved: tuple = ()
            else:
                eps = [
                    [
                        backward_budget(schedule, t, k, T, prev_value=fwd.stage_values[p, t - 1])
                        for p in range(n_paths)
                    ]
                    for t in range(2, T + 1)
                ]
                bwd = backward_pass_sddp(model, pools, fwd.trajectories, eps, iteration=k)
                lb = bwd.lb
                eps_resolved = bwd.eps_resolved
            gap = relative_gap(ub, lb)
            wall_ms = (time.perf_counter() - t_start) * 1e3
            log.records.append(
                IterationRecord(
                    k=k,
                    lb=lb,
                    ub=ub,
                    gap=gap,
                    wall_ms=wall_ms,
                    n_paths=n_paths,
                    eps_used=eps_resolved,
                    delta_used=fwd.deltas_resolved,
                )
            )
            if gap < gap_tol:
                log.status = RunStatus.CONVERGED
                break
    except Exception as exc:
        exc.partial_log = log  # completed iterations survive the fault
        raise
    return log


def evaluate_policy(
    model: StochasticModel, pools: dict[int, CutPool], n: int, seed: int
) -> np.ndarray:
    """Realized costs of the pool-induced policy on n fresh exact rollouts."""
    T = model.horizon
    cum = [np.cumsum(st.probs) for st in model.stages]
    exact = ErrorBudget()
    cache: dict = {}
    costs = np.zeros(n)
    for p in range(n):
        rng = _path_rng(seed, 0, p, stream=_EVAL_STREAM)
        u = rng.random(len(model.stages))
        idx = [int(np.searchsorted(cum[i], u[i], side="right")) for i in range(len(cum))]
        idx = [min(j, len(model.stages[i].probs) - 1) for i, j in enumerate(idx)]
        x_prev = model.x0
        for t in range(1, T + 1):
            stage = model.stage1 if t == 1 else model.stages[t - 2].realizations[idx[t - 2]]
            key = (t, x_prev.tobytes(), idx[t - 2] if t > 1 else 0)
            hit = cache.get(key)
            if hit is None:
                hit = solve_forward_stage(stage, x_prev, pools[t + 1], exact, t=t, path=p)
                cache[key] = hit
            costs[p] += float(stage.c @ hit.x)
            x_prev = hit.x
    return costs
