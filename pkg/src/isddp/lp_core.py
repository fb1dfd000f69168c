"""Dense simplex kernel for small stage subproblems.

Handles LPs of the form

    min  c . x  (+ f)                 x >= 0, f free (present iff has_epigraph)
    s.t. eq_matrix @ x == eq_rhs
         f >= theta_i + beta_i . x    for every cut row i

Exact solves run a two-phase tableau simplex on the nonnegative standard
form (f split into f+ - f-, one surplus variable per cut row) and return a
basic (vertex) primal point together with exact row multipliers.

Certified eps-optimal dual solutions come from solving the *explicit dual*
with the same kernel: its phase-2 iterates are dual-feasible points of the
original LP whose objective increases monotonically to the optimum, so an
early stop against a primal upper hint, or a retrospective scan of the
recorded iterate trail, yields a point with a provable suboptimality bound.

Dual convention for cut rows: weights mu >= 0 with sum(mu) == 1, entering
the variable-wise constraint as  eq_matrix.T @ lam - sum_i mu_i * beta_i <= c.
(The minus sign follows from writing a cut row as  f - beta_i . x >= theta_i.)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11


class LpError(Exception):
    """Base class for kernel faults."""


class LpDimensionError(LpError):
    pass


class PivotLimitError(LpError):
    """Numerical stall: pivot budget exhausted. Carries the last iterate."""

    def __init__(self, message: str, iterate: np.ndarray, obj: float):
        super().__init__(message)
        self.iterate = iterate
        self.obj = obj


class NoFiniteOptimumError(LpError):
    """The LP handed to an inexact dual solve is infeasible or unbounded."""


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class CertMode(enum.Enum):
    EXACT = "exact"
    EARLY_STOP = "early_stop"
    RETROSPECTIVE = "retrospective"


@dataclass
class LinearProgram:
    """Stage LP in equality form with optional epigraph cut rows.

    ``eq_rhs`` is the already-shifted right-hand side (the caller subtracts
    the coupling term of the previous stage's decision).  ``cut_rows`` is a
    sequence of ``(beta, theta)`` pairs, each imposing ``f >= theta + beta.x``
    on the free epigraph variable ``f``; the objective is ``c.x + f`` when
    ``has_epigraph`` is set and ``c.x`` otherwise.
    """

    num_vars: int
    num_eq: int
    cost: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    cut_rows: Sequence[tuple[np.ndarray, float]] = ()
    has_epigraph: bool = False

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float)
        self.eq_matrix = np.asarray(self.eq_matrix, dtype=float).reshape(
            self.num_eq, -1 if self.num_eq else self.num_vars
        )
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float)
        if self.eq_matrix.size == 0:
            self.eq_matrix = self.eq_matrix.reshape(self.num_eq, self.num_vars)
        self.validate()

    def validate(self) -> None:
        if self.cost.shape != (self.num_vars,):
            raise LpDimensionError(
                f"cost has shape {self.cost.shape}, expected ({self.num_vars},)"
            )
        if self.eq_matrix.shape != (self.num_eq, self.num_vars):
            raise LpDimensionError(
                f"eq_matrix has shape {self.eq_matrix.shape}, expected "
                f"({self.num_eq}, {self.num_vars})"
            )
        if self.eq_rhs.shape != (self.num_eq,):
            raise LpDimensionError(
                f"eq_rhs has shape {self.eq_rhs.shape}, expected ({self.num_eq},)"
            )
        if self.cut_rows and not self.has_epigraph:
            raise LpDimensionError("cut rows require has_epigraph")
        for i, (beta, _theta) in enumerate(self.cut_rows):
            if np.shape(beta) != (self.num_vars,):
                raise LpDimensionError(
                    f"cut row {i} beta has shape {np.shape(beta)}, expected "
                    f"({self.num_vars},)"
                )

    @property
    def num_cuts(self) -> int:
        return len(self.cut_rows)

    def cut_beta_matrix(self) -> np.ndarray:
        if not self.cut_rows:
            return np.zeros((0, self.num_vars))
        return np.asarray([np.asarray(b, dtype=float) for b, _ in self.cut_rows])

    def cut_thetas(self) -> np.ndarray:
        return np.asarray([t for _, t in self.cut_rows], dtype=float)


@dataclass
class PrimalDualSolution:
    """Basic optimal point plus exact multipliers, or a failure status.

    ``x`` includes only the decision variables; the epigraph value (when
    present) is ``obj - cost.x``.  ``lam`` holds the equality-row multipliers
    and ``mu`` the cut-row weights.  ``basis`` indexes standard-form columns:
    entries below ``num_vars`` are decision variables, the rest are internal
    epigraph-split / surplus columns.
    """

    status: SolveStatus
    x: Optional[np.ndarray] = None
    obj: float = math.nan
    lam: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    basis: tuple[int, ...] = ()


@dataclass
class DualCertificate:
    """Dual-feasible point with a certified suboptimality bound.

    ``dual_obj >= (true optimum) - eps_certified`` is guaranteed; for
    retrospective certificates ``dual_obj + eps_certified`` equals the true
    optimum exactly.
    """

    lam: np.ndarray
    mu: np.ndarray
    dual_obj: float
    eps_certified: float
    mode: CertMode


@dataclass
class _KernelResult:
    status: SolveStatus
    z: Optional[np.ndarray]
    obj: float
    y: Optional[np.ndarray]
    basis: Optional[np.ndarray]
    pivots: int
    early_stopped: bool = False
    trail: list = field(default_factory=list)


def _simplex_standard_form(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    *,
    feas_tol: float = FEAS_TOL,
    pivot_tol: float = PIVOT_TOL,
    max_pivots: Optional[int] = None,
    want_trail: bool = False,
    trail_cols: Optional[np.ndarray] = None,
    early_stop: Optional[Callable[[float], bool]] = None,
) -> _KernelResult:
    """Two-phase tableau simplex for  min c.z  s.t. A z = b, z >= 0.

    Dantzig pricing with an automatic switch to Bland's rule after a long
    degenerate streak.  Phase-2 iterates are appended to the trail (if
    requested) as ``(obj, z[trail_cols])`` snapshots, the optimum included;
    ``early_stop(obj)`` is checked at every phase-2 vertex and aborts the run
    with the current point when it returns True.
    """
    m, n = A.shape
    if max_pivots is None:
        max_pivots = 10_000 + 50 * (m + n)
    bland_after = 50 * (n + m)

    sign = np.where(b < 0, -1.0, 1.0)
    ncols = n + m
    body = np.empty((m, ncols + 1))
    body[:, :n] = A * sign[:, None]
    body[:, n:ncols] = np.eye(m)
    body[:, -1] = b * sign

    basis = np.arange(n, ncols)
    allowed = np.ones(ncols, dtype=bool)

    # Reduced-cost rows; last entry is -objective.
    r1 = np.zeros(ncols + 1)
    r1[:n] = -body[:, :n].sum(axis=0)
    r1[-1] = -body[:, -1].sum()
    r2 = np.zeros(ncols + 1)
    r2[:n] = c

    pivots = 0
    trail: list = []

    def pivot(pr: int, pc: int, phase: int) -> None:
        nonlocal pivots
        piv = body[pr, pc]
        body[pr] /= piv
        colv = body[:, pc].copy()
        colv[pr] = 0.0
        body[:, :] -= np.outer(colv, body[pr])
        if phase == 1:
            r1_pc = r1[pc]
            if r1_pc != 0.0:
                r1[:-1] -= r1_pc * body[pr, :-1]
                r1[-1] -= r1_pc * body[pr, -1]
                r1[pc] = 0.0
        r2_pc = r2[pc]
        if r2_pc != 0.0:
            r2[:-1] -= r2_pc * body[pr, :-1]
            r2[-1] -= r2_pc * body[pr, -1]
            r2[pc] = 0.0
        body[:, pc] = 0.0
        body[pr, pc] = 1.0
        leaving = basis[pr]
        if leaving >= n:
            allowed[leaving] = False  # artificial never re-enters
        basis[pr] = pc
        pivots += 1

    def entering(r: np.ndarray, bland: bool) -> int:
        cand = np.flatnonzero(allowed & (r[:ncols] < -feas_tol))
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        return int(cand[np.argmin(r[cand])])

    def leaving_row(pc: int, bland: bool) -> int:
        colv = body[:, pc]
        pos = np.flatnonzero(colv > pivot_tol)
        if pos.size == 0:
            return -1
        ratios = body[pos, -1] / colv[pos]
        rmin = ratios.min()
        tie = pos[ratios <= rmin + 1e-9 * (1.0 + abs(rmin))]
        if bland:
            return int(tie[np.argmin(basis[tie])])
        return int(tie[np.argmax(colv[tie])])

    def snapshot() -> np.ndarray:
        z = np.zeros(ncols)
        z[basis] = body[:, -1]
        return z[trail_cols] if trail_cols is not None else z[:n]

    def run_phase(phase: int) -> str:
        nonlocal pivots
        r = r1 if phase == 1 else r2
        bland = False
        degenerate = 0
        while True:
            obj = -r2[-1]
            if phase == 2:
                if want_trail:
                    trail.append((obj, snapshot()))
                if early_stop is not None and early_stop(obj):
                    return "early"
            pc = entering(r, bland)
            if pc < 0:
                return "optimal"
            pr = leaving_row(pc, bland)
            if pr < 0:
                if phase == 1:
                    raise LpError("phase-1 subproblem unbounded: numerical failure")
                return "unbounded"
            prev = r[-1]
            pivot(pr, pc, phase)
            if pivots > max_pivots:
                z = np.zeros(ncols)
                z[basis] = body[:, -1]
                raise PivotLimitError(
                    f"pivot limit {max_pivots} exceeded", z[:n], -r2[-1]
                )
            if abs(r[-1] - prev) <= 1e-13 * (1.0 + abs(prev)):
                degenerate += 1
                if degenerate > bland_after:
                    bland = True
            else:
                degenerate = 0

    run_phase(1)
    if -r1[-1] > feas_tol * (1.0 + np.abs(body[:, -1]).sum()):
        return _KernelResult(SolveStatus.INFEASIBLE, None, math.nan, None, None, pivots)

    # Drive leftover artificials out of the basis where a structural pivot
    # exists; rows without one are redundant and keep a zero-level artificial.
    for pr in range(m):
        if basis[pr] >= n:
            row = body[pr, :n]
            cand = np.flatnonzero(allowed[:n] & (np.abs(row) > pivot_tol))
            if cand.size:
                pivot(pr, int(cand[0]), phase=1)
    allowed[n:] = False

    outcome = run_phase(2)
    if outcome == "unbounded":
        return _KernelResult(SolveStatus.UNBOUNDED, None, math.nan, None, None, pivots)

    z = np.zeros(ncols)
    z[basis] = body[:, -1]
    y = -r2[n:ncols] * sign
    return _KernelResult(
        SolveStatus.OPTIMAL,
        z[:n],
        -r2[-1],
        y,
        basis.copy(),
        pivots,
        early_stopped=(outcome == "early"),
        trail=trail,
    )


# ---------------------------------------------------------------------------
# Standard-form assembly


def _standard_primal(lp: LinearProgram) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns: [x | f+ f- | cut surpluses] (epigraph parts only when present)."""
    nv, m, K = lp.num_vars, lp.num_eq, lp.num_cuts
    if not lp.has_epigraph:
        return lp.eq_matrix.copy(), lp.eq_rhs.copy(), lp.cost.copy()
    ncols = nv + 2 + K
    A = np.zeros((m + K, ncols))
    b = np.zeros(m + K)
    A[:m, :nv] = lp.eq_matrix
    b[:m] = lp.eq_rhs
    if K:
        A[m:, :nv] = -lp.cut_beta_matrix()
        A[m:, nv] = 1.0
        A[m:, nv + 1] = -1.0
        A[m:, nv + 2 :] = -np.eye(K)
        b[m:] = lp.cut_thetas()
    else:
        # Epigraph without any cut row would be unbounded below; callers
        # always include at least a floor row.
        raise LpDimensionError("epigraph LP needs at least one cut row")
    c = np.concatenate([lp.cost, [1.0, -1.0], np.zeros(K)])
    return A, b, c


def _explicit_dual(lp: LinearProgram) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dual LP in standard form; columns [lam+ | lam- | mu | slacks]."""
    nv, m, K = lp.num_vars, lp.num_eq, lp.num_cuts
    nrows = nv + (1 if lp.has_epigraph else 0)
    ncols = 2 * m + K + nv
    D = np.zeros((nrows, ncols))
    rhs = np.zeros(nrows)
    D[:nv, :m] = lp.eq_matrix.T
    D[:nv, m : 2 * m] = -lp.eq_matrix.T
    if K:
        D[:nv, 2 * m : 2 * m + K] = -lp.cut_beta_matrix().T
    D[:nv, 2 * m + K :] = np.eye(nv)
    rhs[:nv] = lp.cost
    if lp.has_epigraph:
        D[nv, 2 * m : 2 * m + K] = 1.0
        rhs[nv] = 1.0
    cost = np.concatenate(
        [-lp.eq_rhs, lp.eq_rhs, -lp.cut_thetas(), np.zeros(nv)]
    )
    return D, rhs, cost


def _dual_point(lp: LinearProgram, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m, K = lp.num_eq, lp.num_cuts
    lam = z[:m] - z[m : 2 * m]
    mu = z[2 * m : 2 * m + K].copy()
    return lam, mu


# ---------------------------------------------------------------------------
# Public operations


def solve_exact(
    lp: LinearProgram,
    *,
    feas_tol: float = FEAS_TOL,
    pivot_tol: float = PIVOT_TOL,
    max_pivots: Optional[int] = None,
) -> PrimalDualSolution:
    """Solve to optimality, returning a vertex solution with exact duals."""
    A, b, c = _standard_primal(lp)
    res = _simplex_standard_form(
        A, b, c, feas_tol=feas_tol, pivot_tol=pivot_tol, max_pivots=max_pivots
    )
    if res.status is not SolveStatus.OPTIMAL:
        return PrimalDualSolution(status=res.status)
    x = res.z[: lp.num_vars].copy()
    lam = res.y[: lp.num_eq].copy()
    mu = res.y[lp.num_eq :].copy()
    return PrimalDualSolution(
        status=SolveStatus.OPTIMAL,
        x=x,
        obj=res.obj,
        lam=lam,
        mu=mu,
        basis=tuple(int(i) for i in res.basis),
    )


def solve_with_primal_trail(
    lp: LinearProgram,
    *,
    feas_tol: float = FEAS_TOL,
    pivot_tol: float = PIVOT_TOL,
    max_pivots: Optional[int] = None,
) -> tuple[PrimalDualSolution, list[tuple[float, np.ndarray]]]:
    """solve_exact plus the phase-2 trail of (objective, x) vertex iterates.

    Every trail point is primal feasible with a nonincreasing objective; the
    final entry is the optimum.  Used for certified delta-suboptimal forward
    solves: pick the earliest iterate whose value is within budget.
    """
    A, b, c = _standard_primal(lp)
    res = _simplex_standard_form(
        A,
        b,
        c,
        feas_tol=feas_tol,
        pivot_tol=pivot_tol,
        max_pivots=max_pivots,
        want_trail=True,
        trail_cols=np.arange(lp.num_vars),
    )
    if res.status is not SolveStatus.OPTIMAL:
        return PrimalDualSolution(status=res.status), []
    sol = PrimalDualSolution(
        status=SolveStatus.OPTIMAL,
        x=res.z[: lp.num_vars].copy(),
        obj=res.obj,
        lam=res.y[: lp.num_eq].copy(),
        mu=res.y[lp.num_eq :].copy(),
        basis=tuple(int(i) for i in res.basis),
    )
    return sol, res.trail


def solve_dual_inexact(
    lp: LinearProgram,
    eps: float,
    primal_upper_hint: Optional[float] = None,
    *,
    rel_eps: Optional[float] = None,
    feas_tol: float = FEAS_TOL,
    pivot_tol: float = PIVOT_TOL,
    max_pivots: Optional[int] = None,
) -> DualCertificate:
    """Return a dual-feasible (lam, mu) with dual_obj >= optimum - eps.

    Mechanisms: with a ``primal_upper_hint`` the dual ascent halts as soon as
    ``hint - dual_obj`` fits the budget (EarlyStop); otherwise the dual is
    solved to optimality and the earliest trail iterate within budget of the
    now-known optimum is returned (Retrospective).  ``rel_eps`` adds a
    relative slack of ``rel_eps * max(1, |reference|)`` on top of ``eps``,
    where the reference is the hint (early stop) or the true optimum.
    With a zero budget both mechanisms reduce to an exact solve.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    D, rhs, cost = _explicit_dual(lp)
    relative = float(rel_eps) if rel_eps else 0.0
    exact_call = eps == 0.0 and relative == 0.0

    if primal_upper_hint is not None:
        budget = eps + relative * max(1.0, abs(primal_upper_hint))

        def stop(kernel_obj: float) -> bool:
            return primal_upper_hint - (-kernel_obj) <= budget

        res = _simplex_standard_form(
            D,
            rhs,
            cost,
            feas_tol=feas_tol,
            pivot_tol=pivot_tol,
            max_pivots=max_pivots,
            early_stop=stop,
        )
        _check_dual_solvable(res)
        lam, mu = _dual_point(lp, res.z)
        dual_obj = -res.obj
        if res.early_stopped:
            certified = max(0.0, primal_upper_hint - dual_obj)
        else:
            certified = 0.0  # ascent ran to optimality
        mode = CertMode.EXACT if exact_call else CertMode.EARLY_STOP
        return DualCertificate(lam, mu, dual_obj, certified, mode)

    res = _simplex_standard_form(
        D,
        rhs,
        cost,
        feas_tol=feas_tol,
        pivot_tol=pivot_tol,
        max_pivots=max_pivots,
        want_trail=True,
        trail_cols=np.arange(2 * lp.num_eq + lp.num_cuts),
    )
    _check_dual_solvable(res)
    optimum = -res.obj
    budget = eps + relative * max(1.0, abs(optimum))
    for kernel_obj, zslice in res.trail:
        dual_obj = -kernel_obj
        if dual_obj >= optimum - budget:
            lam, mu = _dual_point(lp, zslice)
            certified = max(0.0, optimum - dual_obj)
            mode = CertMode.EXACT if exact_call else CertMode.RETROSPECTIVE
            return DualCertificate(lam, mu, dual_obj, certified, mode)
    raise LpError("retrospective trail scan found no qualifying iterate")


def _check_dual_solvable(res: _KernelResult) -> None:
    if res.status is SolveStatus.INFEASIBLE:
        raise NoFiniteOptimumError(
            "dual infeasible: the primal LP is unbounded (or empty)"
        )
    if res.status is SolveStatus.UNBOUNDED:
        raise NoFiniteOptimumError("dual unbounded: the primal LP is infeasible")


def dual_feasibility_residual(
    lp: LinearProgram, lam: np.ndarray, mu: np.ndarray
) -> float:
    """Max violation of the dual constraints; 0 means dual feasible."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if lam.shape != (lp.num_eq,):
        raise LpDimensionError(f"lam has shape {lam.shape}, expected ({lp.num_eq},)")
    if mu.shape != (lp.num_cuts,):
        raise LpDimensionError(f"mu has shape {mu.shape}, expected ({lp.num_cuts},)")
    slack = lp.eq_matrix.T @ lam - lp.cost
    if lp.num_cuts:
        slack = slack - lp.cut_beta_matrix().T @ mu
    res = float(max(0.0, slack.max(initial=0.0)))
    if lp.has_epigraph:
        res = max(res, abs(float(mu.sum()) - 1.0))
        if lp.num_cuts:
            res = max(res, float(max(0.0, -mu.min())))
    return res


def solution_residuals(
    lp: LinearProgram, sol: PrimalDualSolution
) -> tuple[float, float, float]:
    """(primal, dual, complementary-slackness) residuals of an Optimal solve."""
    if sol.status is not SolveStatus.OPTIMAL:
        raise ValueError("residuals are defined for Optimal solutions only")
    x = sol.x
    primal = float(np.abs(lp.eq_matrix @ x - lp.eq_rhs).max(initial=0.0))
    primal = max(primal, float(max(0.0, -(x.min(initial=0.0)))))
    f = sol.obj - float(lp.cost @ x)
    if lp.has_epigraph:
        cut_slack = f - (lp.cut_thetas() + lp.cut_beta_matrix() @ x)
        primal = max(primal, float(max(0.0, -(cut_slack.min(initial=0.0)))))
    dual = dual_feasibility_residual(lp, sol.lam, sol.mu)
    rc = lp.cost - lp.eq_matrix.T @ sol.lam
    if lp.num_cuts:
        rc = rc + lp.cut_beta_matrix().T @ sol.mu
    comp = float(np.abs(x * rc).max(initial=0.0))
    if lp.has_epigraph:
        comp = max(comp, float(np.abs(sol.mu * cut_slack).max(initial=0.0)))
    return primal, dual, comp
