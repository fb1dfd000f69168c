"""Benchmark generator: multistage portfolio rebalancing with direct
transaction costs, cast into the coupled stage-LP form.

Stage variables are holdings x(1..n+1) (assets then cash), buys b(1..n),
sells s(1..n), and one slack per position limit.  Dynamics apply gross
returns to the previous holdings, buys/sells move wealth between assets and
cash at proportional cost, and each asset is capped at a fraction u of
current total wealth.  The objective minimizes the mean loss, i.e. the
negative expected final wealth.

Returns are synthetic seeded lognormal draws by default (drift and
volatility per asset), or read from a CSV of realizations.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import StageModel, StochasticModel, StochasticStageModel


class PortfolioSpecError(ValueError):
    pass


class ReturnModel(str, enum.Enum):
    SYNTHETIC = "synthetic"
    FROM_FILE = "from_file"


@dataclass(frozen=True)
class PortfolioSpec:
    T: int
    n: int
    M: int = 10
    risk_free_return: float = 0.004
    u: float = 1.0
    seed: int = 0
    return_model: ReturnModel = ReturnModel.SYNTHETIC
    returns_path: Optional[str] = None

    def __post_init__(self):
        if self.T < 2 or self.n < 1 or self.M < 1:
            raise PortfolioSpecError("need T >= 2, n >= 1, M >= 1")
        if not (0.0 < self.u <= 1.0):
            raise PortfolioSpecError("position limit u must lie in (0, 1]")
        if self.return_model is ReturnModel.FROM_FILE and not self.returns_path:
            raise PortfolioSpecError("FROM_FILE mode needs returns_path")


@dataclass(frozen=True)
class TransactionCosts:
    """Proportional buy (nu) and sell (mu_cost) costs per asset; equal here."""

    nu: np.ndarray
    mu_cost: np.ndarray


def sample_transaction_costs(spec: PortfolioSpec, rng: np.random.Generator) -> TransactionCosts:
    # 0.08 + 0.06 cos(2 pi U / T), U uniform on {1..T}: entries in [0.02, 0.14].
    u_draw = rng.integers(1, spec.T + 1, size=spec.n)
    costs = 0.08 + 0.06 * np.cos(2.0 * np.pi * u_draw / spec.T)
    return TransactionCosts(nu=costs.copy(), mu_cost=costs.copy())


@dataclass
class PortfolioReturns:
    """Gross return vectors: one for stage 1, M per stage 2..T (cash last)."""

    stage1: np.ndarray               # (n+1,)
    stages: list[np.ndarray]         # each (M, n+1)


def sample_synthetic_returns(spec: PortfolioSpec, rng: Optional[np.random.Generator] = None) -> PortfolioReturns:
    """Seeded lognormal gross returns with per-asset drift and volatility.

    Drifts are uniform in [0.2%, 1.2%] monthly, volatilities in [3%, 8%];
    the lognormal location is set so the mean gross return is exactly
    1 + drift.  The cash return is fixed.
    """
    if spec.return_model is not ReturnModel.SYNTHETIC:
        raise PortfolioSpecError("sample_synthetic_returns needs SYNTHETIC mode")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    drift = rng.uniform(0.002, 0.012, size=spec.n)
    vol = rng.uniform(0.03, 0.08, size=spec.n)
    loc = np.log1p(drift) - 0.5 * vol**2
    rf = 1.0 + spec.risk_free_return

    def draw(count: int) -> np.ndarray:
        z = rng.standard_normal(size=(count, spec.n))
        gross = np.exp(loc + vol * z)
        return np.column_stack([gross, np.full(count, rf)])

    stage1 = draw(1)[0]
    stages = [draw(spec.M) for _ in range(spec.T - 1)]
    return PortfolioReturns(stage1=stage1, stages=stages)


def load_returns_csv(spec: PortfolioSpec) -> PortfolioReturns:
    """CSV rows are realizations (columns = risky assets, no header).

    Row 0 is the deterministic stage-1 return vector; rows 1..M cover stage
    2, the next M rows stage 3, and so on.  The cash return column is
    appended from ``spec.risk_free_return``.
    """
    with open(spec.returns_path) as fh:
        rows = [
            [float(v) for v in row] for row in csv.reader(fh) if row and any(row)
        ]
    need = 1 + (spec.T - 1) * spec.M
    if len(rows) < need:
        raise PortfolioSpecError(
            f"returns file has {len(rows)} rows, need {need} for T={spec.T}, M={spec.M}"
        )
    mat = np.asarray(rows, dtype=float)
    if mat.shape[1] != spec.n:
        raise PortfolioSpecError(
            f"returns file has {mat.shape[1]} columns, expected n={spec.n}"
        )
    rf = 1.0 + spec.risk_free_return
    with_cash = np.column_stack([mat, np.full(mat.shape[0], rf)])
    stage1 = with_cash[0]
    stages = [
        with_cash[1 + i * spec.M : 1 + (i + 1) * spec.M] for i in range(spec.T - 1)
    ]
    return PortfolioReturns(stage1=stage1, stages=stages)


def _stage_matrices(
    returns: np.ndarray,
    costs: TransactionCosts,
    u: float,
    state_dim: int,
    terminal: bool,
) -> StageModel:
    """One stage LP block for a single return realization.

    Variable order: holdings (n+1), buys (n), sells (n), limit slacks (n).
    Rows: n risky dynamics, 1 cash dynamics, n position limits.
    ``state_dim`` is n+1 (stage 1: holdings only) or the full previous
    variable count; coupling always hits the leading n+1 state components.
    """
    n = costs.nu.shape[0]
    var_dim = (n + 1) + n + n + n
    num_eq = (n + 1) + n
    A = np.zeros((num_eq, var_dim))
    B = np.zeros((num_eq, state_dim))
    b = np.zeros(num_eq)
    ih, ibuy, isell, iw = 0, n + 1, 2 * n + 1, 3 * n + 1
    # risky dynamics: x_i - buy_i + sell_i = xi_i * prev_i
    for i in range(n):
        A[i, ih + i] = 1.0
        A[i, ibuy + i] = -1.0
        A[i, isell + i] = 1.0
        B[i, i] = -returns[i]
    # cash: x_cash + sum (1+nu) buy - sum (1-mu) sell = xi_cash * prev_cash
    r = n
    A[r, ih + n] = 1.0
    A[r, ibuy : ibuy + n] = 1.0 + costs.nu
    A[r, isell : isell + n] = -(1.0 - costs.mu_cost)
    B[r, n] = -returns[n]
    # position limits: x_i - u * sum_j x_j + w_i = 0
    for i in range(n):
        r = n + 1 + i
        A[r, ih : ih + n + 1] = -u
        A[r, ih + i] += 1.0
        A[r, iw + i] = 1.0
    c = np.zeros(var_dim)
    if terminal:
        c[ih : ih + n + 1] = -1.0
    return StageModel(A=A, B=B, b=b, c=c)


def generate_instance(
    spec: PortfolioSpec, costs: Optional[TransactionCosts] = None
) -> StochasticModel:
    """Deterministic construction of the benchmark instance from its spec."""
    rng = np.random.default_rng(spec.seed)
    sampled_costs = sample_transaction_costs(spec, rng)
    x0 = rng.uniform(0.0, 10.0, size=spec.n + 1)
    if spec.return_model is ReturnModel.SYNTHETIC:
        returns = sample_synthetic_returns(spec, rng)
    else:
        returns = load_returns_csv(spec)
    if costs is None:
        costs = sampled_costs

    n, T = spec.n, spec.T
    var_dim = 4 * n + 1
    stage1 = _stage_matrices(
        returns.stage1, costs, spec.u, state_dim=n + 1, terminal=(T == 1)
    )
    stages = []
    for t in range(2, T + 1):
        mats = [
            _stage_matrices(
                returns.stages[t - 2][j], costs, spec.u,
                state_dim=var_dim, terminal=(t == T),
            )
            for j in range(spec.M)
        ]
        stages.append(
            StochasticStageModel(realizations=mats, probs=np.full(spec.M, 1.0 / spec.M))
        )

    # Floors: the cost-to-go entering stage t is at least the negative of the
    # largest wealth reachable anywhere in the horizon, compounded to T.
    all_returns = np.vstack([returns.stage1[None, :]] + returns.stages)
    rho_max = float(all_returns.max())
    w_max = float(x0.sum()) * rho_max**T
    floors = np.array([-(rho_max ** (T - t + 1)) * w_max for t in range(2, T + 1)])
    return StochasticModel(stage1=stage1, stages=stages, x0=x0, floors=floors)
