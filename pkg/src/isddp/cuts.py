"""Affine minorants of cost-to-go functions and their pools.

A cut is an affine lower bound ``theta + beta . x`` on a stage's expected
cost-to-go.  A pool is the running outer approximation: the max of all cuts
collected so far and a constant floor.  When a pool enters a stage LP the
floor is encoded as cut row 0 (beta = 0, theta = floor) so that the dual
weight vector covers it uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .lp_core import DualCertificate


class CutDimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Cut:
    """Immutable affine minorant created at one (stage, iteration)."""

    theta: float
    beta: np.ndarray
    stage: int
    iteration: int
    eps_used: float = 0.0

    def value(self, x: np.ndarray) -> float:
        return float(self.theta + self.beta @ x)

    def to_dict(self) -> dict:
        return {
            "theta": float(self.theta),
            "beta": [float(v) for v in self.beta],
            "stage": int(self.stage),
            "iter": int(self.iteration),
            "eps": float(self.eps_used),
        }

    @staticmethod
    def from_dict(d: dict) -> "Cut":
        return Cut(
            theta=float(d["theta"]),
            beta=np.asarray(d["beta"], dtype=float),
            stage=int(d["stage"]),
            iteration=int(d["iter"]),
            eps_used=float(d["eps"]),
        )


class CutPool:
    """Ordered cut collection with a constant floor; evaluates as their max."""

    def __init__(
        self,
        stage: int,
        state_dim: int,
        floor: float,
        cuts: Iterable[Cut] = (),
    ):
        self.stage = stage
        self.state_dim = state_dim
        self.floor = float(floor)
        self._cuts: list[Cut] = []
        self._beta_cache: Optional[np.ndarray] = None
        self._theta_cache: Optional[np.ndarray] = None
        for cut in cuts:
            self.add(cut)

    def __len__(self) -> int:
        return len(self._cuts)

    @property
    def cuts(self) -> tuple[Cut, ...]:
        return tuple(self._cuts)

    def add(self, cut: Cut) -> None:
        if cut.beta.shape != (self.state_dim,):
            raise CutDimensionError(
                f"cut beta has shape {cut.beta.shape}, pool expects "
                f"({self.state_dim},)"
            )
        self._cuts.append(cut)
        self._beta_cache = None
        self._theta_cache = None

    def beta_matrix(self) -> np.ndarray:
        if self._beta_cache is None:
            if self._cuts:
                self._beta_cache = np.stack([c.beta for c in self._cuts])
            else:
                self._beta_cache = np.zeros((0, self.state_dim))
        return self._beta_cache

    def thetas(self) -> np.ndarray:
        if self._theta_cache is None:
            self._theta_cache = np.asarray([c.theta for c in self._cuts])
        return self._theta_cache

    def thetas_with_floor(self) -> np.ndarray:
        return np.concatenate([[self.floor], self.thetas()])

    def betas_with_floor(self) -> np.ndarray:
        return np.vstack([np.zeros((1, self.state_dim)), self.beta_matrix()])

    def evaluate(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.state_dim,):
            raise CutDimensionError(
                f"state has shape {x.shape}, pool expects ({self.state_dim},)"
            )
        if not self._cuts:
            return self.floor
        return float(max(self.floor, np.max(self.thetas() + self.beta_matrix() @ x)))

    def evaluate_many(self, states: np.ndarray) -> np.ndarray:
        """Pool value at each row of ``states``; shape (P, state_dim) -> (P,)."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if not self._cuts:
            return np.full(states.shape[0], self.floor)
        vals = states @ self.beta_matrix().T + self.thetas()
        return np.maximum(self.floor, vals.max(axis=1))

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "state_dim": self.state_dim,
            "floor": self.floor,
            "cuts": [c.to_dict() for c in self._cuts],
        }

    @staticmethod
    def from_dict(d: dict) -> "CutPool":
        return CutPool(
            stage=int(d["stage"]),
            state_dim=int(d["state_dim"]),
            floor=float(d["floor"]),
            cuts=[Cut.from_dict(c) for c in d["cuts"]],
        )


def evaluate_pool(pool: CutPool, x: np.ndarray) -> float:
    return pool.evaluate(x)


def _check_realizations(
    realizations: Sequence[tuple[np.ndarray, np.ndarray, float]],
    duals: Sequence[DualCertificate],
) -> None:
    if len(realizations) != len(duals):
        raise CutDimensionError(
            f"{len(realizations)} realizations but {len(duals)} dual certificates"
        )
    total = sum(p for _, _, p in realizations)
    if abs(total - 1.0) > 1e-9:
        raise CutDimensionError(f"realization probabilities sum to {total}, not 1")


def build_terminal_cut(
    realizations: Sequence[tuple[np.ndarray, np.ndarray, float]],
    duals: Sequence[DualCertificate],
    *,
    stage: int = 0,
    iteration: int = 0,
    eps_used: float = 0.0,
) -> Cut:
    """Probability-weighted cut for a last-stage value function.

    Each realization is a ``(b, B, prob)`` triple paired with a dual
    certificate of the corresponding subproblem; the aggregated intercept is
    ``sum_j p_j <b_j, lam_j>`` and the slope ``-sum_j p_j B_j.T lam_j``.
    """
    _check_realizations(realizations, duals)
    b0, B0, _ = realizations[0]
    state_dim = np.asarray(B0).shape[1]
    theta = 0.0
    beta = np.zeros(state_dim)
    for (b, B, prob), cert in zip(realizations, duals):
        b = np.asarray(b, dtype=float)
        B = np.asarray(B, dtype=float)
        if B.shape[1] != state_dim or b.shape[0] != B.shape[0]:
            raise CutDimensionError("inconsistent realization dimensions")
        if cert.lam.shape != (b.shape[0],):
            raise CutDimensionError("dual lam does not match realization rows")
        theta += prob * float(b @ cert.lam)
        beta -= prob * (B.T @ cert.lam)
    return Cut(theta=theta, beta=beta, stage=stage, iteration=iteration, eps_used=eps_used)


def build_middle_cut(
    realizations: Sequence[tuple[np.ndarray, np.ndarray, float]],
    duals: Sequence[DualCertificate],
    next_pool_thetas: np.ndarray,
    *,
    stage: int = 0,
    iteration: int = 0,
    eps_used: float = 0.0,
) -> Cut:
    """Aggregated cut for a middle stage, with the next-pool intercept term.

    Each dual certificate's ``mu`` must carry one weight per entry of
    ``next_pool_thetas`` (floor first), in the same order; the intercept
    gains ``sum_j p_j <mu_j, next_pool_thetas>``.
    """
    _check_realizations(realizations, duals)
    next_pool_thetas = np.asarray(next_pool_thetas, dtype=float)
    b0, B0, _ = realizations[0]
    state_dim = np.asarray(B0).shape[1]
    theta = 0.0
    beta = np.zeros(state_dim)
    for (b, B, prob), cert in zip(realizations, duals):
        b = np.asarray(b, dtype=float)
        B = np.asarray(B, dtype=float)
        if cert.mu.shape != next_pool_thetas.shape:
            raise CutDimensionError(
                f"dual mu has shape {cert.mu.shape}, next pool has "
                f"{next_pool_thetas.shape} intercepts"
            )
        theta += prob * (float(b @ cert.lam) + float(cert.mu @ next_pool_thetas))
        beta -= prob * (B.T @ cert.lam)
    return Cut(theta=theta, beta=beta, stage=stage, iteration=iteration, eps_used=eps_used)
