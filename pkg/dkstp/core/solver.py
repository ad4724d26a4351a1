"""
Sparse recovery engines.

* :class:`BasisPursuitSolver` – ``min ‖s‖₁ s.t. ψs = y`` by ADMM: projection
  onto the affine set through a cached Cholesky factor of ``ψψᵀ``,
  soft-thresholding at ``1/ρ``, scaled dual update. Stops on small residuals
  or on a small duality gap; ``ρ`` is rebalanced against the residuals.
* :class:`BpdnSolver` – ``min ½‖ψs − y‖₂² + λ‖s‖₁`` by the same splitting.
* :class:`OmpSolver` – orthogonal matching pursuit.

Solvers are prepared once per matrix and can then be called for many
right-hand sides (one per image block) from several threads; ``solve``
does not mutate solver state.
"""

from __future__ import annotations

import logging
import math
from typing import Protocol

import numpy as np
from scipy.linalg import cho_factor, cho_solve, qr, solve_triangular

from dkstp.config import CONFIG
from dkstp.exceptions import DimensionError, RankDeficientError
from dkstp.models import Matrix, Signal, SolveReport, SolverConfig, SolverKind

logger = logging.getLogger(__name__)

# Residual balancing: checked every RHO_PERIOD iterations, applied when the
# relative residuals differ by more than RHO_RATIO, one step capped at RHO_SCALING.
RHO_PERIOD = 10
RHO_RATIO = 1.2
RHO_SCALING = 1000.0


class Solver(Protocol):
    def solve(self, y: Signal) -> SolveReport: ...


def soft_threshold(v: Signal, threshold: float) -> Signal:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def _relative(residual: float, *scales: float) -> float:
    scale = max((float(s) for s in scales), default=0.0)
    return residual / scale if scale > 0.0 else residual


def balance_penalty(primal: float, dual: float) -> float:
    """
    Multiplier for the ADMM penalty given relative primal and dual residuals.
    A large primal residual raises rho, a large dual residual lowers it.
    """
    if primal == 0.0 and dual == 0.0:
        return 1.0
    if dual == 0.0:
        return RHO_SCALING
    if primal == 0.0:
        return 1.0 / RHO_SCALING
    ratio = primal / dual
    if 1.0 / RHO_RATIO <= ratio <= RHO_RATIO:
        return 1.0
    return float(np.clip(math.sqrt(ratio), 1.0 / RHO_SCALING, RHO_SCALING))


def _as_problem(psi: Matrix) -> Matrix:
    psi = np.asarray(psi, dtype=np.float64)
    if psi.ndim != 2 or psi.size == 0:
        raise DimensionError(f"Sensing matrix must be a non-empty 2-D array, got shape {psi.shape}.")
    if not np.all(np.isfinite(psi)):
        raise DimensionError("Sensing matrix must be finite.")
    return psi


def _check_rhs(psi: Matrix, y: Signal) -> Signal:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (psi.shape[0],):
        raise DimensionError(
            f"Measurement vector of shape {y.shape} does not match {psi.shape[0]} rows."
        )
    if not np.all(np.isfinite(y)):
        raise DimensionError("Measurement vector must be finite.")
    return y


def numerical_rank(a: Matrix, rtol: float = CONFIG.rank_rtol) -> int:
    sv = np.linalg.svd(a, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > rtol * sv[0]))


class BasisPursuitSolver:
    """
    Equality-constrained L1 minimization.

    Wide matrices need full row rank. A square or tall matrix with full column
    rank admits at most one feasible point, which is returned directly from a
    QR least-squares solve.
    """

    def __init__(self, psi: Matrix, cfg: SolverConfig | None = None) -> None:
        self.psi = _as_problem(psi)
        self.cfg = cfg or SolverConfig()
        m, n = self.psi.shape
        rank = numerical_rank(self.psi)
        if rank < min(m, n):
            raise RankDeficientError(
                f"Sensing matrix {m}x{n} has numerical rank {rank}; "
                f"basis pursuit needs rank {min(m, n)}."
            )
        self._wide = m < n
        if self._wide:
            self._gram = cho_factor(self.psi @ self.psi.T)
        else:
            self._q, self._r = qr(self.psi, mode="economic")

    @property
    def shape(self) -> tuple[int, int]:
        return self.psi.shape

    def project(self, v: Signal, y: Signal) -> Signal:
        """Euclidean projection of ``v`` onto ``{z : ψz = y}``."""
        return v - self.psi.T @ cho_solve(self._gram, self.psi @ v - y)

    def _tolerance(self, y: Signal) -> float:
        m = self.psi.shape[0]
        return self.cfg.abs_tol * math.sqrt(m) + self.cfg.rel_tol * float(np.linalg.norm(y))

    def solve(self, y: Signal) -> SolveReport:
        y = _check_rhs(self.psi, y)
        if not self._wide:
            return self._solve_determined(y)
        return self._solve_admm(y)

    def _solve_determined(self, y: Signal) -> SolveReport:
        s = solve_triangular(self._r, self._q.T @ y)
        primal = float(np.linalg.norm(self.psi @ s - y))
        return SolveReport(
            solution=s,
            iterations=1,
            primal_residual=primal,
            dual_residual=0.0,
            converged=primal <= self._tolerance(y),
        )

    def _solve_admm(self, y: Signal) -> SolveReport:
        cfg = self.cfg
        n = self.psi.shape[1]
        rho = cfg.rho
        eps_pri = self._tolerance(y)

        # Warm start from the least-norm feasible point.
        z = self.project(np.zeros(n), y)
        u = np.zeros(n)
        best = (math.inf, z, math.inf, math.inf)
        primal = dual = math.inf
        converged = False
        certified: Signal | None = None
        iterations = 0

        for iterations in range(1, cfg.max_iters + 1):
            x = self.project(z - u, y)
            z_old = z
            z = soft_threshold(x + u, 1.0 / rho)
            u = u + x - z

            primal = float(np.linalg.norm(self.psi @ z - y))
            dual = rho * float(np.linalg.norm(z - z_old))
            eps_dual = cfg.abs_tol * math.sqrt(n) + cfg.rel_tol * rho * float(np.linalg.norm(u))

            score = max(primal / eps_pri, dual / eps_dual)
            if score < best[0]:
                best = (score, z, primal, dual)
            if primal <= eps_pri and dual <= eps_dual:
                converged = True
                break

            if iterations % RHO_PERIOD == 0:
                # ρu is a subgradient of ‖z‖₁; its component in range(ψᵀ) gives a dual point.
                candidate = self._finish(z, y)
                if self.duality_gap(candidate, rho * u, y) <= self._gap_tolerance(candidate):
                    converged = True
                    certified = candidate
                    primal = float(np.linalg.norm(self.psi @ candidate - y))
                    break
                if cfg.auto_rho:
                    tau = balance_penalty(
                        _relative(float(np.linalg.norm(x - z)), np.linalg.norm(x), np.linalg.norm(z)),
                        _relative(dual, rho * np.linalg.norm(u)),
                    )
                    rho *= tau
                    u = u / tau

        if not converged:
            _, z, primal, dual = best
            logger.debug(
                "Basis pursuit stopped after %d iterations without converging "
                "(primal=%.3e, dual=%.3e).",
                iterations,
                primal,
                dual,
            )

        s = certified if certified is not None else self._finish(z, y)
        return SolveReport(
            solution=s,
            iterations=iterations,
            primal_residual=primal,
            dual_residual=dual,
            converged=converged,
        )

    def _finish(self, z: Signal, y: Signal) -> Signal:
        s = self.project(z, y)
        if self.cfg.polish:
            s = self._polish(z, s, y)
        return s

    def duality_gap(self, s: Signal, subgradient: Signal, y: Signal) -> float:
        """
        ``‖s‖₁ − yᵀν`` for the dual point ``ν`` obtained by projecting
        ``subgradient`` onto ``range(ψᵀ)`` and scaling it into ``‖ψᵀν‖∞ ≤ 1``.
        Non-negative for feasible ``s``; zero certifies optimality.
        """
        nu = cho_solve(self._gram, self.psi @ subgradient)
        peak = float(np.max(np.abs(self.psi.T @ nu)))
        if peak > 1.0:
            nu = nu / peak
        return float(np.abs(s).sum() - y @ nu)

    def _gap_tolerance(self, s: Signal) -> float:
        return self.cfg.abs_tol * math.sqrt(s.size) + self.cfg.rel_tol * float(np.abs(s).sum())

    def _polish(self, z: Signal, s: Signal, y: Signal) -> Signal:
        support = np.flatnonzero(z)
        m = self.psi.shape[0]
        if support.size == 0 or support.size > m:
            return s
        sub = self.psi[:, support]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        candidate = np.zeros_like(s)
        candidate[support] = coef
        feasible = np.linalg.norm(self.psi @ candidate - y) <= 1e-9 * max(1.0, float(np.linalg.norm(y)))
        if feasible and np.abs(candidate).sum() <= np.abs(s).sum() + 1e-9:
            return candidate
        return s


class BpdnSolver:
    """
    L1-regularized least squares. Meant for noisy measurements; the noiseless
    pipeline default remains basis pursuit.

    The returned vector is the ADMM iterate, a minimizer of the lasso
    objective; ``debias`` swaps it for a least-squares refit on its support.
    """

    def __init__(self, psi: Matrix, cfg: SolverConfig) -> None:
        if cfg.lam <= 0:
            raise ValueError("BPDN needs lambda > 0; use basis pursuit for the unregularized problem.")
        self.psi = _as_problem(psi)
        self.cfg = cfg
        m, n = self.psi.shape
        self._tall = m >= n
        self._factor = self._factorize(cfg.rho)

    def _factorize(self, rho: float) -> tuple[Matrix, bool]:
        m, n = self.psi.shape
        if self._tall:
            return cho_factor(self.psi.T @ self.psi + rho * np.eye(n))
        # Matrix inversion lemma keeps the factor at m x m.
        return cho_factor(np.eye(m) + (self.psi @ self.psi.T) / rho)

    def _x_update(self, q: Signal, factor: tuple[Matrix, bool], rho: float) -> Signal:
        if self._tall:
            return cho_solve(factor, q)
        return q / rho - self.psi.T @ cho_solve(factor, self.psi @ q) / rho**2

    def objective(self, s: Signal, y: Signal) -> float:
        return 0.5 * float(np.sum((self.psi @ s - y) ** 2)) + self.cfg.lam * float(np.abs(s).sum())

    def solve(self, y: Signal) -> SolveReport:
        y = _check_rhs(self.psi, y)
        cfg = self.cfg
        m, n = self.psi.shape
        psi_t_y = self.psi.T @ y

        # Zero satisfies the optimality conditions when λ dominates every correlation.
        if np.max(np.abs(psi_t_y)) <= cfg.lam:
            return SolveReport(np.zeros(n), 0, 0.0, 0.0, True)

        rho = cfg.rho
        factor = self._factor
        z = np.zeros(n)
        u = np.zeros(n)
        primal = dual = math.inf
        converged = False
        iterations = 0
        for iterations in range(1, cfg.max_iters + 1):
            x = self._x_update(psi_t_y + rho * (z - u), factor, rho)
            z_old = z
            z = soft_threshold(x + u, cfg.lam / rho)
            u = u + x - z

            norm_x, norm_z, norm_u = (float(np.linalg.norm(v)) for v in (x, z, u))
            primal = float(np.linalg.norm(x - z))
            dual = rho * float(np.linalg.norm(z - z_old))
            eps_pri = cfg.abs_tol * math.sqrt(n) + cfg.rel_tol * max(norm_x, norm_z)
            eps_dual = cfg.abs_tol * math.sqrt(n) + cfg.rel_tol * rho * norm_u
            if primal <= eps_pri and dual <= eps_dual:
                converged = True
                break

            if cfg.auto_rho and iterations % RHO_PERIOD == 0:
                tau = balance_penalty(_relative(primal, norm_x, norm_z), _relative(dual, rho * norm_u))
                if tau != 1.0:
                    rho *= tau
                    u = u / tau
                    factor = self._factorize(rho)

        s = z
        if cfg.debias:
            support = np.flatnonzero(z)
            if 0 < support.size <= m:
                coef, *_ = np.linalg.lstsq(self.psi[:, support], y, rcond=None)
                s = np.zeros(n)
                s[support] = coef
        return SolveReport(s, iterations, primal, dual, converged)


class OmpSolver:
    """
    Greedy selection by normalized correlation with a least-squares refit per
    step. Equal correlations resolve to the lowest column index.
    """

    def __init__(self, psi: Matrix, cfg: SolverConfig | None = None) -> None:
        self.psi = _as_problem(psi)
        self.cfg = cfg or SolverConfig(kind=SolverKind.OMP)
        self._norms = np.linalg.norm(self.psi, axis=0)
        if np.any(self._norms == 0.0):
            zero = int(np.flatnonzero(self._norms == 0.0)[0])
            raise DimensionError(f"OMP needs nonzero columns; column {zero} is zero.")

    def solve(self, y: Signal) -> SolveReport:
        y = _check_rhs(self.psi, y)
        m, n = self.psi.shape
        tol = self.cfg.abs_tol
        max_atoms = min(self.cfg.omp_sparsity or min(m, n), m, n)

        s = np.zeros(n)
        residual = y.copy()
        if np.linalg.norm(residual) <= tol:
            return SolveReport(s, 0, float(np.linalg.norm(residual)), 0.0, True)

        selected: list[int] = []
        coef = np.zeros(0)
        while len(selected) < max_atoms:
            corr = np.abs(self.psi.T @ residual) / self._norms
            corr[selected] = -1.0
            selected.append(int(np.argmax(corr)))
            coef, *_ = np.linalg.lstsq(self.psi[:, selected], y, rcond=None)
            residual = y - self.psi[:, selected] @ coef
            if np.linalg.norm(residual) <= tol:
                break

        s[selected] = coef
        res_norm = float(np.linalg.norm(residual))
        converged = res_norm <= tol or (
            self.cfg.omp_sparsity is not None and len(selected) == self.cfg.omp_sparsity
        )
        return SolveReport(s, len(selected), res_norm, 0.0, converged)


def build_solver(psi: Matrix, cfg: SolverConfig) -> Solver:
    if cfg.kind is SolverKind.BP:
        return BasisPursuitSolver(psi, cfg)
    if cfg.kind is SolverKind.BPDN:
        return BpdnSolver(psi, cfg)
    return OmpSolver(psi, cfg)


def basis_pursuit(psi: Matrix, y: Signal, cfg: SolverConfig | None = None) -> SolveReport:
    return BasisPursuitSolver(psi, cfg).solve(y)


def bpdn(psi: Matrix, y: Signal, cfg: SolverConfig) -> SolveReport:
    return BpdnSolver(psi, cfg).solve(y)


def omp(psi: Matrix, y: Signal, cfg: SolverConfig | None = None) -> SolveReport:
    return OmpSolver(psi, cfg).solve(y)
