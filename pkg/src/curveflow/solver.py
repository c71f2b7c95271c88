"""Damped Newton iteration with finite-difference Jacobian and dense LU.

The per-step systems produced by :mod:`curveflow.schemes` are small (2N+3
unknowns at most) and dense, so a direct method is both fast and bit-for-bit
deterministic. The Jacobian is rebuilt every iteration from one-sided finite
differences; systems may supply a batched evaluator so the compiled backend
can assemble all columns in one call.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import (
    CurveFlowError,
    NonFiniteResidual,
    SingularJacobian,
    SingularMatrix,
)

# LU pivots below this fraction of the row scale count as breakdown.
PIVOT_FLOOR = 1e-14


@dataclass(frozen=True)
class ResidualSystem:
    """A square nonlinear system F(u) = 0.

    evaluate must be deterministic for fixed input. evaluate_many, when
    given, maps an (m, dim) batch of points to their (m, dim) residuals and
    is used for finite-difference Jacobian columns.
    """

    dimension: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    evaluate_many: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    max_iters: int = 50
    fd_step: float = 1e-7
    damping: str = "halving"  # "halving" or "none"
    max_halvings: int = 20

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.damping not in ("halving", "none"):
            raise ValueError(f"unknown damping mode {self.damping!r}")


@dataclass(frozen=True)
class SolverReport:
    solution: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool
    history: tuple = field(default=())  # residual norm after each iteration


def lu_solve(matrix, rhs) -> np.ndarray:
    """Solve A x = b by LU with partial pivoting.

    Raises SingularMatrix when any pivot falls below PIVOT_FLOOR times the
    largest row magnitude of A.
    """
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    with warnings.catch_warnings():
        # exact zero pivots are our SingularMatrix error, not a warning
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    row_scale = np.abs(a).max(axis=1).max()
    pivots = np.abs(np.diag(lu))
    if row_scale == 0.0 or np.any(pivots <= PIVOT_FLOOR * row_scale):
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below floor {PIVOT_FLOOR * row_scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def _fd_jacobian(system: ResidualSystem, u: np.ndarray, f0: np.ndarray, h0: float):
    """One-sided finite-difference Jacobian, column j stepped by h0*(1+|u_j|)."""
    dim = system.dimension
    steps = h0 * (1.0 + np.abs(u))
    if system.evaluate_many is not None:
        pts = np.repeat(u[None, :], dim, axis=0)
        pts[np.arange(dim), np.arange(dim)] += steps
        vals = system.evaluate_many(pts)
        jac = (vals - f0[None, :]).T / steps[None, :]
    else:
        jac = np.empty((dim, dim))
        for j in range(dim):
            up = u.copy()
            up[j] += steps[j]
            jac[:, j] = (system.evaluate(up) - f0) / steps[j]
    if not np.isfinite(jac).all():
        raise NonFiniteResidual("non-finite residual while assembling the Jacobian")
    return jac


def solve(system: ResidualSystem, initial_guess, config: SolverConfig = SolverConfig()):
    """Drive F(u) = 0 from the guess; never raises on budget exhaustion.

    Newton direction from a dense LU of the FD Jacobian; step halving (up to
    config.max_halvings) until the residual norm decreases. Converged means
    ||F|| <= max(abs_tol, rel_tol * (1 + ||F(guess)||)).
    """
    u = np.array(initial_guess, dtype=float)
    if u.shape != (system.dimension,):
        raise ValueError(
            f"guess has shape {u.shape}, system dimension is {system.dimension}"
        )
    f = np.asarray(system.evaluate(u), dtype=float)
    if not np.isfinite(f).all():
        raise NonFiniteResidual("residual is not finite at the initial guess")
    fnorm = _norm(f)
    target = max(config.abs_tol, config.rel_tol * (1.0 + fnorm))
    history = [fnorm]

    iterations = 0
    while fnorm > target and iterations < config.max_iters:
        jac = _fd_jacobian(system, u, f, config.fd_step)
        try:
            step = lu_solve(jac, f)
        except SingularMatrix as exc:
            raise SingularJacobian(str(exc)) from exc

        if config.damping == "none":
            u = u - step
            f = np.asarray(system.evaluate(u), dtype=float)
            if not np.isfinite(f).all():
                raise NonFiniteResidual("residual is not finite at the Newton iterate")
            fnorm = _norm(f)
        else:
            scale = 1.0
            accepted = False
            for _ in range(config.max_halvings + 1):
                trial = u - scale * step
                try:
                    f_trial = np.asarray(system.evaluate(trial), dtype=float)
                except CurveFlowError:
                    scale *= 0.5  # candidate left the valid region
                    continue
                if np.isfinite(f_trial).all() and _norm(f_trial) < fnorm:
                    u, f, fnorm = trial, f_trial, _norm(f_trial)
                    accepted = True
                    break
                scale *= 0.5
            if not accepted:
                iterations += 1
                history.append(fnorm)
                return SolverReport(
                    solution=u,
                    iterations=iterations,
                    final_residual_norm=fnorm,
                    converged=False,
                    history=tuple(history),
                )
        iterations += 1
        history.append(fnorm)

    return SolverReport(
        solution=u,
        iterations=iterations,
        final_residual_norm=fnorm,
        converged=bool(fnorm <= target),
        history=tuple(history),
    )
