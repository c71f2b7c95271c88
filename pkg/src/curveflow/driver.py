"""Time-stepping loops, relocation preprocessing, and the gamma study.

One run is strictly sequential; each step freezes the tangential data on the
old curve, solves the implicit system, validates the result, and records a
full diagnostics row. Solver non-convergence and geometry degeneration are
data, not crashes: a run ends with a termination reason, never an unhandled
exception.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import CurveFlowError, SolverError, SolverFailure, ValidationError
from .geometry import FlowParams, PolygonalCurve, functionals, mesh_ratio
from .gradients import CurvePair, chain_rule_residual
from .kernels import make_system
from .schemes import FrozenExplicitData
from .solver import SolverConfig, solve

logger = logging.getLogger("curveflow")

FLOWS = ("willmore", "helfrich", "relocate")

# A chain-rule defect above this in any accepted step means the gradient
# assembly is broken; the run aborts as a geometry failure.
CHAIN_RULE_GUARD = 1e-9


@dataclass(frozen=True)
class RunConfig:
    flow: str
    params: FlowParams
    max_steps: int
    stop_epsilon: Optional[float] = None
    snapshot_every: int = 100
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.flow not in FLOWS:
            raise ValidationError(f"flow must be one of {FLOWS}, got {self.flow!r}")
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.snapshot_every < 1:
            raise ValidationError(
                f"snapshot_every must be >= 1, got {self.snapshot_every}"
            )
        if self.stop_epsilon is not None and not self.stop_epsilon > 0:
            raise ValidationError(
                f"stop_epsilon must be positive when set, got {self.stop_epsilon}"
            )


@dataclass(frozen=True)
class StepDiagnostics:
    step: int
    B: float
    L: float
    A: float
    lam: Optional[float]
    mu: Optional[float]
    gamma: Optional[float]
    mesh_ratio: float
    solver_iterations: int
    residual: float
    chain_rule_residuals: tuple[float, float, float]


@dataclass(frozen=True)
class TimeSeries:
    config: RunConfig
    diagnostics: list[StepDiagnostics]
    snapshots: list[tuple[int, PolygonalCurve]]
    termination: str  # max_steps | epsilon_stop | solver_failure | geometry_failure
    failure_detail: str = ""

    @property
    def final_curve(self) -> PolygonalCurve:
        return self.snapshots[-1][1]


def _multiplier_count(flow: str) -> int:
    return {"willmore": 1, "helfrich": 3, "relocate": 0}[flow]


def step(
    curve: PolygonalCurve,
    config: RunConfig,
    multiplier_guess: Optional[np.ndarray] = None,
) -> tuple[PolygonalCurve, StepDiagnostics]:
    """Advance one time level; raises on solver or geometry failure.

    multiplier_guess warm-starts gamma (and lambda, mu) from the previous
    step; zeros otherwise.
    """
    n_mult = _multiplier_count(config.flow)
    if multiplier_guess is None:
        multiplier_guess = np.zeros(n_mult)
    multiplier_guess = np.asarray(multiplier_guess, dtype=float)
    if multiplier_guess.shape != (n_mult,):
        raise ValidationError(
            f"{config.flow} expects {n_mult} multipliers, got {multiplier_guess.shape}"
        )

    frozen = FrozenExplicitData.from_curve(curve, config.params.alpha)
    system = make_system(config.flow, frozen, config.params)
    guess = np.concatenate([curve.vertices.ravel(), multiplier_guess])
    report = solve(system, guess, config.solver)
    if not report.converged:
        raise SolverFailure(
            f"Newton did not converge: residual {report.final_residual_norm:.3e} "
            f"after {report.iterations} iterations"
        )

    n = curve.n
    new_vertices = report.solution[: 2 * n].reshape(n, 2)
    multipliers = report.solution[2 * n :]
    new_curve = PolygonalCurve(new_vertices)

    pair = CurvePair.of(curve.vertices, new_vertices)
    chain = chain_rule_residual(pair, config.params.c0)
    if max(chain) > CHAIN_RULE_GUARD:
        raise CurveFlowError(
            f"chain-rule self-check failed: residuals {chain} exceed "
            f"{CHAIN_RULE_GUARD:.0e}; gradient assembly is inconsistent"
        )

    b, length, area, _ = functionals(new_vertices, config.params.c0)
    lam = mu = gamma = None
    if config.flow == "willmore":
        gamma = float(multipliers[0])
    elif config.flow == "helfrich":
        lam, mu, gamma = (float(m) for m in multipliers)
    diag = StepDiagnostics(
        step=0,  # assigned by run()
        B=b,
        L=length,
        A=area,
        lam=lam,
        mu=mu,
        gamma=gamma,
        mesh_ratio=mesh_ratio(new_vertices),
        solver_iterations=report.iterations,
        residual=report.final_residual_norm,
        chain_rule_residuals=chain,
    )
    return new_curve, diag


def run(initial: PolygonalCurve, config: RunConfig) -> TimeSeries:
    """Iterate `step` until max_steps, the epsilon stop, or a failure."""
    diagnostics: list[StepDiagnostics] = []
    snapshots: list[tuple[int, PolygonalCurve]] = [(0, initial)]
    termination = "max_steps"
    detail = ""
    curve = initial
    carry = np.zeros(_multiplier_count(config.flow))
    b_prev = functionals(initial.vertices, config.params.c0)[0]

    for n in range(config.max_steps):
        try:
            curve, diag = step(curve, config, carry)
        except SolverError as exc:
            termination = "solver_failure"
            detail = str(exc)
            logger.warning("run stopped at step %d: %s", n + 1, detail)
            break
        except CurveFlowError as exc:
            termination = "geometry_failure"
            detail = str(exc)
            logger.warning("run stopped at step %d: %s", n + 1, detail)
            break
        diag = replace(diag, step=n + 1)
        diagnostics.append(diag)
        if diag.gamma is not None:
            carry = np.array(
                [diag.gamma]
                if config.flow == "willmore"
                else [diag.lam, diag.mu, diag.gamma]
            )
        if (n + 1) % config.snapshot_every == 0:
            snapshots.append((n + 1, curve))
        if (
            config.stop_epsilon is not None
            and b_prev != 0.0
            and (b_prev - diag.B) / b_prev < config.stop_epsilon
        ):
            termination = "epsilon_stop"
            break
        b_prev = diag.B

    last_step = diagnostics[-1].step if diagnostics else 0
    if not snapshots or snapshots[-1][0] != last_step:
        snapshots.append((last_step, curve))
    return TimeSeries(
        config=config,
        diagnostics=diagnostics,
        snapshots=snapshots,
        termination=termination,
        failure_detail=detail,
    )


def relocate(
    curve: PolygonalCurve, alpha: float, dt: float, until_time: float
) -> PolygonalCurve:
    """Even out vertex spacing by pure tangential motion up to `until_time`.

    The shape drifts only through vertices sliding along chord directions;
    the bending term is absent entirely.
    """
    steps = max(1, math.ceil(until_time / dt))
    config = RunConfig(
        flow="relocate",
        params=FlowParams(c0=0.0, alpha=alpha, dt=dt),
        max_steps=steps,
        snapshot_every=max(1, steps),
    )
    series = run(curve, config)
    if series.termination not in ("max_steps", "epsilon_stop"):
        raise SolverFailure(
            f"relocation failed at step {len(series.diagnostics) + 1}: "
            f"{series.failure_detail}"
        )
    return series.final_curve


@dataclass(frozen=True)
class GammaStudyRow:
    axis_value: float
    final_gamma: Optional[float]
    steps: int
    termination: str


def gamma_study(
    base: RunConfig,
    axis: str,
    values,
    make_initial: Callable[[Optional[int]], PolygonalCurve],
    base_n: Optional[int] = None,
) -> list[GammaStudyRow]:
    """Run to the epsilon stop for each axis value; record the final gamma.

    axis "dt" varies the time step at fixed vertex count; axis "n" varies
    the vertex count at fixed time step. make_initial(n) supplies the
    initial curve (n is None on the dt axis unless base_n is given, meaning
    "use your default vertex count"). Rows keep the axis order; a sub-run
    that does not reach the epsilon stop is recorded with its termination
    instead of raising.
    """
    if axis not in ("dt", "n"):
        raise ValidationError(f"axis must be 'dt' or 'n', got {axis!r}")
    if base.stop_epsilon is None:
        raise ValidationError("gamma_study requires stop_epsilon in the base config")
    rows: list[GammaStudyRow] = []
    for value in values:
        if axis == "dt":
            config = replace(base, params=replace(base.params, dt=float(value)))
            n_vertices = base_n
        else:
            config = base
            n_vertices = int(value)
        initial = make_initial(n_vertices)
        series = run(initial, config)
        ok = series.termination == "epsilon_stop" and series.diagnostics
        rows.append(
            GammaStudyRow(
                axis_value=float(value),
                final_gamma=series.diagnostics[-1].gamma if ok else None,
                steps=len(series.diagnostics),
                termination=series.termination,
            )
        )
        logger.info(
            "gamma study %s=%g: %s after %d steps, gamma=%s",
            axis,
            value,
            series.termination,
            len(series.diagnostics),
            rows[-1].final_gamma,
        )
    return rows
