"""Nonlinear residual systems for the structure-preserving time steps.

One time step advances the curve X^(n) to X^(n+1) implicitly. The motion law
for the Willmore flow is

    (X^(n+1) - X^(n)) / dt = -dB + w T + gamma dB

with the discrete bending gradient dB evaluated on the (old, new) pair, the
tangential speeds w and vertex tangents T frozen on the old curve, and the
multiplier gamma fixed by the constraint (dB, w T + gamma dB) = 0 so that
the step dissipates the bending energy exactly:

    (B^(n+1) - B^(n)) / dt = -(dB, dB) <= 0.

The Helfrich flow adds lambda dL + mu dA to the motion law and three scalar
constraints: (dL, RHS) = 0 and (dA, RHS) = 0 conserve length and area, and
(dB, RHS) + D = 0 pins the dissipation rate to the Gram ratio D, giving
(B^(n+1) - B^(n)) / dt = -D <= 0.

All inner products are weighted by the midpoint weights rhat^(n+1/2), which
are recomputed from the candidate new curve on every residual evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularGram
from .geometry import (
    FlowParams,
    as_vertices,
    edge_quantities,
    tangential_velocity,
    vertex_tangents,
)
from .gradients import CurvePair, grad_area, grad_bending, grad_length

# Relative floor on the (dL, dA) Gram determinant; below it dL and dA are
# numerically parallel (constant-curvature states) and D is undefined.
GRAM_FLOOR = 1e-12


@dataclass(frozen=True)
class FrozenExplicitData:
    """Quantities evaluated once per step on the old curve: w_i, T_i, X^(n)."""

    w: np.ndarray
    T: np.ndarray
    old: np.ndarray

    @classmethod
    def from_curve(cls, curve, alpha: float) -> "FrozenExplicitData":
        x = as_vertices(curve)
        _, t = edge_quantities(x)
        return cls(w=tangential_velocity(x, alpha), T=vertex_tangents(t), old=x)

    @property
    def n(self) -> int:
        return len(self.old)


@dataclass(frozen=True)
class WillmoreUnknowns:
    """Unknowns of one Willmore step: N vertices then gamma.

    Flat layout: [x_1, y_1, ..., x_N, y_N, gamma], length 2N + 1.
    """

    new_vertices: np.ndarray
    gamma: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.new_vertices), [self.gamma]])

    @classmethod
    def from_vector(cls, vec, n: int) -> "WillmoreUnknowns":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (2 * n + 1,):
            raise ValueError(f"expected length {2 * n + 1}, got {vec.shape}")
        return cls(new_vertices=vec[: 2 * n].reshape(n, 2), gamma=float(vec[2 * n]))


@dataclass(frozen=True)
class HelfrichUnknowns:
    """Unknowns of one Helfrich step: N vertices then lambda, mu, gamma.

    Flat layout: [x_1, y_1, ..., x_N, y_N, lambda, mu, gamma], length 2N + 3.
    """

    new_vertices: np.ndarray
    lam: float
    mu: float
    gamma: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [np.ravel(self.new_vertices), [self.lam, self.mu, self.gamma]]
        )

    @classmethod
    def from_vector(cls, vec, n: int) -> "HelfrichUnknowns":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (2 * n + 3,):
            raise ValueError(f"expected length {2 * n + 3}, got {vec.shape}")
        return cls(
            new_vertices=vec[: 2 * n].reshape(n, 2),
            lam=float(vec[2 * n]),
            mu=float(vec[2 * n + 1]),
            gamma=float(vec[2 * n + 2]),
        )


def weighted_dot(u: np.ndarray, v: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(np.sum(u * v, axis=-1) * weights))


def gram_ratio(dB, dL, dA, weights) -> float:
    """Dissipation rate D: det of the 3x3 Gram of (dB, dL, dA) over the
    2x2 Gram of (dL, dA), all inner products weighted.

    Equals the squared weighted norm of the component of dB orthogonal to
    span{dL, dA}, hence >= 0 up to round-off.
    """
    g_bb = weighted_dot(dB, dB, weights)
    g_bl = weighted_dot(dB, dL, weights)
    g_ba = weighted_dot(dB, dA, weights)
    g_ll = weighted_dot(dL, dL, weights)
    g_la = weighted_dot(dL, dA, weights)
    g_aa = weighted_dot(dA, dA, weights)
    det2 = g_ll * g_aa - g_la * g_la
    if det2 <= GRAM_FLOOR * g_ll * g_aa:
        raise SingularGram(
            f"(dL, dA) Gram determinant {det2:.3e} vanishes; "
            "length and area gradients are parallel"
        )
    det3 = (
        g_bb * det2
        - g_bl * (g_bl * g_aa - g_la * g_ba)
        + g_ba * (g_bl * g_la - g_ll * g_ba)
    )
    return det3 / det2


def willmore_residual(
    u: WillmoreUnknowns, frozen: FrozenExplicitData, params: FlowParams
) -> np.ndarray:
    """Residual of the Willmore scheme; length 2N + 1.

    Rows 1..2N: (X^(n+1) - X^(n))/dt + dB - w T - gamma dB, interleaved
    (x, y) per vertex. Last row: (dB, w T + gamma dB) weighted by the
    recomputed rhat^(n+1/2).
    """
    pair = CurvePair.of(frozen.old, u.new_vertices)
    d_bend = grad_bending(pair, params.c0)
    tangential = frozen.w[:, None] * frozen.T
    motion = (
        (u.new_vertices - frozen.old) / params.dt
        + d_bend
        - tangential
        - u.gamma * d_bend
    )
    constraint = weighted_dot(d_bend, tangential + u.gamma * d_bend, pair.weights)
    return np.concatenate([motion.ravel(), [constraint]])


def helfrich_residual(
    u: HelfrichUnknowns, frozen: FrozenExplicitData, params: FlowParams
) -> np.ndarray:
    """Residual of the Helfrich scheme; length 2N + 3.

    Rows 1..2N: (X^(n+1) - X^(n))/dt - RHS with
    RHS = -dB + lambda dL + mu dA + w T + gamma dB. Then the three scalar
    constraints (dL, RHS), (dA, RHS), (dB, RHS) + D.
    """
    pair = CurvePair.of(frozen.old, u.new_vertices)
    d_bend = grad_bending(pair, params.c0)
    d_len = grad_length(pair)
    d_area = grad_area(pair)
    rhs = (
        -d_bend
        + u.lam * d_len
        + u.mu * d_area
        + frozen.w[:, None] * frozen.T
        + u.gamma * d_bend
    )
    motion = (u.new_vertices - frozen.old) / params.dt - rhs
    d_rate = gram_ratio(d_bend, d_len, d_area, pair.weights)
    return np.concatenate(
        [
            motion.ravel(),
            [
                weighted_dot(d_len, rhs, pair.weights),
                weighted_dot(d_area, rhs, pair.weights),
                weighted_dot(d_bend, rhs, pair.weights) + d_rate,
            ],
        ]
    )


def relocation_residual(
    new_vertices, frozen: FrozenExplicitData, params: FlowParams
) -> np.ndarray:
    """Residual of the pure tangential (vertex relocation) step; length 2N.

    The Willmore scheme with dB forced to zero and the then-vacuous gamma
    row dropped: (X^(n+1) - X^(n))/dt - w T = 0.
    """
    xn = as_vertices(new_vertices)
    motion = (xn - frozen.old) / params.dt - frozen.w[:, None] * frozen.T
    return motion.ravel()
