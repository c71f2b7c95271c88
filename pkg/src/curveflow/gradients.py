"""Two-point discrete variational derivatives of bending, length, and area.

Each gradient is a per-vertex vector field defined on a pair of curves
(old, new) with the same vertex count, built so that the discrete chain rule

    F(new) - F(old) = sum_i dF_i . (X_i^new - X_i^old) * w_i,
    w_i = (rhat_i(new) + rhat_i(old)) / 2

holds exactly (to round-off) for ARBITRARY pairs, not just time-step
solutions. This identity is what makes the time integrator in
:mod:`curveflow.schemes` dissipate the bending energy and conserve length
and area exactly at the nonlinear-solver tolerance.

The bending gradient is assembled from the literal factorization of the
energy difference (no algebraic simplification): the edge part D, the
curvature part split into averaged-coefficient terms E*H, E*I acting through
the first/second difference stencils, and the 1/g^3 part E*Lvec. Summation
by parts moves the stencils onto the coefficients (central first difference
is antisymmetric, the second difference is symmetric on periodic arrays).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStencil, LengthMismatch
from .geometry import (
    DEGENERACY_FLOOR,
    as_vertices,
    curve_diameter,
    edge_quantities,
    functionals,
    periodic_difference,
    polygon_area,
    second_difference,
)


@dataclass(frozen=True)
class _CurveData:
    """Per-curve quantities entering the pair assembly."""

    x: np.ndarray
    r: np.ndarray
    t: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    g: np.ndarray
    k: np.ndarray
    det: np.ndarray
    r_hat: np.ndarray


def _curve_data(vertices: np.ndarray) -> _CurveData:
    x = as_vertices(vertices)
    n = len(x)
    du = 1.0 / n
    r, t = edge_quantities(x)
    chord = np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)
    floor = DEGENERACY_FLOOR * curve_diameter(x)
    chord_len = np.hypot(chord[:, 0], chord[:, 1])
    if np.any(chord_len <= floor):
        i = int(np.argmin(chord_len))
        raise DegenerateStencil(f"X_{{i+1}} ~ X_{{i-1}} at vertex {i}")
    d1 = chord / (2.0 * du)
    d2 = second_difference(x, du)
    g = np.hypot(d1[:, 0], d1[:, 1])
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    k = det / g**3
    r_hat = (r + np.roll(r, -1)) / 2.0
    return _CurveData(x=x, r=r, t=t, d1=d1, d2=d2, g=g, k=k, det=det, r_hat=r_hat)


@dataclass(frozen=True)
class CurvePair:
    """An (old, new) curve pair with the midpoint weights rhat^(n+1/2).

    Immutable: build a fresh pair whenever the candidate new curve changes,
    so the weights are always consistent with both members.
    """

    old: np.ndarray
    new: np.ndarray
    weights: np.ndarray

    @classmethod
    def of(cls, old, new) -> "CurvePair":
        xo = as_vertices(old)
        xn = as_vertices(new)
        if len(xo) != len(xn):
            raise LengthMismatch(
                f"curve pair has mismatched sizes {len(xo)} and {len(xn)}"
            )
        ro, _ = edge_quantities(xo)
        rn, _ = edge_quantities(xn)
        rhat_o = (ro + np.roll(ro, -1)) / 2.0
        rhat_n = (rn + np.roll(rn, -1)) / 2.0
        return cls(old=xo, new=xn, weights=(rhat_o + rhat_n) / 2.0)

    @property
    def n(self) -> int:
        return len(self.old)

    @property
    def du(self) -> float:
        return 1.0 / len(self.old)


@dataclass(frozen=True)
class GradientField:
    """The three discrete variational derivatives on one pair."""

    dB: np.ndarray
    dL: np.ndarray
    dA: np.ndarray

    @classmethod
    def compute(cls, pair: CurvePair, c0: float) -> "GradientField":
        return cls(
            dB=grad_bending(pair, c0),
            dL=grad_length(pair),
            dA=grad_area(pair),
        )


@dataclass(frozen=True)
class BendingIntermediates:
    """Named intermediates of the bending-gradient factorization.

    C_i pairs the squared curvature deviations of adjacent vertices per
    curve; D is the edge part; E weights the curvature differences; H and I
    carry the averaged second/first difference components; G2 and Lvec come
    from factoring the 1/g^3 difference.
    """

    C: np.ndarray
    C_old: np.ndarray
    D: np.ndarray
    E: np.ndarray
    H: np.ndarray
    I: np.ndarray
    G2: np.ndarray
    Lvec: np.ndarray


def _perp_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """((a_y + b_y)/2, -(a_x + b_x)/2): averaged rotate-by-minus-90."""
    return np.stack([(a[:, 1] + b[:, 1]) / 2.0, -(a[:, 0] + b[:, 0]) / 2.0], axis=1)


def bending_intermediates(pair: CurvePair, c0: float) -> BendingIntermediates:
    """Assemble every intermediate of the bending gradient on `pair`."""
    new = _curve_data(pair.new)
    old = _curve_data(pair.old)

    def deviation_pairs(k):
        return ((k - c0) ** 2 + (np.roll(k, 1) - c0) ** 2) / 4.0

    c_new = deviation_pairs(new.k)
    c_old = deviation_pairs(old.k)

    # Edge part: averaged coefficients times the length-difference direction.
    p = ((c_new + c_old) / 2.0)[:, None] * (
        new.r[:, None] * new.t + old.r[:, None] * old.t
    ) / (new.r + old.r)[:, None]
    d_edge = p - np.roll(p, -1, axis=0)

    e = ((new.r + old.r) / 8.0 + (np.roll(new.r, -1) + np.roll(old.r, -1)) / 8.0) * (
        new.k + old.k - 2.0 * c0
    )

    w3 = 0.5 * (1.0 / new.g**3 + 1.0 / old.g**3)
    h = w3[:, None] * _perp_mean(new.d2, old.d2)
    i_vec = -(w3[:, None] * _perp_mean(new.d1, old.d1))

    g2 = (
        -(new.g**2 + new.g * old.g + old.g**2)
        / (2.0 * new.g**3 * old.g**3)
        * (new.det + old.det)
    )
    l_vec = (g2 / (new.g + old.g))[:, None] * (new.d1 + old.d1)

    return BendingIntermediates(
        C=c_new, C_old=c_old, D=d_edge, E=e, H=h, I=i_vec, G2=g2, Lvec=l_vec
    )


def grad_bending(pair: CurvePair, c0: float) -> np.ndarray:
    """Discrete variational derivative of the bending energy on `pair`.

    dB_i = [D_i - d1(E H)_i + d2(E I)_i - d1(E Lvec)_i] / w_i with d1 the
    central first difference and d2 the second difference over du^2.
    """
    du = pair.du
    q = bending_intermediates(pair, c0)
    eh = q.E[:, None] * q.H
    ei = q.E[:, None] * q.I
    el = q.E[:, None] * q.Lvec
    num = (
        q.D
        - periodic_difference(eh, "central1", du)
        + second_difference(ei, du)
        - periodic_difference(el, "central1", du)
    )
    return num / pair.weights[:, None]


def grad_length(pair: CurvePair) -> np.ndarray:
    """Discrete variational derivative of the length on `pair`."""
    rn, tn = edge_quantities(pair.new)
    ro, to = edge_quantities(pair.old)
    p = (rn[:, None] * tn + ro[:, None] * to) / (rn + ro)[:, None]
    return (p - np.roll(p, -1, axis=0)) / pair.weights[:, None]


def grad_area(pair: CurvePair) -> np.ndarray:
    """Discrete variational derivative of the shoelace area on `pair`."""
    xn, xo = pair.new, pair.old
    xp = np.roll(xn, -1, axis=0) + np.roll(xo, -1, axis=0)
    xm = np.roll(xn, 1, axis=0) + np.roll(xo, 1, axis=0)
    num = np.stack([(xp[:, 1] - xm[:, 1]) / 4.0, (xm[:, 0] - xp[:, 0]) / 4.0], axis=1)
    return num / pair.weights[:, None]


def chain_rule_residual(pair: CurvePair, c0: float) -> tuple[float, float, float]:
    """Normalized defect of the chain-rule identity for each functional.

    Returns |sum_i dF_i . (X^new_i - X^old_i) w_i - (F(new) - F(old))|
    divided by (1 + |F(new)|), for F in (B, L, A). Used as a per-step
    self-check by the driver and directly by the tests.
    """
    dx = pair.new - pair.old
    w = pair.weights[:, None]
    b_new, l_new, a_new, _ = functionals(pair.new, c0)
    b_old, l_old, a_old, _ = functionals(pair.old, c0)

    def defect(grad, f_new, f_old):
        lhs = float(np.sum(grad * dx * w))
        return abs(lhs - (f_new - f_old)) / (1.0 + abs(f_new))

    return (
        defect(grad_bending(pair, c0), b_new, b_old),
        defect(grad_length(pair), l_new, l_old),
        defect(grad_area(pair), a_new, a_old),
    )


__all__ = [
    "CurvePair",
    "GradientField",
    "BendingIntermediates",
    "bending_intermediates",
    "grad_bending",
    "grad_length",
    "grad_area",
    "chain_rule_residual",
    "polygon_area",
]
