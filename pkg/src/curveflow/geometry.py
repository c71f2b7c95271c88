"""Closed polygonal curves and their discrete geometric quantities.

A curve is an ordered, periodic array of N vertices X_i in the plane, indexed
counterclockwise. Edge i joins X_{i-1} to X_i. All operations here are pure
functions on immutable data; most accept either a plain (N, 2) float array or
a :class:`PolygonalCurve`.

Discretization conventions (uniform parameter step du = 1/N):

    r_i   = |X_i - X_{i-1}|                    edge length
    t_i   = (X_i - X_{i-1}) / r_i              edge unit tangent
    T_i   = (t_i + t_{i+1}) / |t_i + t_{i+1}|  vertex unit tangent
    k_i   = det[d1_i, d2_i] / |d1_i|^3         vertex curvature
    rhat_i = (r_i + r_{i+1}) / 2               vertex-centered weight

with d1_i = (X_{i+1} - X_{i-1}) / (2 du) and d2_i the central second
difference divided by du^2, so that k_i -> 1/R on circles of radius R as
N grows. The curvature of a regular N-gon of circumradius R is exactly
2 / (R (1 + cos(2 pi / N))).

Functionals:

    bending  B = (1/2) sum_i (k_i - c0)^2 rhat_i
    length   L = sum_i r_i
    area     A = (1/2) sum_i det[X_{i-1}, X_i]      (shoelace, CCW positive)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadSpec,
    CuspAtVertex,
    DegenerateEdge,
    DegenerateStencil,
    LengthMismatch,
)

# Relative floor under which an edge or stencil chord counts as degenerate.
DEGENERACY_FLOOR = 1e-14
# Floor on |t_i + t_{i+1}| below which the vertex tangent is undefined.
CUSP_FLOOR = 1e-10
# Minimum vertex count for a PolygonalCurve (curvature stencil at i must not
# reuse X_i as a neighbor, and rhat must average two distinct edges).
MIN_VERTICES = 5


def as_vertices(curve) -> np.ndarray:
    """Coerce a PolygonalCurve or array-like to a float64 (N, 2) array."""
    if isinstance(curve, PolygonalCurve):
        return curve.vertices
    x = np.asarray(curve, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        raise BadSpec(f"expected an (N, 2) vertex array, got shape {x.shape}")
    return x


def curve_diameter(vertices) -> float:
    """Diagonal of the bounding box; the scale for degeneracy floors."""
    x = as_vertices(vertices)
    span = x.max(axis=0) - x.min(axis=0)
    return float(np.hypot(span[0], span[1]))


def periodic_difference(values, mode: str, du: float) -> np.ndarray:
    """Apply a periodic finite-difference stencil along axis 0.

    Modes: "forward"  (v_{i+1} - v_i) / du
           "backward" (v_i - v_{i-1}) / du
           "central1" (v_{i+1} - v_{i-1}) / (2 du)
           "central2" (v_{i+1} - 2 v_i + v_{i-1}) / du

    `central2` divides by du once; the curvature and gradient assembly apply
    the remaining 1/du themselves (see second_difference).
    """
    v = np.asarray(values, dtype=float)
    vp = np.roll(v, -1, axis=0)
    vm = np.roll(v, 1, axis=0)
    if mode == "forward":
        return (vp - v) / du
    if mode == "backward":
        return (v - vm) / du
    if mode == "central1":
        return (vp - vm) / (2.0 * du)
    if mode == "central2":
        return (vp - 2.0 * v + vm) / du
    raise ValueError(f"unknown difference mode {mode!r}")


def second_difference(values, du: float) -> np.ndarray:
    """Central second difference scaled by 1/du^2 (consistent derivative)."""
    return periodic_difference(values, "central2", du) / du


def edge_quantities(curve) -> tuple[np.ndarray, np.ndarray]:
    """Edge lengths r_i and unit tangents t_i = (X_i - X_{i-1}) / r_i."""
    x = as_vertices(curve)
    diff = x - np.roll(x, 1, axis=0)
    r = np.hypot(diff[:, 0], diff[:, 1])
    floor = DEGENERACY_FLOOR * curve_diameter(x)
    if np.any(r <= floor):
        i = int(np.argmin(r))
        raise DegenerateEdge(f"edge {i} has length {r[i]:.3e} (floor {floor:.3e})")
    return r, diff / r[:, None]


def vertex_tangents(edge_tangents) -> np.ndarray:
    """Vertex unit tangents T_i, the normalized mean of adjacent edge tangents."""
    t = np.asarray(edge_tangents, dtype=float)
    s = t + np.roll(t, -1, axis=0)
    norm = np.hypot(s[:, 0], s[:, 1])
    if np.any(norm < CUSP_FLOOR):
        i = int(np.argmin(norm))
        raise CuspAtVertex(f"anti-parallel edges meet at vertex {i}")
    return s / norm[:, None]


def discrete_curvature(curve) -> tuple[np.ndarray, np.ndarray]:
    """Vertex curvature k_i and the stencil magnitude g_i = |d1_i|.

    k_i = det[d1_i, d2_i] / g_i^3, positive on convex counterclockwise
    curves, negated by orientation reversal or reflection.
    """
    x = as_vertices(curve)
    n = len(x)
    du = 1.0 / n
    chord = np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)
    floor = DEGENERACY_FLOOR * curve_diameter(x)
    chord_len = np.hypot(chord[:, 0], chord[:, 1])
    if np.any(chord_len <= floor):
        i = int(np.argmin(chord_len))
        raise DegenerateStencil(f"X_{{i+1}} ~ X_{{i-1}} at vertex {i}")
    d1 = chord / (2.0 * du)
    d2 = second_difference(x, du)
    g = np.hypot(d1[:, 0], d1[:, 1])
    k = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / g**3
    return k, g


def functionals(curve, c0: float) -> tuple[float, float, float, np.ndarray]:
    """Bending energy B, length L, signed area A, and the weights rhat."""
    x = as_vertices(curve)
    r, _ = edge_quantities(x)
    k, _ = discrete_curvature(x)
    r_hat = (r + np.roll(r, -1)) / 2.0
    b = 0.5 * float(np.sum((k - c0) ** 2 * r_hat))
    return b, float(np.sum(r)), polygon_area(x), r_hat


def polygon_area(curve) -> float:
    """Shoelace area (1/2) sum det[X_{i-1}, X_i]; positive for CCW."""
    x = as_vertices(curve)
    xm = np.roll(x, 1, axis=0)
    return 0.5 * float(np.sum(xm[:, 0] * x[:, 1] - xm[:, 1] * x[:, 0]))


def discrete_inner_product(u, v, weights) -> float:
    """Weighted inner product sum_i u_i . v_i w_i of per-vertex vector fields."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (len(u) == len(v) == len(w)):
        raise LengthMismatch(f"lengths {len(u)}, {len(v)}, {len(w)} differ")
    return float(np.sum(np.sum(u * v, axis=-1) * w))


def tangential_velocity(curve, alpha: float) -> np.ndarray:
    """Deckelnick redistribution speeds w_i = -alpha d^-(1 / |d^+ X_i|).

    Vanishes on uniformly spaced curves; positive w_i moves X_i toward the
    longer of its two adjacent edges (along +T_i).
    """
    x = as_vertices(curve)
    du = 1.0 / len(x)
    fwd = periodic_difference(x, "forward", du)
    speed = np.hypot(fwd[:, 0], fwd[:, 1])
    floor = DEGENERACY_FLOOR * curve_diameter(x)
    if np.any(speed * du <= floor):
        i = int(np.argmin(speed))
        raise DegenerateEdge(f"zero forward difference at vertex {i}")
    return -alpha * periodic_difference(1.0 / speed, "backward", du)


def mesh_ratio(curve) -> float:
    """min_i r_i / max_i r_i; collapse toward 0 signals vertex concentration."""
    r, _ = edge_quantities(curve)
    return float(r.min() / r.max())


@dataclass(frozen=True)
class PolygonalCurve:
    """A validated closed polygonal curve (N >= 5, CCW, no degenerate edges).

    The vertex array is stored read-only; operations never mutate it.
    """

    vertices: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.vertices, dtype=float)
        if x.ndim != 2 or x.shape[1] != 2:
            raise BadSpec(f"expected an (N, 2) vertex array, got shape {x.shape}")
        if len(x) < MIN_VERTICES:
            raise BadSpec(f"need at least {MIN_VERTICES} vertices, got {len(x)}")
        if not np.isfinite(x).all():
            raise BadSpec("vertices contain NaN or Inf")
        edge_quantities(x)  # raises DegenerateEdge on coincident vertices
        if polygon_area(x) <= 0.0:
            raise BadSpec("curve is clockwise or has nonpositive area")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "vertices", x)

    @classmethod
    def from_vertices(cls, vertices, *, on_clockwise: str = "raise") -> "PolygonalCurve":
        """Build a curve, optionally flipping clockwise input to CCW.

        on_clockwise: "raise" rejects clockwise input; "flip" reverses the
        vertex order with a warning (the ingestion convention).
        """
        x = as_vertices(vertices)
        if on_clockwise not in ("raise", "flip"):
            raise ValueError(f"unknown on_clockwise policy {on_clockwise!r}")
        if on_clockwise == "flip" and polygon_area(x) < 0.0:
            warnings.warn("input curve is clockwise; reversing to counterclockwise")
            x = x[::-1]
        return cls(x)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def du(self) -> float:
        return 1.0 / len(self.vertices)


@dataclass(frozen=True)
class FlowParams:
    """Physical and stepping parameters shared by both flows."""

    c0: float
    alpha: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0.0:
            raise BadSpec(f"dt must be positive, got {self.dt}")
        if self.alpha < 0.0:
            raise BadSpec(f"alpha must be nonnegative, got {self.alpha}")


@dataclass(frozen=True)
class GeometricCache:
    """Every per-vertex/per-edge quantity of a curve, computed in one pass."""

    r: np.ndarray
    t: np.ndarray
    T: np.ndarray
    g: np.ndarray
    k: np.ndarray
    r_hat: np.ndarray
    du: float
    B: float
    L: float
    A: float

    @classmethod
    def compute(cls, curve, c0: float) -> "GeometricCache":
        x = as_vertices(curve)
        r, t = edge_quantities(x)
        k, g = discrete_curvature(x)
        b, length, area, r_hat = functionals(x, c0)
        return cls(
            r=r,
            t=t,
            T=vertex_tangents(t),
            g=g,
            k=k,
            r_hat=r_hat,
            du=1.0 / len(x),
            B=b,
            L=length,
            A=area,
        )
