import numpy as np
import pytest

from curveflow.geometry import polygon_area


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(1, n + 1) / n
    return np.stack(
        [center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)],
        axis=1,
    )


def unit_square() -> np.ndarray:
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def random_valid_curve(
    rng: np.random.Generator, n: int, k_max: float | None = None
) -> np.ndarray:
    """Uniform vertices in [-1, 1]^2, rejection-sampled to a valid curve.

    Valid means: no near-coincident consecutive vertices, no near-degenerate
    curvature stencils, positive (CCW) area. The floors here are far above
    the library's 1e-14-relative degeneracy floors, so every sample is
    comfortably inside the computable region.

    k_max additionally bounds the curvature magnitude. The bending chain-rule
    identity is exact in exact arithmetic for any valid pair, but its float64
    evaluation loses ~eps * max|k|^2-scale intermediates to cancellation, so
    roundoff-level assertions need numerically well-scaled samples.
    """
    from curveflow.geometry import discrete_curvature

    while True:
        x = rng.uniform(-1.0, 1.0, size=(n, 2))
        edges = x - np.roll(x, 1, axis=0)
        r = np.hypot(edges[:, 0], edges[:, 1])
        chords = np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)
        c = np.hypot(chords[:, 0], chords[:, 1])
        span = x.max(axis=0) - x.min(axis=0)
        diameter = np.hypot(span[0], span[1])
        if (
            diameter > 0.5
            and r.min() > 1e-3 * diameter
            and c.min() > 1e-3 * diameter
            and polygon_area(x) > 1e-3
        ):
            if k_max is None or np.abs(discrete_curvature(x)[0]).max() <= k_max:
                return x


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
