"""Backend selection for the per-step residual systems.

Two interchangeable implementations of the same arithmetic exist:

* ``compiled`` - the Cython extension :mod:`curveflow._speedups`, with fused
  loops and batched evaluation for finite-difference Jacobian columns;
* ``python``  - the readable numpy path in :mod:`curveflow.schemes`.

The compiled backend is picked at import when the extension is available;
set ``CURVEFLOW_PURE_PYTHON=1`` to force the fallback. Both backends are
exercised against each other in tests/test_kernels.py, and
benchmarks/bench_kernels.py measures the gap.
"""

from __future__ import annotations

import os

import numpy as np

from . import schemes
from .geometry import FlowParams
from .schemes import FrozenExplicitData, HelfrichUnknowns, WillmoreUnknowns
from .solver import ResidualSystem

try:
    from . import _speedups
except ImportError:  # extension not built
    _speedups = None


def _force_pure_python() -> bool:
    return os.environ.get("CURVEFLOW_PURE_PYTHON", "").strip() not in ("", "0")


HAVE_COMPILED = _speedups is not None
BACKEND = "compiled" if (HAVE_COMPILED and not _force_pure_python()) else "python"


def _python_system(frozen: FrozenExplicitData, params: FlowParams, helfrich: bool):
    n = frozen.n

    if helfrich:
        def evaluate(u: np.ndarray) -> np.ndarray:
            return schemes.helfrich_residual(
                HelfrichUnknowns.from_vector(u, n), frozen, params
            )
    else:
        def evaluate(u: np.ndarray) -> np.ndarray:
            return schemes.willmore_residual(
                WillmoreUnknowns.from_vector(u, n), frozen, params
            )

    def evaluate_many(pts: np.ndarray) -> np.ndarray:
        return np.stack([evaluate(p) for p in pts])

    dim = 2 * n + (3 if helfrich else 1)
    return ResidualSystem(dimension=dim, evaluate=evaluate, evaluate_many=evaluate_many)


def _compiled_system(frozen: FrozenExplicitData, params: FlowParams, helfrich: bool):
    kernel = _speedups.SchemeKernel(
        frozen.old, frozen.w, frozen.T, params.c0, params.dt, helfrich
    )

    def evaluate(u: np.ndarray) -> np.ndarray:
        return kernel.residual(np.ascontiguousarray(u, dtype=np.float64))

    def evaluate_many(pts: np.ndarray) -> np.ndarray:
        return kernel.residual_many(np.ascontiguousarray(pts, dtype=np.float64))

    return ResidualSystem(
        dimension=kernel.dimension, evaluate=evaluate, evaluate_many=evaluate_many
    )


def make_willmore_system(
    frozen: FrozenExplicitData, params: FlowParams, backend: str | None = None
) -> ResidualSystem:
    """Residual system for one Willmore step; unknowns [vertices..., gamma]."""
    use = backend or BACKEND
    if use == "compiled" and HAVE_COMPILED:
        return _compiled_system(frozen, params, helfrich=False)
    return _python_system(frozen, params, helfrich=False)


def make_helfrich_system(
    frozen: FrozenExplicitData, params: FlowParams, backend: str | None = None
) -> ResidualSystem:
    """Residual system for one Helfrich step; unknowns [..., lam, mu, gamma]."""
    use = backend or BACKEND
    if use == "compiled" and HAVE_COMPILED:
        return _compiled_system(frozen, params, helfrich=True)
    return _python_system(frozen, params, helfrich=True)


def make_relocation_system(
    frozen: FrozenExplicitData, params: FlowParams, backend: str | None = None
) -> ResidualSystem:
    """Residual system for one pure-tangential relocation step (size 2N).

    Linear in the unknowns; the numpy evaluation is not a bottleneck, so
    both backends share it.
    """
    n = frozen.n

    def evaluate(u: np.ndarray) -> np.ndarray:
        return schemes.relocation_residual(u.reshape(n, 2), frozen, params)

    def evaluate_many(pts: np.ndarray) -> np.ndarray:
        return np.stack([evaluate(p) for p in pts])

    return ResidualSystem(dimension=2 * n, evaluate=evaluate, evaluate_many=evaluate_many)


def make_system(
    flow: str,
    frozen: FrozenExplicitData,
    params: FlowParams,
    backend: str | None = None,
) -> ResidualSystem:
    if flow == "willmore":
        return make_willmore_system(frozen, params, backend)
    if flow == "helfrich":
        return make_helfrich_system(frozen, params, backend)
    if flow == "relocate":
        return make_relocation_system(frozen, params, backend)
    raise ValueError(f"unknown flow {flow!r}")
