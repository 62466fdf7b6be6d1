"""Finite-simplex numerics: validation, projection, clamping and grids.

Probability vectors ("simplex points") and dual vectors are plain numpy
arrays.  The ``check_*`` helpers validate inputs the same way
``sklearn.utils.check_array`` does: they return a float array (read-only
here) or raise :class:`~phimix.exceptions.InvalidInputError`.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .exceptions import InvalidInputError

SIMPLEX_ATOL = 1e-9
RENORMALIZE_ATOL = 1e-6


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def check_simplex(p, name="p"):
    """Validate a probability vector and return it as a read-only array.

    Inputs whose sum is within 1e-6 of one are renormalized; anything
    further off, negative, or non-finite is rejected.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-d vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.any(p < -SIMPLEX_ATOL):
        raise InvalidInputError(f"{name} has negative entries: {p}")
    total = p.sum()
    if abs(total - 1.0) > RENORMALIZE_ATOL:
        raise InvalidInputError(f"{name} sums to {total!r}, not 1")
    p = np.clip(p, 0.0, None)
    if abs(p.sum() - 1.0) > 1e-15:
        p = p / p.sum()
    return _frozen(p)


def check_dual(v, name="v"):
    """Validate a dual vector (finite real vector) and return a read-only copy."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return _frozen(v)


def check_panel(panel, n_outcomes=None):
    """Validate an expert panel: one prediction over outcomes per row."""
    panel = np.asarray(panel, dtype=float)
    if panel.ndim != 2 or panel.shape[0] < 1:
        raise InvalidInputError(
            f"panel must be 2-d (n_experts, n_outcomes) with at least one expert, got shape {panel.shape}"
        )
    if n_outcomes is not None and panel.shape[1] != n_outcomes:
        raise InvalidInputError(f"panel has {panel.shape[1]} outcomes, expected {n_outcomes}")
    return _frozen(np.vstack([check_simplex(row, name=f"panel[{i}]") for i, row in enumerate(panel)]))


def check_outcome(x, n_outcomes):
    if isinstance(x, (bool, np.bool_)) or int(x) != x or not 0 <= int(x) < n_outcomes:
        raise InvalidInputError(f"outcome {x!r} out of range 0..{n_outcomes - 1}")
    return int(x)


def dual_equal(v, w, tol=SIMPLEX_ATOL):
    """Compare two dual vectors modulo constant shifts (multiples of the ones vector)."""
    d = np.asarray(v, dtype=float) - np.asarray(w, dtype=float)
    return bool(np.max(np.abs(d - d.mean())) <= tol)


def project_to_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex.

    Sort-based O(n log n) algorithm: find the threshold ``tau`` such that
    ``max(v - tau, 0)`` sums to one.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError(f"v must be a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("cannot project a vector with non-finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return _frozen(np.maximum(v - tau, 0.0))


def clamp_interior(p, eps):
    """Move ``p`` into the relative interior so every coordinate is >= ``eps``.

    Coordinates below ``eps`` are raised to exactly ``eps`` and the remaining
    coordinates are rescaled to absorb the difference.  Points already
    satisfying the floor are returned unchanged.
    """
    p = check_simplex(p)
    n = p.size
    if not 0.0 < eps < 1.0 / n:
        raise InvalidInputError(f"eps must lie in (0, 1/{n}), got {eps!r}")
    if np.all(p >= eps):
        return p
    q = p.copy()
    low = np.zeros(n, dtype=bool)
    while True:
        low |= q < eps
        q[low] = eps
        high_mass = q[~low].sum()
        q[~low] *= (1.0 - eps * low.sum()) / high_mass
        if np.all(q[~low] >= eps):
            break
    return _frozen(q)


@dataclass(frozen=True)
class SimplexGrid:
    """Regular grid on the simplex: all compositions of ``resolution`` into
    ``dimension`` non-negative parts, divided by ``resolution``."""

    dimension: int
    resolution: int

    def __post_init__(self):
        if self.dimension < 1 or self.resolution < 1:
            raise InvalidInputError("SimplexGrid needs dimension >= 1 and resolution >= 1")

    def __len__(self):
        return comb(self.resolution + self.dimension - 1, self.dimension - 1)

    def points(self):
        return enumerate_grid(self)


@lru_cache(maxsize=16)
def _grid_points(dimension, resolution):
    if dimension == 1:
        return _frozen(np.ones((1, 1)))
    # stars and bars: choose positions of the dimension-1 bars
    bars = np.array(list(combinations(range(resolution + dimension - 1), dimension - 1)), dtype=np.int64)
    bars = bars.reshape(-1, dimension - 1)
    edges = np.hstack(
        [np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), resolution + dimension - 1)]
    )
    counts = np.diff(edges, axis=1) - 1
    return _frozen(counts / resolution)


def enumerate_grid(grid):
    """Return every point of ``grid`` exactly once, as an array of shape (len(grid), dimension)."""
    return _grid_points(grid.dimension, grid.resolution)
