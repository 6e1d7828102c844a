"""Clamped cubic B-spline bases on [0, 1] and the trainable activation.

An activation is ``silu(x) + sum_{s,l} c[s, l] * B_{s*num_splines + l}(x)``
over a flat family of ``num_grid * num_splines`` basis functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEGREE = 3
REFIT_POINTS = 512


def splines_for_epoch(epoch: int) -> int:
    """Spline count per grid at adaptive epoch ``epoch`` (0-based)."""
    return 4 * (epoch + 2)


def clamped_uniform_knots(num_basis: int, degree: int = DEGREE) -> np.ndarray:
    if num_basis < degree + 1:
        raise ValueError(f"need at least {degree + 1} basis functions, got {num_basis}")
    spans = num_basis - degree
    interior = np.linspace(0.0, 1.0, spans + 1)
    return np.concatenate([np.zeros(degree), interior, np.ones(degree)])


def _insert_breakpoints(breaks: np.ndarray, count: int) -> np.ndarray:
    """Split the longest spans at their midpoints until ``count`` breakpoints were added.

    Among spans of equal (maximal) length the split ones are spread evenly, so
    repeated refinement stays close to uniform.
    """
    breaks = np.asarray(breaks, dtype=float)
    while count > 0:
        lengths = np.diff(breaks)
        longest = np.flatnonzero(lengths >= lengths.max() * (1 - 1e-9))
        take = min(count, len(longest))
        pick = longest[((np.arange(take) + 0.5) * len(longest) / take).astype(int)]
        mids = 0.5 * (breaks[pick] + breaks[pick + 1])
        breaks = np.sort(np.concatenate([breaks, mids]))
        count -= take
    return breaks


@dataclass(frozen=True, eq=False)
class SplineGrid:
    """Knot vector for ``num_grid * num_splines`` clamped cubic B-splines on [0, 1]."""

    num_grid: int = 8
    num_splines: int = 8
    knots: np.ndarray = field(default=None, repr=False)
    degree: int = DEGREE

    def __post_init__(self):
        if self.degree != DEGREE:
            raise ValueError("only cubic splines are supported")
        if self.num_grid < 1 or self.num_splines < 1:
            raise ValueError("num_grid and num_splines must be positive")
        n = self.num_grid * self.num_splines
        if self.knots is None:
            knots = clamped_uniform_knots(n)
        else:
            knots = np.asarray(self.knots, dtype=float)
            if knots.shape != (n + DEGREE + 1,):
                raise ValueError(f"{n} cubic basis functions need {n + DEGREE + 1} knots")
            if np.any(np.diff(knots) < 0):
                raise ValueError("knots must be non-decreasing")
            if knots[0] != 0.0 or knots[-1] != 1.0:
                raise ValueError("knots must span [0, 1]")
        knots = np.ascontiguousarray(knots)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @property
    def num_basis(self) -> int:
        return self.num_grid * self.num_splines

    @property
    def breakpoints(self) -> np.ndarray:
        return self.knots[DEGREE:-DEGREE]

    def flat_index(self, s: int, l: int) -> int:
        return s * self.num_splines + l

    def zero_coefficients(self) -> np.ndarray:
        return np.zeros((self.num_grid, self.num_splines))


def find_span(knots: np.ndarray, num_basis: int, x: float) -> int:
    """Index ``i`` with ``knots[i] <= x < knots[i+1]``; the right end maps to the last span."""
    if x >= knots[num_basis]:
        return num_basis - 1
    return int(np.searchsorted(knots, x, side="right")) - 1


def nonzero_basis(knots: np.ndarray, num_basis: int, x: float) -> tuple[int, np.ndarray]:
    """Cox-de Boor recursion for the ``DEGREE+1`` functions alive at ``x``.

    Returns ``(span, values)``; ``values[r]`` belongs to basis ``span - DEGREE + r``.
    """
    span = find_span(knots, num_basis, x)
    vals = np.zeros(DEGREE + 1)
    left = np.zeros(DEGREE + 1)
    right = np.zeros(DEGREE + 1)
    vals[0] = 1.0
    for j in range(1, DEGREE + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            temp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        vals[j] = saved
    return span, vals


def _check_domain(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x} outside the spline domain [0, 1]")


def basis_vector(grid: SplineGrid, x: float) -> np.ndarray:
    """All ``grid.num_basis`` basis values at ``x``."""
    _check_domain(x)
    out = np.zeros(grid.num_basis)
    span, vals = nonzero_basis(grid.knots, grid.num_basis, x)
    out[span - DEGREE : span + 1] = vals
    return out


def basis_matrix(grid: SplineGrid, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).ravel()
    return np.stack([basis_vector(grid, float(x)) for x in xs]) if len(xs) else np.zeros((0, grid.num_basis))


def basis_eval(grid: SplineGrid, k: int, x: float) -> float:
    if not 0 <= k < grid.num_basis:
        raise IndexError(f"basis index {k} out of range 0..{grid.num_basis - 1}")
    return float(basis_vector(grid, x)[k])


def silu(x: float) -> float:
    """``x / (exp(-x) + 1)``, evaluated without overflow for large |x|."""
    if x >= 0:
        return x / (math.exp(-x) + 1.0)
    e = math.exp(x)
    return x * e / (1.0 + e)


def silu_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = x[pos] / (np.exp(-x[pos]) + 1.0)
    e = np.exp(x[~pos])
    out[~pos] = x[~pos] * e / (1.0 + e)
    return out


def spline_part(grid: SplineGrid, coeffs: np.ndarray, x: float) -> float:
    c = np.asarray(coeffs, dtype=float).reshape(-1)
    if c.size != grid.num_basis:
        raise ValueError(f"expected {grid.num_basis} coefficients, got {c.size}")
    _check_domain(x)
    span, vals = nonzero_basis(grid.knots, grid.num_basis, x)
    return float(np.dot(c[span - DEGREE : span + 1], vals))


def activation_eval(grid: SplineGrid, coeffs: np.ndarray, x: float) -> float:
    return silu(x) + spline_part(grid, coeffs, x)


def refine(
    grid: SplineGrid, coeffs: np.ndarray, new_num_splines: int
) -> tuple[SplineGrid, np.ndarray]:
    """Grow the basis to ``num_grid * new_num_splines`` functions and refit ``coeffs``.

    New knots are inserted into the existing knot vector, so the old spline
    space is contained in the new one and the least-squares transfer over
    at least ``REFIT_POINTS`` samples (four per basis function on large
    bases, keeping the fit overdetermined) reproduces the old spline to
    rounding error.
    """
    if new_num_splines <= grid.num_splines:
        raise ValueError(
            f"refine must grow the basis ({grid.num_splines} -> {new_num_splines})"
        )
    c = np.asarray(coeffs, dtype=float).reshape(grid.num_grid, grid.num_splines)
    added = grid.num_grid * (new_num_splines - grid.num_splines)
    breaks = _insert_breakpoints(grid.breakpoints, added)
    knots = np.concatenate([np.zeros(DEGREE), breaks, np.ones(DEGREE)])
    new_grid = SplineGrid(grid.num_grid, new_num_splines, knots)
    if not np.any(c):
        return new_grid, new_grid.zero_coefficients()
    xs = np.linspace(0.0, 1.0, max(REFIT_POINTS, 4 * new_grid.num_basis))
    old_vals = basis_matrix(grid, xs) @ c.reshape(-1)
    new_basis = basis_matrix(new_grid, xs)
    fitted, *_ = np.linalg.lstsq(new_basis, old_vals, rcond=None)
    return new_grid, fitted.reshape(new_grid.num_grid, new_grid.num_splines)
