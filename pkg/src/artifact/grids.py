"""Uniform meshes, piecewise-constant grid functions and space-time regions.

Everything here is immutable: meshes, grid functions, histories and regions
are frozen after construction, and every operation returns fresh objects.
The three measurement primitives (:func:`total_variation`,
:func:`oscillation`, :func:`l1_distance`) are exact for piecewise-constant
data -- no quadrature error is introduced anywhere in this module.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SCHEME_IDS",
    "Mesh",
    "GridFunction",
    "SolutionHistory",
    "Trapezoid",
    "SlantedBand",
    "Box",
    "total_variation",
    "oscillation",
    "l1_distance",
    "cells_in_region",
]

#: Identifiers of the four supported time-stepping schemes.
SCHEME_IDS = ("godunov", "lax_friedrichs", "backward_euler", "smoothing")

_REL_TOL = 1e-12
# Absolute slack used when comparing frame times against region bounds.  Frame
# times are exact multiples of dt while strip boundaries are multiples of a
# coarser step, so the two can disagree by a few ulp.
_T_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Uniform 1-D mesh.

    Cell ``i`` is the half-open interval ``[x_min + i*dx, x_min + (i+1)*dx)``.
    Construction rejects inconsistent extents: ``x_max - x_min`` must equal
    ``n_cells * dx`` to within relative 1e-12.
    """

    x_min: float
    x_max: float
    dx: float
    n_cells: int

    def __post_init__(self) -> None:
        if self.n_cells <= 0:
            raise ValueError(f"n_cells must be positive, got {self.n_cells}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        extent = self.x_max - self.x_min
        target = self.n_cells * self.dx
        if abs(extent - target) > _REL_TOL * max(abs(extent), abs(target)):
            raise ValueError(
                f"mesh extent {extent!r} does not match n_cells * dx = {target!r}"
            )

    @classmethod
    def regular(cls, x_min: float, x_max: float, n_cells: int) -> "Mesh":
        """Mesh with ``n_cells`` equal cells spanning ``[x_min, x_max]``."""
        return cls(x_min, x_max, (x_max - x_min) / n_cells, n_cells)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        """All ``n_cells + 1`` interface positions, boundaries included."""
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    def cell_index(self, x: float) -> int:
        """Index of the cell containing ``x``, clamped at the boundary.

        Points outside the mesh map to the nearest boundary cell, which is
        the constant-extension convention used by all schemes.
        """
        i = int(np.floor((x - self.x_min) / self.dx))
        return min(max(i, 0), self.n_cells - 1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant vector function on a :class:`Mesh`.

    ``values`` has shape ``(n_cells, n_comp)`` and is frozen (read-only) at
    construction.  ``half_offset`` is parity metadata for the staggered
    scheme: the stored values always live on the primal cells, the flag only
    records that the function was produced on the shifted lattice.
    """

    mesh: Mesh
    values: np.ndarray
    half_offset: bool = False

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] != self.mesh.n_cells:
            raise ValueError(
                f"values must have shape (n_cells, n_comp); got {arr.shape} "
                f"for a mesh with {self.mesh.n_cells} cells"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_comp(self) -> int:
        return self.values.shape[1]

    @classmethod
    def sample(
        cls,
        mesh: Mesh,
        fn: Callable[[float], Sequence[float] | float],
        half_offset: bool = False,
    ) -> "GridFunction":
        """Sample a callable ``x -> state`` at the cell centers."""
        vals = np.array([np.atleast_1d(fn(x)) for x in mesh.centers], dtype=float)
        return cls(mesh, vals, half_offset)

    def value_at(self, x: float) -> np.ndarray:
        """Cell value at ``x`` (constant extension outside the mesh)."""
        return self.values[self.mesh.cell_index(x)]

    def with_values(self, values: np.ndarray, half_offset: bool | None = None) -> "GridFunction":
        flag = self.half_offset if half_offset is None else half_offset
        return GridFunction(self.mesh, values, flag)

    def to_csv(self, path) -> None:
        """Write ``x,comp0,comp1,...`` rows with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x"] + [f"comp{k}" for k in range(self.n_comp)])
            for x, row in zip(self.mesh.centers, self.values):
                writer.writerow([f"{x:.17g}"] + [f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path, half_offset: bool = False) -> "GridFunction":
        """Read a file written by :meth:`to_csv`, reconstructing the mesh."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 3:
            raise ValueError("need at least two data rows to reconstruct a mesh")
        data = np.array([[float(v) for v in row] for row in rows[1:]])
        xs = data[:, 0]
        steps = np.diff(xs)
        dx = steps[0]
        if not np.allclose(steps, dx, rtol=1e-9, atol=0.0):
            raise ValueError("cell centers are not uniformly spaced")
        mesh = Mesh(xs[0] - dx / 2, xs[-1] + dx / 2, dx, len(xs))
        return cls(mesh, data[:, 1:], half_offset)


@dataclass(frozen=True, eq=False)
class SolutionHistory:
    """Frames at uniformly spaced times ``t_k = t0 + k*dt``.

    All frames must share one mesh and component count, and ``scheme_id``
    must be one of :data:`SCHEME_IDS`.
    """

    frames: tuple
    dt: float
    scheme_id: str
    t0: float = 0.0

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise ValueError("a history needs at least one frame")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme_id not in SCHEME_IDS:
            raise ValueError(
                f"unknown scheme_id {self.scheme_id!r}; expected one of {SCHEME_IDS}"
            )
        first = frames[0]
        for k, fr in enumerate(frames):
            if fr.mesh != first.mesh:
                raise ValueError(f"frame {k} lives on a different mesh")
            if fr.n_comp != first.n_comp:
                raise ValueError(f"frame {k} has a different component count")

    @property
    def mesh(self) -> Mesh:
        return self.frames[0].mesh

    @property
    def n_comp(self) -> int:
        return self.frames[0].n_comp

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.frames)) * self.dt

    @property
    def t_final(self) -> float:
        return self.t0 + (len(self.frames) - 1) * self.dt

    def frame_index(self, t: float) -> int:
        """Index of the frame at time ``t`` (must match a stored time)."""
        k = int(round((t - self.t0) / self.dt))
        if k < 0 or k >= len(self.frames) or abs(self.t0 + k * self.dt - t) > 1e-9 * self.dt + _T_TOL:
            raise KeyError(f"no frame at t={t!r}")
        return k

    def frame_at(self, t: float) -> GridFunction:
        return self.frames[self.frame_index(t)]


def _tilted_edges(trap: "Trapezoid", t) -> tuple[np.ndarray, np.ndarray]:
    # The lateral edges translate with their own speed and, in addition,
    # tilt inward linearly in time: at t_hi each has moved `inset` further
    # into the region than pure translation would place it.
    theta = (np.asarray(t) - trap.t_lo) / (trap.t_hi - trap.t_lo)
    tau = np.asarray(t) - trap.t_lo
    left = trap.base_lo + tau * trap.slope_left + theta * trap.inset
    right = trap.base_hi + tau * trap.slope_right - theta * trap.inset
    return left, right


@dataclass(frozen=True)
class Trapezoid:
    """Space-time trapezoid with inward-tilted lateral edges.

    At ``t_lo`` the section is the open interval ``(base_lo, base_hi)``.
    The left edge moves with speed ``slope_left``, the right edge with
    ``slope_right``, and both additionally tilt inward so that at ``t_hi``
    each has advanced ``inset`` into the region.  Membership is closed in
    ``t`` and open in ``x``.
    """

    t_lo: float
    t_hi: float
    base_lo: float
    base_hi: float
    slope_left: float
    slope_right: float
    inset: float = 0.0

    def __post_init__(self) -> None:
        if not self.t_hi > self.t_lo:
            raise ValueError("t_hi must exceed t_lo")
        if not self.base_hi > self.base_lo:
            raise ValueError("base_hi must exceed base_lo")
        if self.inset < 0:
            raise ValueError("inset must be nonnegative")
        lo, hi = self.upper_edge
        if not hi > lo:
            raise ValueError(
                f"upper edge is empty: [{lo!r}, {hi!r}]; the trapezoid degenerates"
            )

    @property
    def height(self) -> float:
        return self.t_hi - self.t_lo

    def left_at(self, t: float) -> float:
        return float(_tilted_edges(self, t)[0])

    def right_at(self, t: float) -> float:
        return float(_tilted_edges(self, t)[1])

    @property
    def upper_edge(self) -> tuple[float, float]:
        left = self.base_lo + self.height * self.slope_left + self.inset
        right = self.base_hi + self.height * self.slope_right - self.inset
        return (left, right)

    def mask(self, t: float, xs: np.ndarray) -> np.ndarray:
        """Boolean mask of the points ``(t, xs)`` strictly inside in x."""
        if t < self.t_lo - _T_TOL or t > self.t_hi + _T_TOL:
            return np.zeros(np.shape(xs), dtype=bool)
        tc = min(max(t, self.t_lo), self.t_hi)
        left, right = _tilted_edges(self, tc)
        xs = np.asarray(xs)
        return (xs > left) & (xs < right)

    def contains(self, t: float, x: float) -> bool:
        return bool(self.mask(t, np.asarray([x]))[0])


@dataclass(frozen=True)
class SlantedBand:
    """Points with ``|x - (x0 + slope*(t - t_lo))| < half_width``, t in band."""

    t_lo: float
    t_hi: float
    x0: float
    slope: float
    half_width: float

    def __post_init__(self) -> None:
        if not self.t_hi > self.t_lo:
            raise ValueError("t_hi must exceed t_lo")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    def center_at(self, t: float) -> float:
        return self.x0 + self.slope * (t - self.t_lo)

    def mask(self, t: float, xs: np.ndarray) -> np.ndarray:
        if t < self.t_lo - _T_TOL or t > self.t_hi + _T_TOL:
            return np.zeros(np.shape(xs), dtype=bool)
        c = self.center_at(min(max(t, self.t_lo), self.t_hi))
        return np.abs(np.asarray(xs) - c) < self.half_width

    def contains(self, t: float, x: float) -> bool:
        return bool(self.mask(t, np.asarray([x]))[0])


@dataclass(frozen=True)
class Box:
    """Axis-aligned space-time rectangle, closed in t and open in x."""

    t_lo: float
    t_hi: float
    x_lo: float
    x_hi: float

    def __post_init__(self) -> None:
        if not self.t_hi >= self.t_lo:
            raise ValueError("t_hi must not precede t_lo")
        if not self.x_hi > self.x_lo:
            raise ValueError("x_hi must exceed x_lo")

    def mask(self, t: float, xs: np.ndarray) -> np.ndarray:
        if t < self.t_lo - _T_TOL or t > self.t_hi + _T_TOL:
            return np.zeros(np.shape(xs), dtype=bool)
        xs = np.asarray(xs)
        return (xs > self.x_lo) & (xs < self.x_hi)

    def contains(self, t: float, x: float) -> bool:
        return bool(self.mask(t, np.asarray([x]))[0])


def total_variation(g: GridFunction, interval: tuple[float, float] | None = None) -> float:
    """Total variation of ``g`` over ``interval``, in the Euclidean norm.

    The variation of a piecewise-constant function is the sum of the
    Euclidean jump sizes at the cell interfaces lying inside the (closed)
    interval, clamped to the mesh extent.  An empty intersection gives 0.
    """
    mesh = g.mesh
    lo = mesh.x_min if interval is None else max(interval[0], mesh.x_min)
    hi = mesh.x_max if interval is None else min(interval[1], mesh.x_max)
    if hi < lo or mesh.n_cells < 2:
        return 0.0
    inner = mesh.x_min + np.arange(1, mesh.n_cells) * mesh.dx
    tol = 1e-9 * mesh.dx
    sel = (inner >= lo - tol) & (inner <= hi + tol)
    if not np.any(sel):
        return 0.0
    jumps = np.diff(g.values, axis=0)
    return float(np.linalg.norm(jumps[sel], axis=1).sum())


def _iter_region_frames(history: SolutionHistory, region):
    """Yield ``(frame_idx, mask)`` for frames intersecting the region."""
    t_lo = getattr(region, "t_lo", -np.inf)
    t_hi = getattr(region, "t_hi", np.inf)
    centers = history.mesh.centers
    for k, t in enumerate(history.times):
        if t < t_lo - _T_TOL or t > t_hi + _T_TOL:
            continue
        mask = region.mask(t, centers)
        if np.any(mask):
            yield k, mask


def oscillation(history: SolutionHistory, region) -> float:
    """Pointwise spread of the solution over a space-time region.

    Collects the values at all cell centers strictly inside ``region``
    (across all frames whose times fall in the region), takes the
    per-component range, and returns the Euclidean norm of the range
    vector.  Raises ``ValueError("empty region")`` if no cell center of
    any frame lies inside.
    """
    lo = np.full(history.n_comp, np.inf)
    hi = np.full(history.n_comp, -np.inf)
    found = False
    for k, mask in _iter_region_frames(history, region):
        vals = history.frames[k].values[mask]
        lo = np.minimum(lo, vals.min(axis=0))
        hi = np.maximum(hi, vals.max(axis=0))
        found = True
    if not found:
        raise ValueError("empty region")
    return float(np.linalg.norm(hi - lo))


def cells_in_region(history: SolutionHistory, region) -> list[tuple[int, int]]:
    """All ``(frame_idx, cell_idx)`` pairs with cell center strictly inside."""
    out: list[tuple[int, int]] = []
    for k, mask in _iter_region_frames(history, region):
        out.extend((k, int(i)) for i in np.nonzero(mask)[0])
    return out


def _breakpoints(mesh: Mesh, lo: float, hi: float) -> np.ndarray:
    faces = mesh.interfaces
    inner = faces[(faces > lo) & (faces < hi)]
    return inner


def l1_distance(
    g1: GridFunction, g2: GridFunction, interval: tuple[float, float] | None = None
) -> float:
    """Exact L1 distance between two piecewise-constant grid functions.

    The integrand is the pointwise Euclidean norm of the difference.  The
    functions may live on different meshes; integration runs over the
    overlap of the two extents intersected with ``interval``, splitting at
    every interface of either mesh so the result is exact.
    """
    if g1.n_comp != g2.n_comp:
        raise ValueError(
            f"component counts differ: {g1.n_comp} vs {g2.n_comp}"
        )
    lo = max(g1.mesh.x_min, g2.mesh.x_min)
    hi = min(g1.mesh.x_max, g2.mesh.x_max)
    if interval is not None:
        lo, hi = max(lo, interval[0]), min(hi, interval[1])
    if hi <= lo:
        return 0.0
    cuts = np.unique(
        np.concatenate(
            [[lo, hi], _breakpoints(g1.mesh, lo, hi), _breakpoints(g2.mesh, lo, hi)]
        )
    )
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    lens = np.diff(cuts)

    def lookup(g: GridFunction) -> np.ndarray:
        idx = np.floor((mids - g.mesh.x_min) / g.mesh.dx).astype(int)
        idx = np.clip(idx, 0, g.mesh.n_cells - 1)
        return g.values[idx]

    diff = lookup(g1) - lookup(g2)
    return float(np.dot(lens, np.linalg.norm(diff, axis=1)))
