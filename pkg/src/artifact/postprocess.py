"""Shock detection, tracing, and strip covering for finished runs.

The routines here turn a :class:`~artifact.grids.SolutionHistory` into the
geometric data a certificate is assembled from.  The pipeline has four
stages, each usable on its own:

1. a total-variation gate (``check_tv_gate``) that refuses histories whose
   variation ever exceeds a configured cap,
2. per-frame detection of strongly varying cells (``flag_points``), backed
   by the two-sided windowed-variation criterion and its companion bound
   for unflagged stretches (``verify_unflagged_bound``),
3. grouping of flagged cells into isolated clusters and tracing each
   cluster across one time strip (``detect_shock_candidates``,
   ``trace_shock``), producing a slanted band around the discontinuity
   plus side regions whose oscillation must stay small, and
4. a covering of the rest of the strip by slanted trapezoids with inset
   upper edges (``cover_strip``), recording the solution's oscillation
   ``kappa`` on each.

Time is partitioned into strips ``[t_j, t_{j+1}]`` of width ``h`` where
``h`` is an exact multiple of the frame spacing; ``process_strips`` runs
the whole pipeline over every strip.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from artifact.grids import (
    GridFunction,
    Mesh,
    SlantedBand,
    SolutionHistory,
    Trapezoid,
    oscillation,
    total_variation,
)
from artifact.residuals import GAMMA

__all__ = [
    "PostprocessParams",
    "FlagSet",
    "ShockCandidate",
    "UntraceableCluster",
    "ShockTrace",
    "TraceRejection",
    "StripCover",
    "StripResult",
    "check_tv_gate",
    "n_strips",
    "strip_times",
    "flag_points",
    "flag_frame",
    "verify_unflagged_bound",
    "detect_shock_candidates",
    "trace_shock",
    "cover_strip",
    "kappa_series",
    "process_strips",
    "write_flags_csv",
    "write_traces_csv",
    "write_covers_csv",
    "write_kappa_csv",
]

_TOL = 1e-12


@dataclass(frozen=True)
class PostprocessParams:
    """Knobs for the detection/tracing/covering stages.

    ``eps`` is the history's resolution scale (``max(dt, dx)`` for a
    numerical run).  ``sigma_flag`` and ``k_flag`` control the windowed
    variation threshold: a cell at ``x`` is flagged when the variation on
    both ``[x - sigma_flag, x + eps]`` and ``[x - eps, x + sigma_flag]``
    exceeds ``k_flag * sigma_flag``.  ``kappa_prime`` caps the admissible
    oscillation beside a traced shock, ``sigma_min`` is the smallest jump
    worth tracing, and ``tv_cap`` gates the whole history.

    ``lambda_minus``/``lambda_plus`` bound every characteristic speed of
    the model on the relevant state range.  The strip width ``h``, the
    isolation radius ``rho`` and the cluster half-width ``delta`` default
    to the canonical choices ``h = floor(eps**(1/3)/eps) * eps`` (the
    largest multiple of ``eps`` not above ``eps**(1/3)``), ``rho = h`` and
    ``delta = eps**(2/3)``.
    """

    eps: float
    sigma_flag: float
    k_flag: float
    kappa_prime: float
    sigma_min: float
    tv_cap: float
    lambda_minus: float
    lambda_plus: float
    h: Optional[float] = None
    rho: Optional[float] = None
    delta: Optional[float] = None
    k1: float = 1.0

    def __post_init__(self) -> None:
        for name in ("eps", "sigma_flag", "k_flag", "sigma_min", "tv_cap", "k1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.kappa_prime < 0:
            raise ValueError("kappa_prime must be nonnegative")
        if not self.lambda_plus > self.lambda_minus:
            raise ValueError("lambda_plus must exceed lambda_minus")
        cube_root = self.eps ** (1.0 / 3.0)
        if self.h is None:
            object.__setattr__(self, "h", math.floor(cube_root / self.eps) * self.eps)
        if not 0.5 * cube_root <= self.h <= cube_root * (1 + 1e-9):
            raise ValueError(
                f"strip width h={self.h:g} must lie in "
                f"[eps**(1/3)/2, eps**(1/3)] = [{0.5 * cube_root:g}, {cube_root:g}]"
            )
        ratio = self.h / self.eps
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("h must be an integer multiple of eps")
        if self.rho is None:
            object.__setattr__(self, "rho", self.h)
        if self.delta is None:
            object.__setattr__(self, "delta", self.eps**GAMMA)
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def inset(self) -> float:
        """Upper-edge inset shared by all covering trapezoids."""
        return self.eps**GAMMA

    @property
    def strong_jump_floor(self) -> float:
        """Smallest ``sigma_min`` for which the sharper shock bound applies."""
        return self.k1 * (2.0 * self.eps ** (1.0 / 3.0) + 2.0 * self.kappa_prime) ** (1.0 / 3.0)

    @property
    def strong_jumps(self) -> bool:
        """Whether traced jumps are large enough for the sharper bound."""
        return self.sigma_min >= self.strong_jump_floor


# ---------------------------------------------------------------------------
# gate and strip bookkeeping
# ---------------------------------------------------------------------------


def check_tv_gate(history: SolutionHistory, params: PostprocessParams) -> tuple[bool, float]:
    """Return ``(ok, sup_tv)`` where ``sup_tv`` is the largest frame variation."""
    sup_tv = max(total_variation(f) for f in history.frames)
    return sup_tv <= params.tv_cap, sup_tv


def n_strips(history: SolutionHistory, params: PostprocessParams) -> int:
    """Number of whole strips of width ``h`` that fit into the run."""
    span = history.t_final - history.t0
    return int(math.floor(span / params.h + 1e-9))


def strip_times(
    history: SolutionHistory, params: PostprocessParams, j: int
) -> tuple[float, float]:
    """Endpoints ``(t_j, t_{j+1})`` of strip ``j``, validated against the run."""
    nu = n_strips(history, params)
    if not 0 <= j < nu:
        raise ValueError(f"strip index {j} out of range [0, {nu})")
    t_lo = history.t0 + j * params.h
    return t_lo, t_lo + params.h


# ---------------------------------------------------------------------------
# flagged points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlagSet:
    """Flagged cell indices of one frame, with enough context to locate them."""

    t: float
    mesh: Mesh
    indices: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        return self.mesh.centers[self.indices]

    def __len__(self) -> int:
        return int(self.indices.size)


def _window_tv(prefix: np.ndarray, mesh: Mesh, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Variation over ``[a, b]`` snapped outward to cell interfaces.

    ``prefix[k]`` holds the summed Euclidean interface jumps up to interface
    ``k`` (interfaces are numbered 1..n-1; ``prefix[0] = 0``).
    """
    n = mesh.n_cells
    i_lo = np.floor((a - mesh.x_min) / mesh.dx).astype(int)
    i_hi = np.ceil((b - mesh.x_min) / mesh.dx).astype(int)
    lo = np.maximum(i_lo, 1)
    hi = np.minimum(i_hi, n - 1)
    tv = np.zeros(a.shape)
    ok = hi >= lo
    tv[ok] = prefix[hi[ok]] - prefix[lo[ok] - 1]
    return tv


def flag_points(frame: GridFunction, params: PostprocessParams) -> np.ndarray:
    """Indices of cells whose two-sided windowed variation is large.

    Cell ``i`` at center ``x`` is flagged when both
    ``TV[x - sigma_flag, x + eps]`` and ``TV[x - eps, x + sigma_flag]``
    exceed ``k_flag * sigma_flag``, windows snapped outward to the
    interfaces so that a jump exactly on the window edge still counts.
    """
    if params.sigma_flag <= params.eps:
        raise ValueError("sigma_flag must exceed eps for the two-sided windows to nest")
    mesh = frame.mesh
    if mesh.n_cells < 2:
        return np.zeros(0, dtype=int)
    jumps = np.linalg.norm(np.diff(frame.values, axis=0), axis=1)
    prefix = np.concatenate(([0.0], np.cumsum(jumps)))
    centers = mesh.centers
    threshold = params.k_flag * params.sigma_flag
    tv_left = _window_tv(prefix, mesh, centers - params.sigma_flag, centers + params.eps)
    tv_right = _window_tv(prefix, mesh, centers - params.eps, centers + params.sigma_flag)
    flagged = (tv_left > threshold) & (tv_right > threshold)
    return np.nonzero(flagged)[0]


def flag_frame(history: SolutionHistory, params: PostprocessParams, t: float) -> FlagSet:
    """Flag the frame at time ``t`` of ``history``."""
    frame = history.frame_at(t)
    return FlagSet(t=t, mesh=frame.mesh, indices=flag_points(frame, params))


def verify_unflagged_bound(
    frame: GridFunction, interval: tuple[float, float], params: PostprocessParams
) -> tuple[float, bool]:
    """Endpoint-difference bound on a flag-free interval.

    For ``[a, b]`` containing no flagged cell center, the endpoint values
    satisfy ``|u(b) - u(a)| <= (1 + (b - a)/(sigma_flag + eps)) * 2 *
    sigma_flag * k_flag``.  Returns ``(bound, holds)``; raises if a
    flagged cell center lies inside the interval.
    """
    a, b = interval
    if not b > a:
        raise ValueError("interval must have positive length")
    flagged = flag_points(frame, params)
    centers = frame.mesh.centers
    if flagged.size:
        pos = centers[flagged]
        inside = (pos >= a - _TOL) & (pos <= b + _TOL)
        if np.any(inside):
            raise ValueError(
                f"flagged cell inside the interval [{a:g}, {b:g}]; "
                "the unflagged-stretch bound does not apply"
            )
    diff = float(np.linalg.norm(frame.value_at(b) - frame.value_at(a)))
    bound = (1.0 + (b - a) / (params.sigma_flag + params.eps)) * 2.0 * params.sigma_flag * params.k_flag
    return bound, diff <= bound + _TOL


# ---------------------------------------------------------------------------
# shock candidates and tracing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShockCandidate:
    """A maximal contiguous cluster of flagged cells, narrow and isolated."""

    x_lo: float
    x_hi: float
    idx_lo: int
    idx_hi: int

    @property
    def center(self) -> float:
        return 0.5 * (self.x_lo + self.x_hi)

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo


@dataclass(frozen=True)
class UntraceableCluster:
    """A flagged cluster that failed the width or isolation test."""

    x_lo: float
    x_hi: float
    idx_lo: int
    idx_hi: int
    reason: str


def _clusters(flags: FlagSet) -> list[tuple[int, int]]:
    """Maximal runs of consecutive flagged cell indices, as (first, last)."""
    idx = np.sort(np.asarray(flags.indices, dtype=int))
    if idx.size == 0:
        return []
    splits = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate(([0], splits + 1))
    ends = np.concatenate((splits, [idx.size - 1]))
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]


def detect_shock_candidates(
    flags: FlagSet, params: PostprocessParams
) -> tuple[list[ShockCandidate], list[UntraceableCluster]]:
    """Split the flagged cells of one frame into traceable clusters.

    Flagged cells in consecutive mesh cells form one cluster ``[a, b]``
    (positions of the first and last flagged centers).  A cluster is a
    shock candidate when ``b - a <= delta`` and no other flagged cell lies
    within ``rho`` of it on either side; clusters failing either test are
    returned separately with a reason (``"too-wide"`` / ``"not-isolated"``).
    Two clusters closer than ``rho`` spoil each other's isolation, so both
    land in the untraceable list.
    """
    runs = _clusters(flags)
    centers = flags.mesh.centers
    candidates: list[ShockCandidate] = []
    untraceable: list[UntraceableCluster] = []
    for k, (i0, i1) in enumerate(runs):
        a, b = float(centers[i0]), float(centers[i1])
        reason = None
        if b - a > params.delta + _TOL:
            reason = "too-wide"
        else:
            prev_ok = k == 0 or a - float(centers[runs[k - 1][1]]) > params.rho + _TOL
            next_ok = (
                k == len(runs) - 1 or float(centers[runs[k + 1][0]]) - b > params.rho + _TOL
            )
            if not (prev_ok and next_ok):
                reason = "not-isolated"
        if reason is None:
            candidates.append(ShockCandidate(x_lo=a, x_hi=b, idx_lo=i0, idx_hi=i1))
        else:
            untraceable.append(
                UntraceableCluster(x_lo=a, x_hi=b, idx_lo=i0, idx_hi=i1, reason=reason)
            )
    return candidates, untraceable


@dataclass(frozen=True)
class ShockTrace:
    """A discontinuity traced across one strip.

    The band ``gamma`` follows the straight line from the cluster center
    ``x0`` at speed ``lam``; ``side_left``/``side_right`` are the slanted
    regions beside the band whose oscillations were checked against
    ``kappa_prime``, and ``enclosure`` is the trapezoid whose time
    sections are exactly the union of the three.
    """

    j: int
    t_lo: float
    t_hi: float
    x0: float
    lam: float
    jump: float
    osc_left: float
    osc_right: float
    gamma: SlantedBand
    side_left: Trapezoid
    side_right: Trapezoid
    enclosure: Trapezoid

    @property
    def accepted(self) -> bool:
        return True


@dataclass(frozen=True)
class TraceRejection:
    """Why a cluster could not be traced across strip ``j``.

    ``reason`` is one of ``"no-match"`` (no admissible cluster at the
    strip's upper time in the reachable window), ``"oscillation-too-big"``
    (a side region varied more than ``kappa_prime``), ``"jump-too-small"``
    (the traced jump fell below ``sigma_min``), or the cluster-level
    reasons ``"too-wide"`` / ``"not-isolated"``.  Fields that were never
    computed stay NaN.
    """

    j: int
    t_lo: float
    t_hi: float
    x0: float
    reason: str
    lam: float = math.nan
    jump: float = math.nan
    osc_left: float = math.nan
    osc_right: float = math.nan

    @property
    def accepted(self) -> bool:
        return False


TraceRecord = Union[ShockTrace, TraceRejection]


def _osc_or_zero(history: SolutionHistory, region) -> float:
    try:
        return oscillation(history, region)
    except ValueError:
        # region holds no cell centers; an empty region varies by nothing
        return 0.0


def _across_cluster_jump(
    frame: GridFunction, candidate: ShockCandidate
) -> float:
    """Euclidean jump between the first unflagged cells beside the cluster."""
    n = frame.mesh.n_cells
    left = frame.values[max(candidate.idx_lo - 1, 0)]
    right = frame.values[min(candidate.idx_hi + 1, n - 1)]
    return float(np.linalg.norm(right - left))


def trace_shock(
    history: SolutionHistory,
    j: int,
    candidate: ShockCandidate,
    params: PostprocessParams,
    flags_hi: Optional[FlagSet] = None,
) -> TraceRecord:
    """Trace one candidate cluster across strip ``j``.

    Looks for a candidate cluster at ``t_{j+1}`` inside the reachable
    window ``[a + lambda_minus*h, b + lambda_plus*h]``; with several
    matches the one whose center is nearest to the cluster center wins
    (ties toward smaller ``x``).  The shock speed is the matched center
    displacement over ``h``, clamped to ``[lambda_minus, lambda_plus]``.
    The trace is accepted when both side regions oscillate at most
    ``kappa_prime`` and the across-cluster jump at ``t_j`` is at least
    ``sigma_min``; rejections carry the first failed check.
    """
    t_lo, t_hi = strip_times(history, params, j)
    a, b = candidate.x_lo, candidate.x_hi
    x0 = candidate.center
    h = params.h
    if flags_hi is None:
        flags_hi = flag_frame(history, params, t_hi)
    matches, _ = detect_shock_candidates(flags_hi, params)
    win_lo = a + params.lambda_minus * h
    win_hi = b + params.lambda_plus * h
    matches = [
        m for m in matches if m.x_lo >= win_lo - _TOL and m.x_hi <= win_hi + _TOL
    ]
    if not matches:
        return TraceRejection(j=j, t_lo=t_lo, t_hi=t_hi, x0=x0, reason="no-match")
    match = min(matches, key=lambda m: (abs(m.center - x0), m.center))
    lam = (match.center - x0) / h
    lam = min(max(lam, params.lambda_minus), params.lambda_plus)

    delta, rho = params.delta, params.rho
    spread = (params.lambda_plus - params.lambda_minus) * h
    a_prime = x0 - delta - rho - spread
    b_prime = x0 + delta + rho + spread
    gamma = SlantedBand(t_lo=t_lo, t_hi=t_hi, x0=x0, slope=lam, half_width=delta)
    side_left = Trapezoid(t_lo, t_hi, a_prime, x0 - delta, params.lambda_plus, lam)
    side_right = Trapezoid(t_lo, t_hi, x0 + delta, b_prime, lam, params.lambda_minus)
    enclosure = Trapezoid(
        t_lo, t_hi, a_prime, b_prime, params.lambda_plus, params.lambda_minus
    )

    osc_left = _osc_or_zero(history, side_left)
    osc_right = _osc_or_zero(history, side_right)
    if max(osc_left, osc_right) > params.kappa_prime + _TOL:
        return TraceRejection(
            j=j,
            t_lo=t_lo,
            t_hi=t_hi,
            x0=x0,
            reason="oscillation-too-big",
            lam=lam,
            osc_left=osc_left,
            osc_right=osc_right,
        )
    jump = _across_cluster_jump(history.frame_at(t_lo), candidate)
    if jump < params.sigma_min - _TOL:
        return TraceRejection(
            j=j,
            t_lo=t_lo,
            t_hi=t_hi,
            x0=x0,
            reason="jump-too-small",
            lam=lam,
            jump=jump,
            osc_left=osc_left,
            osc_right=osc_right,
        )
    return ShockTrace(
        j=j,
        t_lo=t_lo,
        t_hi=t_hi,
        x0=x0,
        lam=lam,
        jump=jump,
        osc_left=osc_left,
        osc_right=osc_right,
        gamma=gamma,
        side_left=side_left,
        side_right=side_right,
        enclosure=enclosure,
    )


# ---------------------------------------------------------------------------
# strip covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StripCover:
    """Covering of the shock-free part of one strip by slanted trapezoids.

    ``trapezoids[k]`` has oscillation ``kappas[k]``; ``kappa_j`` is their
    maximum (0 for a strip needing no trapezoids).  ``extent`` is the
    spatial interval outside which every frame of the strip is flat (None
    when all frames are constant).
    """

    j: int
    t_lo: float
    t_hi: float
    traced: tuple[ShockTrace, ...]
    trapezoids: tuple[Trapezoid, ...]
    kappas: tuple[float, ...]
    kappa_j: float
    extent: Optional[tuple[float, float]]


def _populated_interval(frame: GridFunction, tol: float = _TOL) -> Optional[tuple[float, float]]:
    """Smallest interval outside which the frame equals its edge values."""
    vals = frame.values
    mesh = frame.mesh
    dev_left = np.linalg.norm(vals - vals[0], axis=1) > tol
    dev_right = np.linalg.norm(vals - vals[-1], axis=1) > tol
    if not dev_left.any() and not dev_right.any():
        return None
    first = int(np.argmax(dev_left)) if dev_left.any() else mesh.n_cells
    last = int(mesh.n_cells - 1 - np.argmax(dev_right[::-1])) if dev_right.any() else -1
    lo_idx = min(first, last if last >= 0 else first)
    hi_idx = max(last, first if first < mesh.n_cells else last)
    lo = mesh.x_min + lo_idx * mesh.dx
    hi = mesh.x_min + (hi_idx + 1) * mesh.dx
    return lo, hi


def _strip_extent(
    history: SolutionHistory, t_lo: float, t_hi: float
) -> Optional[tuple[float, float]]:
    k_lo = history.frame_index(t_lo)
    k_hi = history.frame_index(t_hi)
    lo, hi = np.inf, -np.inf
    for k in range(k_lo, k_hi + 1):
        span = _populated_interval(history.frames[k])
        if span is not None:
            lo = min(lo, span[0])
            hi = max(hi, span[1])
    if lo > hi:
        return None
    return float(lo), float(hi)


def _segment_trapezoids(
    g_start: float,
    g_end: float,
    t_lo: float,
    t_hi: float,
    params: PostprocessParams,
    can_extend_left: bool,
    can_extend_right: bool,
) -> list[Trapezoid]:
    """Tile one shock-free segment, working in upper-edge coordinates.

    ``g_start``/``g_end`` bound the union of the trapezoids' upper edges;
    segments beside the populated extent may be widened outward into the
    flat far field to make room for one admissible trapezoid, but a
    segment pinched between two shock enclosures must fit as-is.
    """
    h = t_hi - t_lo
    s = params.inset
    lam_m, lam_p = params.lambda_minus, params.lambda_plus
    width = g_end - g_start
    if width <= _TOL:
        return []
    min_width = (lam_p - lam_m) * h + 3.0 * s
    if width < min_width:
        needed = min_width - width
        if can_extend_left and can_extend_right:
            g_start -= 0.5 * needed
            g_end += 0.5 * needed
        elif can_extend_left:
            g_start -= needed
        elif can_extend_right:
            g_end += needed
        else:
            raise ValueError(
                f"strip too narrow: segment [{g_start:g}, {g_end:g}] between shock "
                f"enclosures cannot fit a trapezoid of upper width {min_width:g}"
            )
        width = g_end - g_start
    n = max(1, int(math.floor(width / min_width)))
    grid = [g_start + width * k / n for k in range(n + 1)]
    return [
        Trapezoid(
            t_lo,
            t_hi,
            grid[k] - lam_p * h - s,
            grid[k + 1] - lam_m * h + s,
            lam_p,
            lam_m,
            inset=s,
        )
        for k in range(n)
    ]


def cover_strip(
    history: SolutionHistory,
    j: int,
    traced: Sequence[ShockTrace],
    params: PostprocessParams,
) -> StripCover:
    """Cover strip ``j`` outside the traced shock enclosures.

    Every covering trapezoid leans with ``lambda_plus`` on the left and
    ``lambda_minus`` on the right and has its upper edge inset by
    ``eps**(2/3)``, so its base is wider than ``2*h*(lambda_plus -
    lambda_minus)`` and neighbouring trapezoids overlap; together with
    the enclosures they cover the strip's populated extent, and no point
    lies in more than two of them.
    """
    t_lo, t_hi = strip_times(history, params, j)
    traced = tuple(sorted(traced, key=lambda tr: tr.x0))
    h = params.h
    s = params.inset
    lam_m, lam_p = params.lambda_minus, params.lambda_plus
    extent = _strip_extent(history, t_lo, t_hi)
    if extent is None:
        return StripCover(
            j=j,
            t_lo=t_lo,
            t_hi=t_hi,
            traced=traced,
            trapezoids=(),
            kappas=(),
            kappa_j=0.0,
            extent=None,
        )
    x_lo, x_hi = extent

    # Segment boundaries in upper-edge coordinates.  A vertical wall at X
    # needs the tiling to reach X at every time in the strip; a shock
    # enclosure's slanted wall must merely be met at both strip times.
    segments: list[tuple[float, float, bool, bool]] = []
    seg_start = x_lo + min(0.0, lam_p * h + s)
    seg_left_open = True
    for tr in traced:
        enc = tr.enclosure
        g_end = max(
            enc.base_lo + lam_m * h - s,
            enc.base_lo + lam_p * h,
        )
        segments.append((seg_start, g_end, seg_left_open, False))
        seg_start = min(
            enc.base_hi + lam_p * h + s,
            enc.base_hi + lam_m * h,
        )
        seg_left_open = False
    seg_end = x_hi + max(0.0, lam_m * h - s)
    segments.append((seg_start, seg_end, seg_left_open, True))

    trapezoids: list[Trapezoid] = []
    for g0, g1, open_l, open_r in segments:
        trapezoids.extend(
            _segment_trapezoids(g0, g1, t_lo, t_hi, params, open_l, open_r)
        )
    kappas = tuple(_osc_or_zero(history, tr) for tr in trapezoids)
    kappa_j = max(kappas, default=0.0)
    return StripCover(
        j=j,
        t_lo=t_lo,
        t_hi=t_hi,
        traced=traced,
        trapezoids=tuple(trapezoids),
        kappas=kappas,
        kappa_j=kappa_j,
        extent=extent,
    )


def kappa_series(covers: Sequence[StripCover]) -> list[tuple[float, float]]:
    """Step-function samples ``(t_j, kappa_j)`` ordered by strip."""
    return [(c.t_lo, c.kappa_j) for c in sorted(covers, key=lambda c: c.j)]


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StripResult:
    """Everything the certificate assembly needs from the geometry stage."""

    ok: bool
    sup_tv: float
    flag_sets: tuple[FlagSet, ...]
    traces: tuple[TraceRecord, ...]
    covers: tuple[StripCover, ...]

    def accepted_traces(self, j: Optional[int] = None) -> list[ShockTrace]:
        out = [t for t in self.traces if isinstance(t, ShockTrace)]
        if j is not None:
            out = [t for t in out if t.j == j]
        return out


def process_strips(history: SolutionHistory, params: PostprocessParams) -> StripResult:
    """Run gate, detection, tracing, and covering over every strip.

    A failed variation gate short-circuits: nothing downstream runs and
    the result carries ``ok=False`` with empty geometry.
    """
    ok, sup_tv = check_tv_gate(history, params)
    if not ok:
        return StripResult(ok=False, sup_tv=sup_tv, flag_sets=(), traces=(), covers=())
    nu = n_strips(history, params)
    flag_sets = tuple(
        flag_frame(history, params, history.t0 + j * params.h) for j in range(nu + 1)
    )
    traces: list[TraceRecord] = []
    covers: list[StripCover] = []
    for j in range(nu):
        t_lo, t_hi = strip_times(history, params, j)
        candidates, untraceable = detect_shock_candidates(flag_sets[j], params)
        records: list[TraceRecord] = [
            TraceRejection(
                j=j,
                t_lo=t_lo,
                t_hi=t_hi,
                x0=0.5 * (u.x_lo + u.x_hi),
                reason=u.reason,
            )
            for u in untraceable
        ]
        for cand in candidates:
            records.append(
                trace_shock(history, j, cand, params, flags_hi=flag_sets[j + 1])
            )
        records.sort(key=lambda r: r.x0)
        traces.extend(records)
        accepted = [r for r in records if isinstance(r, ShockTrace)]
        covers.append(cover_strip(history, j, accepted, params))
    return StripResult(
        ok=True,
        sup_tv=sup_tv,
        flag_sets=flag_sets,
        traces=tuple(traces),
        covers=tuple(covers),
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_flags_csv(flag_sets: Sequence[FlagSet], path) -> None:
    """One row per flagged cell: ``t,x``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x"])
        for fs in flag_sets:
            for x in fs.positions:
                writer.writerow([_fmt(fs.t), _fmt(float(x))])


def write_traces_csv(records: Sequence[TraceRecord], path) -> None:
    """One row per trace attempt, accepted or not."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "j",
                "t_lo",
                "t_hi",
                "x0",
                "lambda",
                "jump",
                "osc_left",
                "osc_right",
                "accepted",
                "reason",
            ]
        )
        for r in records:
            jump = r.jump if isinstance(r, ShockTrace) else getattr(r, "jump", math.nan)
            writer.writerow(
                [
                    r.j,
                    _fmt(r.t_lo),
                    _fmt(r.t_hi),
                    _fmt(r.x0),
                    _fmt(r.lam),
                    _fmt(jump),
                    _fmt(r.osc_left),
                    _fmt(r.osc_right),
                    int(r.accepted),
                    "" if r.accepted else r.reason,
                ]
            )


def write_covers_csv(covers: Sequence[StripCover], path) -> None:
    """One row per covering trapezoid: ``j,k,base_lo,base_hi,kappa``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "k", "base_lo", "base_hi", "kappa"])
        for cover in covers:
            for k, (tr, kap) in enumerate(zip(cover.trapezoids, cover.kappas)):
                writer.writerow(
                    [cover.j, k, _fmt(tr.base_lo), _fmt(tr.base_hi), _fmt(kap)]
                )


def write_kappa_csv(series: Sequence[tuple[float, float]], path) -> None:
    """Step-function samples ``t,kappa``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "kappa"])
        for t, kap in series:
            writer.writerow([_fmt(t), _fmt(kap)])
