"""Residual measurements of a solution history against test functions.

A history is treated as the piecewise-constant space-time field that equals
frame ``k`` on ``[t_k, t_{k+1})``.  Space integrals sample the test function
at cell centers (exact in the solution, midpoint-quality in the test
function); time integrals use midpoint quadrature refined by doubling until
the value settles.

The measurements quantify three properties of a numerical solution ``u``:

- :func:`check_time_lipschitz`: L1 continuity in time relative to the
  total variation,
- :func:`weak_residual`: the defect in the weak form of the conservation
  law against a compactly supported Lipschitz test function,
- :func:`entropy_residual`: the signed entropy dissipation defect against
  a nonnegative test function.

:func:`build_sign_test_function` and :func:`verify_sign_capture` implement
the piecewise-linear "tent" profiles that turn sign information into L1
lower bounds, and :func:`linear_comparison_diagnostic` measures how far a
history drifts from the frozen-coefficient linear evolution on a trapezoid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from artifact.grids import (
    GridFunction,
    SolutionHistory,
    Trapezoid,
    oscillation,
    total_variation,
)
from artifact.models import FluxModel

__all__ = [
    "TestFunction",
    "ResidualReport",
    "SignProfile",
    "SignCaptureReport",
    "LipschitzReport",
    "LinearComparisonReport",
    "GAMMA",
    "cosine_bump",
    "default_eps",
    "check_time_lipschitz",
    "weak_residual",
    "entropy_residual",
    "build_sign_test_function",
    "verify_sign_capture",
    "linear_comparison_diagnostic",
    "write_residual_csv",
]

#: Exponent used for tent widths and Lipschitz constants: widths scale like
#: ``eps**GAMMA`` and slopes like ``eps**-GAMMA``.  Any value in (0, 1)
#: would work; this one balances the two error mechanisms.
GAMMA = 2.0 / 3.0


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Compactly supported space-time test function with declared norms.

    ``evaluator`` and the two partial evaluators map ``(t, xs)`` with a
    vector of positions to a vector of values; all three must vanish
    outside the ``support`` box ``(t_lo, t_hi, x_lo, x_hi)``.  The declared
    norms must upper-bound the true sups; :meth:`validate` spot-checks them
    against a sampled grid.
    """

    name: str
    evaluator: Callable[[float, np.ndarray], np.ndarray]
    d_dt: Callable[[float, np.ndarray], np.ndarray]
    d_dx: Callable[[float, np.ndarray], np.ndarray]
    sup_norm: float
    dt_norm: float
    dx_norm: float
    support: tuple[float, float, float, float]

    @property
    def w1inf(self) -> float:
        return max(self.sup_norm, self.dt_norm, self.dx_norm)

    def validate(self, n: int = 100, slack: float = 0.05) -> None:
        """Check the declared norms against an ``n x n`` sample grid.

        Each declared norm must upper-bound the sampled sup (of the value,
        and of finite differences in t and x) and exceed it by at most
        ``slack`` relatively.
        """
        t_lo, t_hi, x_lo, x_hi = self.support
        ts = np.linspace(t_lo, t_hi, n)
        xs = np.linspace(x_lo, x_hi, n)
        ht = (t_hi - t_lo) * 1e-7
        hx = (x_hi - x_lo) * 1e-7
        sup = dt_sup = dx_sup = 0.0
        for t in ts:
            v = np.abs(np.asarray(self.evaluator(t, xs)))
            sup = max(sup, float(v.max()))
            fd_t = np.abs(
                np.asarray(self.evaluator(t + ht, xs)) - np.asarray(self.evaluator(t - ht, xs))
            ) / (2.0 * ht)
            dt_sup = max(dt_sup, float(fd_t.max()))
            fd_x = np.abs(
                np.asarray(self.evaluator(t, xs + hx)) - np.asarray(self.evaluator(t, xs - hx))
            ) / (2.0 * hx)
            dx_sup = max(dx_sup, float(fd_x.max()))
        for label, declared, sampled in (
            ("sup", self.sup_norm, sup),
            ("dt", self.dt_norm, dt_sup),
            ("dx", self.dx_norm, dx_sup),
        ):
            if sampled > declared * (1.0 + 1e-6):
                raise ValueError(
                    f"{self.name}: sampled {label} norm {sampled:.6g} exceeds "
                    f"declared {declared:.6g}"
                )
            if declared > sampled * (1.0 + slack) + 1e-15:
                raise ValueError(
                    f"{self.name}: declared {label} norm {declared:.6g} is more than "
                    f"{slack:.0%} above the sampled {sampled:.6g}"
                )


def cosine_bump(
    t_lo: float,
    t_hi: float,
    x_lo: float,
    x_hi: float,
    amplitude: float = 1.0,
    name: str = "phi",
) -> TestFunction:
    """Separable raised-cosine bump ``A b(t) b(x)`` on the given box.

    ``b`` is ``cos^2`` shaped: nonnegative, C1, vanishing with its first
    derivatives on the box boundary.  All three norms are closed-form.
    """
    ct, rt = 0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo)
    cx, rx = 0.5 * (x_lo + x_hi), 0.5 * (x_hi - x_lo)

    def b(z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = 0.5 * (1.0 + np.cos(np.pi * z[inside]))
        return out

    def db(z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = -0.5 * np.pi * np.sin(np.pi * z[inside])
        return out

    def evaluator(t, xs):
        return amplitude * float(b((t - ct) / rt)) * b((np.asarray(xs) - cx) / rx)

    def d_dt(t, xs):
        return amplitude * float(db((t - ct) / rt)) / rt * b((np.asarray(xs) - cx) / rx)

    def d_dx(t, xs):
        return amplitude * float(b((t - ct) / rt)) * db((np.asarray(xs) - cx) / rx) / rx

    return TestFunction(
        name=name,
        evaluator=evaluator,
        d_dt=d_dt,
        d_dx=d_dx,
        sup_norm=amplitude,
        dt_norm=amplitude * 0.5 * np.pi / rt,
        dx_norm=amplitude * 0.5 * np.pi / rx,
        support=(t_lo, t_hi, x_lo, x_hi),
    )


@dataclass(frozen=True)
class ResidualReport:
    """One residual measurement, with the scale it should be compared to.

    ``normalizer = eps * |phi|_W1inf * (tau_prime - tau) * sup TV``; the
    ratio is the residual divided by it (inf when the normalizer vanishes
    but the residual does not).
    """

    tau: float
    tau_prime: float
    phi_id: str
    residual: float
    normalizer: float
    eps: float

    @property
    def ratio(self) -> float:
        if self.normalizer > 0.0:
            return self.residual / self.normalizer
        return 0.0 if self.residual == 0.0 else math.inf


def write_residual_csv(reports: Sequence[ResidualReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "tau_prime", "phi_id", "residual", "normalizer", "ratio"])
        for r in reports:
            writer.writerow(
                [
                    f"{r.tau:.17g}",
                    f"{r.tau_prime:.17g}",
                    r.phi_id,
                    f"{r.residual:.17g}",
                    f"{r.normalizer:.17g}",
                    f"{r.ratio:.17g}",
                ]
            )


def default_eps(history: SolutionHistory) -> float:
    """Resolution parameter of a history: the coarser of dt and dx."""
    return max(history.dt, history.mesh.dx)


# ---------------------------------------------------------------------------
# time Lipschitz check


@dataclass(frozen=True)
class LipschitzReport:
    max_ratio: float
    n_pairs: int
    worst_pair: tuple[float, float]


def check_time_lipschitz(
    history: SolutionHistory,
    n_pairs: int = 120,
    rng: Optional[np.random.Generator] = None,
) -> LipschitzReport:
    """Empirical L1-in-time Lipschitz constant relative to the variation.

    Measures ``|u(t') - u(t)|_L1 / ((t' - t) sup TV)`` over all adjacent
    frame pairs plus random longer pairs until at least ``n_pairs`` are
    covered.  Pairs whose variation vanishes contribute ratio 0.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = history.n_frames
    if n < 2:
        raise ValueError("need at least two frames")
    pairs = [(k, k + 1) for k in range(n - 1)]
    while len(pairs) < n_pairs:
        a, b = sorted(rng.integers(0, n, size=2))
        if a != b:
            pairs.append((int(a), int(b)))
    tvs = [total_variation(fr) for fr in history.frames]
    dx = history.mesh.dx
    best = 0.0
    worst_pair = (history.times[0], history.times[1])
    for a, b in pairs:
        sup_tv = max(tvs[a : b + 1])
        if sup_tv == 0.0:
            continue
        diff = history.frames[b].values - history.frames[a].values
        dist = float(np.linalg.norm(diff, axis=1).sum() * dx)
        ratio = dist / ((b - a) * history.dt * sup_tv)
        if ratio > best:
            best = ratio
            worst_pair = (float(history.times[a]), float(history.times[b]))
    return LipschitzReport(best, len(pairs), worst_pair)


# ---------------------------------------------------------------------------
# weak and entropy residuals


def _check_support(history: SolutionHistory, fn: TestFunction) -> None:
    _, _, x_lo, x_hi = fn.support
    mesh = history.mesh
    tol = 1e-9 * mesh.dx
    if x_lo < mesh.x_min - tol or x_hi > mesh.x_max + tol:
        raise ValueError(
            f"test function support [{x_lo}, {x_hi}] extends beyond the mesh "
            f"[{mesh.x_min}, {mesh.x_max}]"
        )


def _sup_tv(history: SolutionHistory, k_lo: int, k_hi: int) -> float:
    return max(total_variation(history.frames[k]) for k in range(k_lo, k_hi + 1))


def _interior_integral(
    history: SolutionHistory,
    fn: TestFunction,
    k_lo: int,
    k_hi: int,
    cell_fields: Sequence[np.ndarray],
    tol: float,
) -> list[np.ndarray]:
    """Time-space integral of ``sum_j field_j(t_k) dphi(t, x_j) dx``.

    ``cell_fields[m][k - k_lo]`` holds per-cell coefficients for frame
    ``k``; the first field multiplies ``phi_t``, the second ``phi_x``.  The
    integrand is piecewise constant in time frame by frame; midpoint
    quadrature in t is refined by doubling until the total moves by less
    than ``tol``.
    """
    xs = history.mesh.centers
    dx = history.mesh.dx
    dt = history.dt
    times = history.times

    def evaluate(n_sub: int) -> list[np.ndarray]:
        totals = [np.zeros(f.shape[2]) for f in cell_fields]
        for k in range(k_lo, k_hi):
            sub = (np.arange(n_sub) + 0.5) * (dt / n_sub)
            for s in sub:
                t = times[k] + s
                pt = np.asarray(fn.d_dt(t, xs))
                px = np.asarray(fn.d_dx(t, xs))
                w = dx * dt / n_sub
                for m, f in enumerate(cell_fields):
                    grid = pt if m == 0 else px
                    totals[m] = totals[m] + w * (f[k - k_lo].T @ grid)
        return totals

    n_sub = 1
    prev = evaluate(n_sub)
    for _ in range(12):
        n_sub *= 2
        cur = evaluate(n_sub)
        change = max(float(np.abs(c - p).max()) for c, p in zip(cur, prev))
        prev = cur
        if change <= tol:
            break
    return prev


def _boundary_term(frame_vals: np.ndarray, fn: TestFunction, t: float, xs, dx) -> np.ndarray:
    phi = np.asarray(fn.evaluator(t, xs))
    return dx * (frame_vals.T @ phi)


def weak_residual(
    model: FluxModel,
    history: SolutionHistory,
    fn: TestFunction,
    tau: float,
    tau_prime: float,
    eps: Optional[float] = None,
) -> ResidualReport:
    """Defect of the weak form between two frame times.

    Computes ``| int u(tau) phi(tau) - int u(tau') phi(tau')
    + int int (u phi_t + f(u) phi_x) |`` (Euclidean norm over components)
    and packages it with the expected scale.
    """
    _check_support(history, fn)
    k_lo = history.frame_index(tau)
    k_hi = history.frame_index(tau_prime)
    if k_hi <= k_lo:
        raise ValueError("tau_prime must name a later frame than tau")
    if eps is None:
        eps = default_eps(history)
    sup_tv = _sup_tv(history, k_lo, k_hi)
    normalizer = eps * fn.w1inf * (tau_prime - tau) * sup_tv
    tol = max(0.01 * normalizer, 1e-14)

    xs = history.mesh.centers
    dx = history.mesh.dx
    u_frames = np.stack([history.frames[k].values for k in range(k_lo, k_hi + 1)])
    f_frames = np.stack([model.flux(history.frames[k].values) for k in range(k_lo, k_hi + 1)])
    interior = _interior_integral(history, fn, k_lo, k_hi, [u_frames, f_frames], tol)
    bnd_lo = _boundary_term(history.frames[k_lo].values, fn, tau, xs, dx)
    bnd_hi = _boundary_term(history.frames[k_hi].values, fn, tau_prime, xs, dx)
    vec = bnd_lo - bnd_hi + interior[0] + interior[1]
    return ResidualReport(
        tau=tau,
        tau_prime=tau_prime,
        phi_id=fn.name,
        residual=float(np.linalg.norm(vec)),
        normalizer=normalizer,
        eps=eps,
    )


def entropy_residual(
    model: FluxModel,
    history: SolutionHistory,
    fn: TestFunction,
    tau: float,
    tau_prime: float,
    eps: Optional[float] = None,
) -> ResidualReport:
    """Signed entropy defect; negative values mean spurious entropy gain.

    The test function must be nonnegative.  The report's ``residual`` field
    carries the *signed* value ``int eta phi(tau) - int eta phi(tau')
    + int int (eta phi_t + q phi_x)``.
    """
    _check_support(history, fn)
    t_lo, t_hi, x_lo, x_hi = fn.support
    for t in np.linspace(t_lo, t_hi, 25):
        if np.asarray(fn.evaluator(t, np.linspace(x_lo, x_hi, 50))).min() < -1e-12:
            raise ValueError("test function not nonnegative")
    k_lo = history.frame_index(tau)
    k_hi = history.frame_index(tau_prime)
    if k_hi <= k_lo:
        raise ValueError("tau_prime must name a later frame than tau")
    if eps is None:
        eps = default_eps(history)
    sup_tv = _sup_tv(history, k_lo, k_hi)
    normalizer = eps * fn.w1inf * (tau_prime - tau) * sup_tv
    tol = max(0.01 * normalizer, 1e-14)

    xs = history.mesh.centers
    dx = history.mesh.dx
    eta = np.stack(
        [model.entropy(history.frames[k].values)[:, None] for k in range(k_lo, k_hi + 1)]
    )
    q = np.stack(
        [model.entropy_flux(history.frames[k].values)[:, None] for k in range(k_lo, k_hi + 1)]
    )
    interior = _interior_integral(history, fn, k_lo, k_hi, [eta, q], tol)
    bnd_lo = _boundary_term(eta[0], fn, tau, xs, dx)
    bnd_hi = _boundary_term(eta[-1], fn, tau_prime, xs, dx)
    value = float((bnd_lo - bnd_hi + interior[0] + interior[1])[0])
    return ResidualReport(
        tau=tau,
        tau_prime=tau_prime,
        phi_id=fn.name,
        residual=value,
        normalizer=normalizer,
        eps=eps,
    )


# ---------------------------------------------------------------------------
# sign-capture tents


@dataclass(frozen=True, eq=False)
class SignProfile:
    """Piecewise-linear profile with values in [-1, 1], zero outside its knots."""

    knots: np.ndarray
    vals: np.ndarray
    lipschitz: float

    def __call__(self, x) -> np.ndarray:
        if self.knots.size == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.interp(np.asarray(x, dtype=float), self.knots, self.vals, left=0.0, right=0.0)


def build_sign_test_function(
    breaks: Sequence[float], values: Sequence[float], eps: float
) -> SignProfile:
    """Tent profile aligned with the signs of a piecewise-constant function.

    ``values[k]`` is the value on ``[breaks[k], breaks[k+1])``.  On every
    maximal run of strictly one-signed pieces the profile ramps from 0 to
    +-1 (or to the lower peak the run width allows) and back, with slope
    exactly ``eps**-GAMMA``; it vanishes on zero pieces and outside the
    interval.  The product ``profile * g`` is nonnegative everywhere.
    """
    breaks = np.asarray(breaks, dtype=float)
    values = np.asarray(values, dtype=float)
    if breaks.ndim != 1 or values.ndim != 1 or breaks.size != values.size + 1:
        raise ValueError("need n+1 breakpoints for n piece values")
    if np.any(np.diff(breaks) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    width = eps**GAMMA
    slope = 1.0 / width

    knots: list[float] = [breaks[0]]
    vals: list[float] = [0.0]
    any_tent = False

    k = 0
    n = values.size
    while k < n:
        s = np.sign(values[k])
        if s == 0.0:
            k += 1
            continue
        j = k
        while j + 1 < n and np.sign(values[j + 1]) == s:
            j += 1
        a, b = breaks[k], breaks[j + 1]
        any_tent = True
        if b - a > 2.0 * width:
            knots += [a, a + width, b - width, b]
            vals += [0.0, s, s, 0.0]
        else:
            mid = 0.5 * (a + b)
            peak = s * (b - a) * 0.5 * slope
            knots += [a, mid, b]
            vals += [0.0, peak, 0.0]
        k = j + 1

    knots.append(breaks[-1])
    vals.append(0.0)
    arr_k = np.asarray(knots)
    arr_v = np.asarray(vals)
    keep = np.concatenate([[True], np.diff(arr_k) > 0])
    return SignProfile(arr_k[keep], arr_v[keep], slope if any_tent else 0.0)


@dataclass(frozen=True, eq=False)
class SignCaptureReport:
    lhs: float
    rhs: float
    branch: str  # "interior" (one-signed data) or "variation" (sign changes)
    holds: bool
    profile: SignProfile


def _pc_abs_integral(breaks, values, lo, hi) -> float:
    """Exact integral of |g| over [lo, hi] for piecewise-constant g."""
    total = 0.0
    for k in range(values.size):
        a, b = max(breaks[k], lo), min(breaks[k + 1], hi)
        if b > a:
            total += (b - a) * abs(values[k])
    return total


def _pc_profile_integral(breaks, values, profile: SignProfile) -> float:
    """Exact integral of ``profile * g`` (trapezoid on merged breakpoints)."""
    cuts = np.unique(np.concatenate([breaks, profile.knots]))
    cuts = cuts[(cuts >= breaks[0]) & (cuts <= breaks[-1])]
    total = 0.0
    idx = np.clip(np.searchsorted(breaks, 0.5 * (cuts[:-1] + cuts[1:]), side="right") - 1, 0, values.size - 1)
    phi = profile(cuts)
    for seg, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        total += values[idx[seg]] * 0.5 * (phi[seg] + phi[seg + 1]) * (b - a)
    return total


def verify_sign_capture(
    breaks: Sequence[float], values: Sequence[float], eps: float
) -> SignCaptureReport:
    """Check the tent-profile L1 lower bound on one piecewise-constant g.

    For strictly one-signed data the interior mass ``int_{a+w}^{b-w} |g|``
    is bounded by ``int phi g`` (branch "interior"); data that change sign
    or vanish somewhere get the full-interval bound with the variation
    correction ``2 w TV`` (branch "variation"), ``w = eps**GAMMA``.
    """
    breaks = np.asarray(breaks, dtype=float)
    values = np.asarray(values, dtype=float)
    profile = build_sign_test_function(breaks, values, eps)
    width = eps**GAMMA
    alpha, beta = breaks[0], breaks[-1]
    single_signed = np.all(values > 0.0) or np.all(values < 0.0)
    correlation = _pc_profile_integral(breaks, values, profile)
    if single_signed:
        if beta - alpha <= 2.0 * width:
            raise ValueError(
                "interval too narrow for the single-signed bound: "
                f"{beta - alpha!r} <= 2 * {width!r}"
            )
        lhs = _pc_abs_integral(breaks, values, alpha + width, beta - width)
        rhs = correlation
        branch = "interior"
    else:
        lhs = _pc_abs_integral(breaks, values, alpha, beta)
        tv = float(np.abs(np.diff(values)).sum())
        rhs = correlation + 2.0 * width * tv
        branch = "variation"
    return SignCaptureReport(lhs, rhs, branch, holds=lhs <= rhs + 1e-12, profile=profile)


# ---------------------------------------------------------------------------
# frozen-coefficient linear comparison


@dataclass(frozen=True)
class LinearComparisonReport:
    value: float
    bound: float
    kappa: float
    freeze_point: float

    @property
    def ratio(self) -> float:
        return self.value / self.bound if self.bound > 0 else math.inf


def linear_comparison_diagnostic(
    model: FluxModel,
    history: SolutionHistory,
    trap: Trapezoid,
    freeze_point: Optional[float] = None,
    eps: Optional[float] = None,
) -> LinearComparisonReport:
    """Distance from the frozen-coefficient linear evolution on a trapezoid.

    The comparison field decomposes the bottom frame along the eigenbasis
    of the Jacobian frozen at ``(t_lo, freeze_point)`` and translates each
    component with its characteristic speed.  The L1 difference against the
    actual top frame is integrated exactly over the (inset) upper edge and
    reported next to the scale ``kappa h + eps^(2 GAMMA) + h eps^GAMMA``
    with ``kappa`` the solution's spread over the trapezoid.
    """
    if freeze_point is None:
        freeze_point = 0.5 * (trap.base_lo + trap.base_hi)
    if eps is None:
        eps = default_eps(history)
    k_lo = history.frame_index(trap.t_lo)
    k_hi = history.frame_index(trap.t_hi)
    g_lo = history.frames[k_lo]
    g_hi = history.frames[k_hi]
    mesh = history.mesh
    h = trap.height

    u_star = g_lo.value_at(freeze_point)
    lams, R, L = model.eigen(u_star)
    n = model.n_comp

    lo_x, hi_x = trap.upper_edge
    lo_x = max(lo_x, mesh.x_min)
    hi_x = min(hi_x, mesh.x_max)
    if hi_x <= lo_x:
        raise ValueError("trapezoid upper edge does not meet the mesh")

    # breakpoints of u(t_hi) and of each shifted copy of u(t_lo)
    faces = mesh.interfaces
    cuts = [faces[(faces > lo_x) & (faces < hi_x)]]
    for i in range(n):
        shifted = faces + lams[i] * h
        cuts.append(shifted[(shifted > lo_x) & (shifted < hi_x)])
    cuts = np.unique(np.concatenate([[lo_x, hi_x], *cuts]))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    lens = np.diff(cuts)

    def lookup(g: GridFunction, pts: np.ndarray) -> np.ndarray:
        idx = np.clip(
            np.floor((pts - mesh.x_min) / mesh.dx).astype(int), 0, mesh.n_cells - 1
        )
        return g.values[idx]

    w = np.zeros((mids.size, n))
    for i in range(n):
        comp = lookup(g_lo, mids - lams[i] * h) @ L[i]
        w += np.outer(comp, R[:, i])
    diff = lookup(g_hi, mids) - w
    value = float(np.dot(lens, np.linalg.norm(diff, axis=1)))

    kappa = oscillation(history, trap)
    bound = kappa * h + eps ** (2.0 * GAMMA) + h * eps**GAMMA
    return LinearComparisonReport(value, bound, kappa, freeze_point)
