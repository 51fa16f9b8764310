"""Four approximate solvers producing :class:`~artifact.grids.SolutionHistory`.

- ``godunov``: first-order upwind stepping.  Valid exactly when every
  characteristic speed lies in ``[0, dx/dt]``, which each step checks
  cell by cell before touching the data.
- ``lax_friedrichs``: the staggered average-and-flux step.  Each step flips
  the ``half_offset`` parity flag; the stored values always live on the
  primal cells.
- ``backward_euler``: implicit upwind solved by a damped Newton iteration
  with an exact block forward substitution, for strictly positive speeds.
- ``smoothing``: classical (second-order) evolution punctuated by
  mollification with a compactly supported bump kernel every ``dt``.

All boundaries use constant extension of the outermost cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from artifact.grids import SCHEME_IDS, GridFunction, Mesh, SolutionHistory, total_variation
from artifact.models import FluxModel

__all__ = [
    "SchemeConfig",
    "godunov_step",
    "lax_friedrichs_step",
    "backward_euler_step",
    "resample_staggered",
    "mollify",
    "bump_kernel",
    "BUMP_SUP",
    "smoothing_run",
    "run",
]

_CFL_SLACK = 1e-12


@dataclass(frozen=True)
class SchemeConfig:
    """Validated time-stepping parameters.

    ``cfl_guard`` is the admissible fraction of the stability limit; the
    static check against the model's speed bounds happens in :func:`run`,
    where the model is known.  ``smoothing_delta`` is the mollifier radius
    and is required only by the smoothing scheme.
    """

    scheme_id: str
    dx: float
    dt: float
    t_final: float
    cfl_guard: float = 1.0
    smoothing_delta: Optional[float] = None
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self) -> None:
        if self.scheme_id not in SCHEME_IDS:
            raise ValueError(
                f"unknown scheme_id {self.scheme_id!r}; expected one of {SCHEME_IDS}"
            )
        for name in ("dx", "dt", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.cfl_guard <= 1.0:
            raise ValueError(f"cfl_guard must lie in (0, 1], got {self.cfl_guard}")
        if self.smoothing_delta is not None and not self.smoothing_delta > 0:
            raise ValueError("smoothing_delta must be positive when given")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ValueError("newton_tol must be positive and newton_max_iter >= 1")


# ---------------------------------------------------------------------------
# explicit steps


def godunov_step(model: FluxModel, g: GridFunction, dt: float) -> GridFunction:
    """One upwind step; requires all speeds in ``[0, dx/dt]`` cell by cell."""
    dx = g.mesh.dx
    bound = dx / dt
    lo, hi = model.char_speed_range(g.values)
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    bad = (lo < -_CFL_SLACK) | (hi > bound * (1.0 + _CFL_SLACK))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"cfl violated in cell {i}: speeds [{lo[i]:.6g}, {hi[i]:.6g}] "
            f"outside [0, {bound:.6g}]"
        )
    f = model.flux(g.values)
    f_left = np.vstack([f[:1], f[:-1]])  # constant extension on the left
    return g.with_values(g.values + (dt / dx) * (f_left - f))


def lax_friedrichs_step(model: FluxModel, g: GridFunction, dt: float) -> GridFunction:
    """One staggered average-and-flux step; flips the parity flag."""
    dx = g.mesh.dx
    padded = np.pad(g.values, ((1, 1), (0, 0)), mode="edge")
    f = model.flux(padded)
    new = 0.5 * (padded[2:] + padded[:-2]) - (dt / (2.0 * dx)) * (f[2:] - f[:-2])
    return g.with_values(new, half_offset=not g.half_offset)


def resample_staggered(g: GridFunction) -> GridFunction:
    """Average a parity-flagged function back onto the primal lattice."""
    if not g.half_offset:
        return g
    shifted = np.vstack([g.values[1:], g.values[-1:]])
    return g.with_values(0.5 * (g.values + shifted), half_offset=False)


# ---------------------------------------------------------------------------
# implicit step


def _be_residual(model, U, U_old, r):
    f = model.flux(U)
    f_left = np.vstack([model.flux(U_old[:1]), f[:-1]])
    return U + r * (f - f_left) - U_old


def backward_euler_step(
    model: FluxModel,
    g: GridFunction,
    dt: float,
    newton_tol: float = 1e-12,
    newton_max_iter: int = 50,
) -> GridFunction:
    """One implicit upwind step solved by damped Newton.

    The new-time ghost cell is frozen at the old boundary value, which
    makes the Jacobian block lower bidiagonal; Newton updates are solved
    exactly by forward substitution on the 2x2 (or 1x1) blocks.
    """
    lo, _ = model.char_speed_range(g.values)
    lo = np.atleast_1d(lo)
    if np.any(lo <= 0.0):
        i = int(np.argmax(lo <= 0.0))
        raise ValueError(
            f"implicit upwind needs strictly positive speeds; cell {i} has {lo[i]:.6g}"
        )
    dx = g.mesh.dx
    r = dt / dx
    U_old = g.values
    n, m = U_old.shape
    U = U_old.copy()

    def safe_residual(V):
        try:
            R = _be_residual(model, V, U_old, r)
        except ValueError:  # stepped out of the state space (vacuum etc.)
            return None, np.inf
        return R, float(np.abs(R).max())

    R, res = safe_residual(U)
    for _ in range(newton_max_iter):
        if res <= newton_tol:
            return g.with_values(U)
        diag = np.eye(m)[None, :, :] + r * model.jacobian(U)
        sub = -r * model.jacobian(U[:-1])
        delta = np.empty_like(U)
        rhs = -R
        delta[0] = np.linalg.solve(diag[0], rhs[0])
        for j in range(1, n):
            delta[j] = np.linalg.solve(diag[j], rhs[j] - sub[j - 1] @ delta[j - 1])
        alpha = 1.0
        while alpha >= 2.0**-20:
            R_try, res_try = safe_residual(U + alpha * delta)
            if res_try < res:
                U = U + alpha * delta
                R, res = R_try, res_try
                break
            alpha *= 0.5
        else:
            raise ValueError(
                f"implicit solve diverged: no downhill step, residual {res:.3e}"
            )
    if res <= newton_tol:
        return g.with_values(U)
    raise ValueError(
        f"implicit solve diverged: residual {res:.3e} after {newton_max_iter} iterations"
    )


# ---------------------------------------------------------------------------
# mollifier


def _bump_raw(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def _bump_mass() -> float:
    # composite Gauss-Legendre over [-1, 1]; the integrand is smooth and
    # vanishes to all orders at the endpoints, so this converges fast
    nodes, weights = np.polynomial.legendre.leggauss(40)
    total = 0.0
    panels = np.linspace(-1.0, 1.0, 13)
    for a, b in zip(panels[:-1], panels[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.dot(weights, _bump_raw(mid + half * nodes)))
    return total


_BUMP_MASS = _bump_mass()

#: sup of the unit-mass bump kernel on (-1, 1)
BUMP_SUP = float(np.exp(-1.0) / _BUMP_MASS)


def bump_kernel(x) -> np.ndarray:
    """C-infinity bump supported on (-1, 1), normalised to unit mass."""
    return _bump_raw(x) / _BUMP_MASS


def mollify(g: GridFunction, delta: float) -> GridFunction:
    """Convolve with the width-``delta`` bump kernel (edge padding).

    The discrete weights are kernel samples renormalised to sum exactly to
    one, so constants are reproduced and total mass is conserved away from
    the boundary.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    dx = g.mesh.dx
    m = max(1, int(math.ceil(delta / dx)))
    w = bump_kernel(np.arange(-m, m + 1) * dx / delta)
    total = w.sum()
    if total <= 0.0:  # kernel narrower than one cell: identity
        return g
    w = w / total
    padded = np.pad(g.values, ((m, m), (0, 0)), mode="edge")
    out = np.empty_like(g.values)
    for c in range(g.n_comp):
        out[:, c] = np.convolve(padded[:, c], w, mode="valid")
    return g.with_values(out)


# ---------------------------------------------------------------------------
# coupling-coefficient bound for the smoothing scheme


def _coupling_bound(model: FluxModel, states: np.ndarray, fd_step: float = 1e-5):
    """Max coupling coefficient and left-eigenvector norm over a state box.

    The coefficients measure how strongly the characteristic fields feed
    each other:  ``-l_i . (DA . r_j) r_k + (lam_i - lam_j) (Dl_i . r_j) . r_k``
    sampled by central differences over a grid spanning the bounding box of
    ``states`` (expanded by 5%).
    """
    states = np.asarray(states, dtype=float)
    lo = states.min(axis=0)
    hi = states.max(axis=0)
    span = hi - lo
    lo = lo - 0.05 * span - 1e-9
    hi = hi + 0.05 * span + 1e-9
    n = model.n_comp
    axes = [np.linspace(lo[c], hi[c], 7) for c in range(n)]
    grids = np.meshgrid(*axes, indexing="ij")
    points = np.stack([a.ravel() for a in grids], axis=-1)

    m_g = 0.0
    l_sup = 0.0
    for u in points:
        lams, R, L = model.eigen(u)
        l_sup = max(l_sup, float(np.linalg.norm(L, axis=1).max()))
        for j in range(n):
            rj = R[:, j]
            A_p = model.jacobian(u + fd_step * rj)
            A_m = model.jacobian(u - fd_step * rj)
            dA = (A_p - A_m) / (2.0 * fd_step)
            L_p = model.eigen(u + fd_step * rj)[2]
            L_m = model.eigen(u - fd_step * rj)[2]
            dL = (L_p - L_m) / (2.0 * fd_step)
            for i in range(n):
                for k in range(n):
                    g_ijk = -L[i] @ (dA @ R[:, k]) + (lams[i] - lams[j]) * (
                        dL[i] @ R[:, k]
                    )
                    m_g = max(m_g, abs(float(g_ijk)))
    return m_g, l_sup


# ---------------------------------------------------------------------------
# smoothing scheme


def _richtmyer_step(model: FluxModel, vals: np.ndarray, dx: float, dt: float) -> np.ndarray:
    padded = np.pad(vals, ((1, 1), (0, 0)), mode="edge")
    f = model.flux(padded)
    half = 0.5 * (padded[1:] + padded[:-1]) - (dt / (2.0 * dx)) * (f[1:] - f[:-1])
    fh = model.flux(half)
    return vals - (dt / dx) * (fh[1:] - fh[:-1])


def _advance_classical(model, vals, dx, t_int, n_sub):
    step = t_int / n_sub
    out = vals
    for _ in range(n_sub):
        out = _richtmyer_step(model, out, dx, step)
    return out


def _pick_substeps(model, vals, dx, t_int, err_budget):
    """Substep count for one inter-mollification interval.

    Starts from a 0.4 CFL guess and doubles until a Richardson comparison
    (n vs 2n substeps) drops below ``err_budget`` in L1; the accepted count
    is then doubled once more for safety.
    """
    speed = max(model.max_char_speed(vals), 1e-12)
    n = max(1, int(math.ceil(t_int * speed / (0.4 * dx))))
    coarse = _advance_classical(model, vals, dx, t_int, n)
    for _ in range(14):
        fine = _advance_classical(model, vals, dx, t_int, 2 * n)
        diff = float(np.abs(coarse - fine).sum() * dx)
        if diff <= err_budget:
            return 2 * n
        n *= 2
        coarse = fine
    return 2 * n


def smoothing_run(model: FluxModel, g0: GridFunction, config: SchemeConfig) -> SolutionHistory:
    """Mollified classical evolution: smooth, advance ``dt``, re-smooth.

    Frame 0 is the raw initial data; every later frame is the state right
    after its mollification.  Construction refuses step sizes for which the
    gradient amplification through the coupling terms could blow up before
    the next mollification.
    """
    if config.smoothing_delta is None:
        raise ValueError("the smoothing scheme needs smoothing_delta")
    delta = config.smoothing_delta
    dx = g0.mesh.dx
    sup_tv = total_variation(g0)
    n = model.n_comp
    if sup_tv > 0.0:
        m_g, l_sup = _coupling_bound(model, g0.values)
        denom = n * n * m_g * BUMP_SUP * sup_tv * l_sup
        if denom > 0.0:
            eps_max = delta / denom
            if config.dt >= eps_max:
                raise ValueError(
                    f"smoothing blow-up risk: dt={config.dt:.6g} must stay below "
                    f"{eps_max:.6g} for delta={delta:.6g}"
                )
    n_steps = int(math.floor(config.t_final / config.dt + 1e-9))
    frames = [g0]
    if n_steps == 0:
        return SolutionHistory(tuple(frames), config.dt, "smoothing")
    state = mollify(g0, delta)
    err_budget = 0.005 * delta * delta
    n_sub = _pick_substeps(model, state.values, dx, config.dt, err_budget)
    for _ in range(n_steps):
        vals = _advance_classical(model, state.values, dx, config.dt, n_sub)
        state = mollify(state.with_values(vals), delta)
        frames.append(state)
    return SolutionHistory(tuple(frames), config.dt, "smoothing")


# ---------------------------------------------------------------------------
# driver


def _static_cfl_check(model: FluxModel, config: SchemeConfig) -> None:
    lo_b, hi_b = model.speed_bounds
    ratio = config.dt / config.dx
    if config.scheme_id in ("godunov", "backward_euler"):
        worst = hi_b * ratio
    elif config.scheme_id == "lax_friedrichs":
        worst = max(abs(lo_b), abs(hi_b)) * ratio
    else:
        return
    if worst > config.cfl_guard * (1.0 + _CFL_SLACK):
        raise ValueError(
            f"cfl violated: dt*speed/dx = {worst:.6g} exceeds guard {config.cfl_guard}"
        )


def run(
    model: FluxModel,
    config: SchemeConfig,
    g0: GridFunction,
    store_stride: int = 1,
) -> SolutionHistory:
    """Run ``config.scheme_id`` from ``g0`` until ``t_final``.

    Frames are stored every ``store_stride`` steps (the step count must
    divide evenly).  If ``t_final < dt`` the history holds only the
    initial frame.
    """
    if abs(g0.mesh.dx - config.dx) > 1e-12 * config.dx:
        raise ValueError(
            f"mesh spacing {g0.mesh.dx!r} does not match configured dx {config.dx!r}"
        )
    if store_stride < 1:
        raise ValueError("store_stride must be at least 1")
    _static_cfl_check(model, config)

    if config.scheme_id == "smoothing":
        if store_stride != 1:
            raise ValueError("the smoothing scheme stores every frame")
        return smoothing_run(model, g0, config)

    n_steps = int(math.floor(config.t_final / config.dt + 1e-9))
    if n_steps % store_stride != 0:
        raise ValueError(
            f"store_stride {store_stride} does not divide the {n_steps} steps"
        )
    frames = [g0]
    state = g0
    for m in range(n_steps):
        if config.scheme_id == "godunov":
            state = godunov_step(model, state, config.dt)
        elif config.scheme_id == "lax_friedrichs":
            state = lax_friedrichs_step(model, state, config.dt)
        else:
            state = backward_euler_step(
                model, state, config.dt, config.newton_tol, config.newton_max_iter
            )
        if (m + 1) % store_stride == 0:
            frames.append(state)
    return SolutionHistory(tuple(frames), config.dt * store_stride, config.scheme_id)
