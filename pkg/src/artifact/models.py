"""Flux models with entropy pairs and exact Riemann solvers.

Two concrete models are provided:

- :func:`make_burgers` -- a convex scalar law ``f(u) = u^2/2 + u`` whose
  characteristic speed stays in ``(0, 2)`` for ``|u| < 1``;
- :func:`make_psystem` -- a 2x2 isentropic gas system in Lagrangian-type
  coordinates, shifted so that for specific volume ``v > 1`` both
  characteristic families travel with speeds in ``(0, 2)``.

Both carry a strictly convex entropy with matching entropy flux, and an
exact Riemann solver that returns a :class:`RiemannFan` -- a validated,
self-similar wave pattern that can be sampled at any ``x/t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "FluxModel",
    "Wave",
    "RiemannFan",
    "make_burgers",
    "make_psystem",
    "make_model",
    "solve_riemann",
    "riemann_sample",
    "eigen_defect",
    "entropy_compat_defect",
    "entropy_hessian_min_eig",
]

_RH_TOL = 1e-8
_ORDER_TOL = 1e-12
_WAVE_KINDS = ("shock", "rarefaction", "contact")


@dataclass(frozen=True, eq=False)
class FluxModel:
    """A 1-D system of conservation laws with an entropy pair.

    All state-valued callables accept arrays of shape ``(..., n_comp)`` and
    broadcast over leading axes.  ``eigen`` is single-state only and returns
    ``(lams, R, L)`` with eigenvalues ascending, right eigenvectors in the
    columns of ``R`` normalised to unit length, and left eigenvectors in the
    rows of ``L`` scaled so that ``L @ R`` is the identity.

    ``admissible`` describes the open set of states on which the
    characteristic speeds stay strictly inside ``speed_bounds``.
    """

    name: str
    n_comp: int
    speed_bounds: tuple[float, float]
    flux: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    eigen: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]
    char_speed_range: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    entropy: Callable[[np.ndarray], np.ndarray]
    entropy_flux: Callable[[np.ndarray], np.ndarray]
    admissible: Callable[[np.ndarray], bool]
    sample_admissible: Callable[[np.random.Generator], np.ndarray]
    exact_riemann: Optional[Callable] = None

    def max_char_speed(self, values: np.ndarray) -> float:
        lo, hi = self.char_speed_range(values)
        return float(np.maximum(np.abs(lo), np.abs(hi)).max())


@dataclass(frozen=True, eq=False)
class Wave:
    """One self-similar wave of a Riemann fan.

    ``speed_lo == speed_hi`` for shocks and contacts; rarefactions span
    the fan ``[speed_lo, speed_hi]`` and carry a ``fan_state`` callable
    mapping a speed inside the fan to the state on that ray.  ``strength``
    is the signed wave-curve parameter: negative for shocks, positive for
    rarefactions.
    """

    family: int
    kind: str
    speed_lo: float
    speed_hi: float
    strength: float
    left: np.ndarray
    right: np.ndarray
    fan_state: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self) -> None:
        if self.kind not in _WAVE_KINDS:
            raise ValueError(f"unknown wave kind {self.kind!r}")
        if self.speed_hi < self.speed_lo:
            raise ValueError("wave speeds out of order")
        if self.kind != "rarefaction" and self.speed_hi != self.speed_lo:
            raise ValueError(f"a {self.kind} must have a single speed")
        if self.kind == "rarefaction" and self.fan_state is None:
            raise ValueError("a rarefaction needs a fan_state callable")


@dataclass(frozen=True, eq=False)
class RiemannFan:
    """Validated self-similar solution of a Riemann problem.

    Construction checks the Rankine-Hugoniot relation for every shock
    (residual below 1e-8 in the max norm) and that wave speeds are
    nondecreasing from left to right.
    """

    model: FluxModel
    left: np.ndarray
    right: np.ndarray
    middles: tuple
    waves: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", np.atleast_1d(np.asarray(self.left, dtype=float)))
        object.__setattr__(self, "right", np.atleast_1d(np.asarray(self.right, dtype=float)))
        object.__setattr__(self, "middles", tuple(np.atleast_1d(np.asarray(m, dtype=float)) for m in self.middles))
        object.__setattr__(self, "waves", tuple(self.waves))
        states = (self.left, *self.middles, self.right)
        if len(self.middles) != max(0, len(self.waves) - 1):
            raise ValueError("need exactly one intermediate state between waves")
        prev_hi = -np.inf
        for w, ul, ur in zip(self.waves, states[:-1], states[1:]):
            if w.speed_lo < prev_hi - _ORDER_TOL:
                raise ValueError("wave speeds are not nondecreasing")
            prev_hi = w.speed_hi
            if w.kind in ("shock", "contact"):
                resid = self.model.flux(ur) - self.model.flux(ul) - w.speed_lo * (ur - ul)
                if np.abs(resid).max() > _RH_TOL:
                    raise ValueError(
                        f"jump condition violated for the family-{w.family} {w.kind}: "
                        f"residual {np.abs(resid).max():.3e}"
                    )

    @property
    def states(self) -> tuple:
        return (self.left, *self.middles, self.right)

    def sample(self, xi: float) -> np.ndarray:
        """State on the ray ``x/t = xi``; ties at a shock go to the left."""
        states = self.states
        for w, ul in zip(self.waves, states[:-1]):
            if xi <= w.speed_lo:
                return ul
            if w.kind == "rarefaction" and xi <= w.speed_hi:
                return np.atleast_1d(np.asarray(w.fan_state(xi), dtype=float))
        return states[-1]


def riemann_sample(fan: RiemannFan, xi: float) -> np.ndarray:
    """Module-level alias for :meth:`RiemannFan.sample`."""
    return fan.sample(xi)


def solve_riemann(model: FluxModel, u_left, u_right) -> RiemannFan:
    """Exact Riemann solution for a model that provides one."""
    if model.exact_riemann is None:
        raise NotImplementedError(f"model {model.name!r} has no exact Riemann solver")
    u_left = np.atleast_1d(np.asarray(u_left, dtype=float))
    u_right = np.atleast_1d(np.asarray(u_right, dtype=float))
    return model.exact_riemann(model, u_left, u_right)


# ---------------------------------------------------------------------------
# scalar convex model


def _burgers_riemann(model: FluxModel, ul: np.ndarray, ur: np.ndarray) -> RiemannFan:
    a, b = float(ul[0]), float(ur[0])
    waves: list[Wave] = []
    if a > b:
        s = 0.5 * (a + b) + 1.0
        waves.append(Wave(1, "shock", s, s, b - a, ul, ur))
    elif a < b:
        def fan_state(xi: float) -> np.ndarray:
            return np.array([xi - 1.0])

        waves.append(Wave(1, "rarefaction", a + 1.0, b + 1.0, b - a, ul, ur, fan_state))
    return RiemannFan(model, ul, ur, middles=(), waves=tuple(waves))


def make_burgers() -> FluxModel:
    """Convex scalar law ``f(u) = u^2/2 + u`` with entropy ``u^2``."""

    def flux(u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u**2 + u

    def jacobian(u):
        u = np.asarray(u, dtype=float)
        lam = u[..., 0] + 1.0
        return lam[..., None, None] * np.ones((1, 1))

    def eigen(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        lam = np.array([u[0] + 1.0])
        return lam, np.eye(1), np.eye(1)

    def char_speed_range(u):
        u = np.asarray(u, dtype=float)
        lam = u[..., 0] + 1.0
        return lam, lam

    def entropy(u):
        u = np.asarray(u, dtype=float)
        return u[..., 0] ** 2

    def entropy_flux(u):
        u = np.asarray(u, dtype=float)
        w = u[..., 0]
        return (2.0 / 3.0) * w**3 + w**2

    def admissible(u):
        u = np.asarray(u, dtype=float)
        return bool(np.all(np.abs(u[..., 0]) < 1.0))

    def sample_admissible(rng):
        return np.array([rng.uniform(-0.95, 0.95)])

    return FluxModel(
        name="burgers",
        n_comp=1,
        speed_bounds=(0.0, 2.0),
        flux=flux,
        jacobian=jacobian,
        eigen=eigen,
        char_speed_range=char_speed_range,
        entropy=entropy,
        entropy_flux=entropy_flux,
        admissible=admissible,
        sample_admissible=sample_admissible,
        exact_riemann=_burgers_riemann,
    )


# ---------------------------------------------------------------------------
# 2x2 isentropic gas model

# pressure law and its primitives; states are (v, u) with v the specific
# volume (v > 0 away from vacuum) and u the velocity.


def _pressure(v):
    return 0.5 / np.asarray(v, dtype=float) ** 2


def _check_no_vacuum(v) -> None:
    if np.any(np.asarray(v) <= 0.0):
        raise ValueError("vacuum state: specific volume must be positive")


def _phi1(v_m: float, v_l: float, u_l: float) -> float:
    """u reached from (v_l, u_l) through an admissible 1-wave to volume v_m."""
    if v_m >= v_l:  # rarefaction branch
        return u_l + 2.0 * (v_l**-0.5 - v_m**-0.5)
    return u_l - np.sqrt((_pressure(v_m) - _pressure(v_l)) * (v_l - v_m))


def _psi2(v_m: float, v_r: float, u_r: float) -> float:
    """u needed at volume v_m so an admissible 2-wave reaches (v_r, u_r)."""
    if v_r <= v_m:  # rarefaction branch
        return u_r - 2.0 * (v_r**-0.5 - v_m**-0.5)
    return u_r + np.sqrt((_pressure(v_m) - _pressure(v_r)) * (v_r - v_m))


_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200
_V_HUGE = 1e13
_V_TINY = 1e-13


def _shock_speed(family: int, v_a: float, v_b: float) -> float:
    """Jump-condition speed of a shock joining volumes ``v_a`` and ``v_b``.

    The slope ``(p(v_a) - p(v_b)) / (v_a - v_b)`` factors exactly as
    ``-(v_a + v_b) / (2 v_a^2 v_b^2)``, which avoids the cancellation the
    raw difference quotient suffers for weak shocks and limits continuously
    to the characteristic speed as ``v_b -> v_a``.
    """
    root = np.sqrt(0.5 * (v_a + v_b)) / (v_a * v_b)
    return 1.0 - root if family == 1 else 1.0 + root


def _psystem_middle(v_l: float, u_l: float, v_r: float, u_r: float) -> float:
    """Volume of the middle state, found by bisection on the 1-wave parameter.

    The curve mismatch ``F(v) = _phi1(v) - _psi2(v)`` is strictly increasing,
    tends to -inf at vacuum and to a finite limit as ``v -> inf``; when that
    limit is still negative the data open a vacuum and no middle state exists.
    """

    def mismatch(v: float) -> float:
        return _phi1(v, v_l, u_l) - _psi2(v, v_r, u_r)

    lo = min(v_l, v_r)
    while mismatch(lo) >= 0.0:
        lo *= 0.5
        if lo < _V_TINY:
            break
    hi = max(v_l, v_r)
    while mismatch(hi) < 0.0:
        hi *= 2.0
        if hi > _V_HUGE:
            raise ValueError("riemann solver diverged: data open a vacuum")
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _BISECT_TOL * max(1.0, mid):
            break
        if mismatch(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _psystem_riemann(model: FluxModel, ul: np.ndarray, ur: np.ndarray) -> RiemannFan:
    v_l, u_l = float(ul[0]), float(ul[1])
    v_r, u_r = float(ur[0]), float(ur[1])
    _check_no_vacuum([v_l, v_r])
    if v_l == v_r and u_l == u_r:
        return RiemannFan(model, ul, ur, middles=(), waves=())

    v_m = _psystem_middle(v_l, u_l, v_r, u_r)
    u_m = _phi1(v_m, v_l, u_l)
    mid = np.array([v_m, u_m])

    waves: list[Wave] = []
    sigma1 = 2.0 * (v_l**-0.5 - v_m**-0.5)
    if abs(sigma1) > 1e-14:
        if v_m >= v_l:  # 1-rarefaction: v increases, fan of 1-speeds
            lo, hi = 1.0 - v_l**-1.5, 1.0 - v_m**-1.5

            def fan1(xi: float) -> np.ndarray:
                v = (1.0 - xi) ** (-2.0 / 3.0)
                return np.array([v, u_l + 2.0 * (v_l**-0.5 - v**-0.5)])

            waves.append(Wave(1, "rarefaction", lo, hi, sigma1, ul, mid, fan1))
        else:
            s = _shock_speed(1, v_l, v_m)
            waves.append(Wave(1, "shock", s, s, sigma1, ul, mid))

    sigma2 = 2.0 * (v_r**-0.5 - v_m**-0.5)
    if abs(sigma2) > 1e-14:
        if v_r <= v_m:  # 2-rarefaction: v decreases from middle to right
            lo, hi = 1.0 + v_m**-1.5, 1.0 + v_r**-1.5

            def fan2(xi: float) -> np.ndarray:
                v = (xi - 1.0) ** (-2.0 / 3.0)
                return np.array([v, u_r + 2.0 * (v**-0.5 - v_r**-0.5)])

            waves.append(Wave(2, "rarefaction", lo, hi, sigma2, mid, ur, fan2))
        else:
            s = _shock_speed(2, v_m, v_r)
            waves.append(Wave(2, "shock", s, s, sigma2, mid, ur))

    middles = (mid,) if len(waves) == 2 else ()
    return RiemannFan(model, ul, ur, middles=middles, waves=tuple(waves))


def make_psystem() -> FluxModel:
    """2x2 isentropic gas dynamics with pressure ``1/(2 v^2)``, drift 1.

    States are ``(v, u)``.  The flux is ``(v - u, u + 1/(2 v^2))``, whose
    characteristic speeds ``1 -/+ v^(-3/2)`` lie strictly inside ``(0, 2)``
    whenever ``v > 1``.  Entropy ``u^2/2 + 1/(2v)`` is strictly convex for
    ``v > 0`` and its flux ``u/(2 v^2) + entropy`` matches it exactly.
    """

    def flux(w):
        w = np.asarray(w, dtype=float)
        v, u = w[..., 0], w[..., 1]
        _check_no_vacuum(v)
        return np.stack([v - u, u + 0.5 / v**2], axis=-1)

    def jacobian(w):
        w = np.asarray(w, dtype=float)
        v = w[..., 0]
        _check_no_vacuum(v)
        out = np.zeros(w.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 0, 1] = -1.0
        out[..., 1, 0] = -(v**-3.0)
        out[..., 1, 1] = 1.0
        return out

    def eigen(w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        v = w[0]
        _check_no_vacuum(v)
        c = v**-1.5
        lams = np.array([1.0 - c, 1.0 + c])
        norm = np.sqrt(1.0 + c * c)
        # columns: r_1 = (1, c)/|.| (slow family), r_2 = (-1, c)/|.| (fast),
        # oriented so the characteristic speed grows along each eigenvector.
        R = np.array([[1.0, -1.0], [c, c]]) / norm
        L = np.array([[1.0, 1.0 / c], [-1.0, 1.0 / c]]) * (norm / 2.0)
        return lams, R, L

    def char_speed_range(w):
        w = np.asarray(w, dtype=float)
        v = w[..., 0]
        _check_no_vacuum(v)
        c = v**-1.5
        return 1.0 - c, 1.0 + c

    def entropy(w):
        w = np.asarray(w, dtype=float)
        v, u = w[..., 0], w[..., 1]
        _check_no_vacuum(v)
        return 0.5 * u**2 + 0.5 / v

    def entropy_flux(w):
        w = np.asarray(w, dtype=float)
        v, u = w[..., 0], w[..., 1]
        _check_no_vacuum(v)
        return 0.5 * u / v**2 + 0.5 * u**2 + 0.5 / v

    def admissible(w):
        w = np.asarray(w, dtype=float)
        return bool(np.all(w[..., 0] > 1.0))

    def sample_admissible(rng):
        return np.array([rng.uniform(1.05, 6.0), rng.uniform(-2.0, 2.0)])

    return FluxModel(
        name="psystem",
        n_comp=2,
        speed_bounds=(0.0, 2.0),
        flux=flux,
        jacobian=jacobian,
        eigen=eigen,
        char_speed_range=char_speed_range,
        entropy=entropy,
        entropy_flux=entropy_flux,
        admissible=admissible,
        sample_admissible=sample_admissible,
        exact_riemann=_psystem_riemann,
    )


_FACTORIES = {"burgers": make_burgers, "psystem": make_psystem}


def make_model(name: str) -> FluxModel:
    """Build a model from its registry name ('burgers' or 'psystem')."""
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(_FACTORIES)}") from None


# ---------------------------------------------------------------------------
# finite-difference consistency diagnostics


def _fd_gradient(fn: Callable, u: np.ndarray, step: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    grad = np.zeros_like(u)
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = step
        grad[k] = (fn(u + e) - fn(u - e)) / (2.0 * step)
    return grad


def eigen_defect(model: FluxModel, u) -> float:
    """Max deviation from unit right eigenvectors and biorthogonality."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lams, R, L = model.eigen(u)
    d1 = np.abs(np.linalg.norm(R, axis=0) - 1.0).max()
    d2 = np.abs(L @ R - np.eye(model.n_comp)).max()
    # R must actually diagonalise the Jacobian
    d3 = np.abs(model.jacobian(u) @ R - R * lams[None, :]).max()
    return float(max(d1, d2, d3))


def entropy_compat_defect(model: FluxModel, u, step: float = 1e-6) -> float:
    """Relative residual of the entropy/entropy-flux compatibility relation.

    Measures ``| grad(eta) . Df - grad(q) |`` by central differences,
    normalised by ``max(1, |grad(q)|)``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    g_eta = _fd_gradient(model.entropy, u, step)
    g_q = _fd_gradient(model.entropy_flux, u, step)
    resid = g_eta @ model.jacobian(u) - g_q
    return float(np.abs(resid).max() / max(1.0, np.abs(g_q).max()))


def entropy_hessian_min_eig(model: FluxModel, u, step: float = 1e-5) -> float:
    """Smallest eigenvalue of the finite-difference entropy Hessian."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = u.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n); ei[i] = step
            ej = np.zeros(n); ej[j] = step
            H[i, j] = (
                model.entropy(u + ei + ej)
                - model.entropy(u + ei - ej)
                - model.entropy(u - ei + ej)
                + model.entropy(u - ei - ej)
            ) / (4.0 * step**2)
    H = 0.5 * (H + H.T)
    return float(np.linalg.eigvalsh(H).min())
