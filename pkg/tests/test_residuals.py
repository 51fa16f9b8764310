import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.grids import GridFunction, Mesh, SolutionHistory, Trapezoid, total_variation
from artifact.models import FluxModel, make_burgers, make_psystem
from artifact.residuals import (
    GAMMA,
    build_sign_test_function,
    check_time_lipschitz,
    cosine_bump,
    default_eps,
    entropy_residual,
    linear_comparison_diagnostic,
    verify_sign_capture,
    weak_residual,
    write_residual_csv,
)
from artifact.schemes import SchemeConfig, run


def _history(mesh, arrays, dt, scheme="godunov", t0=0.0):
    frames = tuple(GridFunction(mesh, np.asarray(a, dtype=float)) for a in arrays)
    return SolutionHistory(frames, dt, scheme, t0)


def _constant_history(value, n_frames=3, n_cells=40, dt=0.05):
    mesh = Mesh.regular(0.0, 2.0, n_cells)
    arr = np.full((n_cells, np.size(value)), value, dtype=float)
    return _history(mesh, [arr] * n_frames, dt)


@pytest.fixture(scope="module")
def burgers():
    return make_burgers()


@pytest.fixture(scope="module")
def psystem():
    return make_psystem()


@pytest.fixture(scope="module")
def burgers_shock_run(burgers):
    """Entropic 0.8 -> 0.2 step advanced with the upwind scheme."""
    mesh = Mesh.regular(0.0, 2.0, 200)
    u0 = np.where(mesh.centers < 1.0, 0.8, 0.2)[:, None]
    config = SchemeConfig("godunov", mesh.dx, 0.004, 0.2)
    return run(burgers, config, GridFunction(mesh, u0))


class TestCosineBump:
    def test_declared_norms_check_out(self):
        cosine_bump(0.0, 1.0, 0.0, 2.0, amplitude=1.5).validate()

    def test_peak_and_support(self):
        fn = cosine_bump(0.0, 1.0, 0.0, 2.0, amplitude=2.0)
        assert fn.evaluator(0.5, np.array([1.0]))[0] == pytest.approx(2.0, abs=1e-15)
        assert np.all(fn.evaluator(0.5, np.array([-0.3, 2.4])) == 0.0)
        assert np.all(fn.evaluator(1.7, np.array([0.5, 1.0])) == 0.0)
        assert np.all(fn.d_dx(0.5, np.array([-0.3, 2.4])) == 0.0)

    def test_w1inf_is_the_largest_norm(self):
        fn = cosine_bump(0.0, 1.0, 0.4, 0.6)
        # the x-extent is much smaller, so the x-derivative dominates
        assert fn.dx_norm > fn.dt_norm > fn.sup_norm
        assert fn.w1inf == fn.dx_norm

    def test_validate_catches_understated_norm(self):
        fn = cosine_bump(0.0, 1.0, 0.0, 2.0)
        lying = dataclasses.replace(fn, sup_norm=0.5)
        with pytest.raises(ValueError, match="exceeds declared"):
            lying.validate()

    def test_validate_catches_overstated_norm(self):
        fn = cosine_bump(0.0, 1.0, 0.0, 2.0)
        lying = dataclasses.replace(fn, dx_norm=10.0 * fn.dx_norm)
        with pytest.raises(ValueError, match="above the sampled"):
            lying.validate()


class TestDefaultEps:
    def test_coarser_of_dt_dx(self):
        h = _constant_history(0.3, dt=0.01)  # dx = 0.05
        assert default_eps(h) == 0.05
        h = _constant_history(0.3, dt=0.25)
        assert default_eps(h) == 0.25


class TestTimeLipschitz:
    def test_constant_history_gives_zero(self):
        rep = check_time_lipschitz(_constant_history(0.7))
        assert rep.max_ratio == 0.0
        assert rep.n_pairs >= 120

    def test_needs_two_frames(self):
        h = _constant_history(0.7, n_frames=1)
        with pytest.raises(ValueError, match="two frames"):
            check_time_lipschitz(h)

    def test_upwind_burgers_within_flux_lipschitz(self, burgers, burgers_shock_run):
        # |f'(u)| = |u + 1| <= 1.8 on data in [0.2, 0.8]
        rep = check_time_lipschitz(burgers_shock_run)
        assert 0.0 < rep.max_ratio <= 1.8 + 1e-6

    def test_implicit_upwind_burgers_within_flux_lipschitz(self, burgers):
        mesh = Mesh.regular(0.0, 2.0, 200)
        u0 = np.where(mesh.centers < 1.0, 0.8, 0.2)[:, None]
        config = SchemeConfig("backward_euler", mesh.dx, 0.004, 0.1)
        hist = run(burgers, config, GridFunction(mesh, u0))
        rep = check_time_lipschitz(hist)
        assert 0.0 < rep.max_ratio <= 1.8 + 1e-6


def _brute_force_weak(model, history, fn, k_lo, k_hi, n_sub=256):
    """Same quadrature convention as weak_residual, fixed fine time grid."""
    mesh = history.mesh
    xs, dx = mesh.centers, mesh.dx
    n_comp = history.n_comp
    vec = np.zeros(n_comp)
    vec += dx * (history.frames[k_lo].values.T @ np.asarray(fn.evaluator(history.times[k_lo], xs)))
    vec -= dx * (history.frames[k_hi].values.T @ np.asarray(fn.evaluator(history.times[k_hi], xs)))
    for k in range(k_lo, k_hi):
        u = history.frames[k].values
        fu = model.flux(u)
        for s in (np.arange(n_sub) + 0.5) * history.dt / n_sub:
            t = history.times[k] + s
            w = dx * history.dt / n_sub
            vec += w * (u.T @ np.asarray(fn.d_dt(t, xs)))
            vec += w * (fu.T @ np.asarray(fn.d_dx(t, xs)))
    return float(np.linalg.norm(vec))


class TestWeakResidual:
    def test_support_must_fit_mesh(self, burgers):
        h = _constant_history(0.5)  # mesh [0, 2]
        fn = cosine_bump(0.0, 0.1, 1.5, 2.5)
        with pytest.raises(ValueError, match="beyond the mesh"):
            weak_residual(burgers, h, fn, 0.0, 0.05)

    def test_frame_order_enforced(self, burgers):
        h = _constant_history(0.5)
        fn = cosine_bump(0.0, 0.1, 0.5, 1.5)
        with pytest.raises(ValueError, match="later frame"):
            weak_residual(burgers, h, fn, 0.05, 0.05)

    def test_matches_brute_force_scalar(self, burgers):
        mesh = Mesh.regular(0.0, 1.0, 4)
        arrays = [
            [[0.2], [1.0], [-0.5], [0.3]],
            [[0.1], [0.8], [-0.2], [0.4]],
        ]
        h = _history(mesh, arrays, dt=0.25)
        fn = cosine_bump(0.0, 0.25, 0.05, 0.95)
        rep = weak_residual(burgers, h, fn, 0.0, 0.25)
        ref = _brute_force_weak(burgers, h, fn, 0, 1)
        assert rep.residual == pytest.approx(ref, abs=0.05 * rep.normalizer + 1e-10)
        assert rep.normalizer == pytest.approx(
            rep.eps * fn.w1inf * 0.25 * max(total_variation(f) for f in h.frames)
        )

    def test_matches_brute_force_system(self, psystem):
        mesh = Mesh.regular(0.0, 1.0, 5)
        rng = np.random.default_rng(3)
        arrays = [rng.uniform([1.2, -0.5], [3.0, 0.5], size=(5, 2)) for _ in range(3)]
        h = _history(mesh, arrays, dt=0.1)
        fn = cosine_bump(0.0, 0.2, 0.05, 0.95)
        rep = weak_residual(psystem, h, fn, 0.0, 0.2)
        ref = _brute_force_weak(psystem, h, fn, 0, 2)
        assert rep.residual == pytest.approx(ref, abs=0.05 * rep.normalizer + 1e-10)

    def test_constant_state_leaves_only_quadrature_noise(self, burgers):
        h = _constant_history(0.7, n_frames=3, n_cells=40, dt=0.05)
        fn = cosine_bump(0.0, 0.1, 0.5, 1.5)
        rep = weak_residual(burgers, h, fn, 0.0, 0.1)
        assert rep.residual < 0.02
        assert rep.normalizer == 0.0
        assert math.isinf(rep.ratio)

    def test_zero_residual_has_zero_ratio(self, burgers):
        h = _constant_history(0.0, n_frames=2, n_cells=20, dt=0.05)
        fn = cosine_bump(0.0, 0.05, 0.5, 1.5)
        rep = weak_residual(burgers, h, fn, 0.0, 0.05)
        assert rep.residual == 0.0 and rep.ratio == 0.0

    def test_upwind_shock_ratio_is_modest(self, burgers, burgers_shock_run):
        fn = cosine_bump(0.0, 0.2, 0.5, 1.7)
        rep = weak_residual(burgers, burgers_shock_run, fn, 0.0, 0.2)
        assert rep.residual > 0.0
        assert rep.ratio < 5.0

    def test_csv_round_trip(self, tmp_path, burgers, burgers_shock_run):
        fn = cosine_bump(0.0, 0.2, 0.5, 1.7)
        reports = [
            weak_residual(burgers, burgers_shock_run, fn, 0.0, 0.1),
            weak_residual(burgers, burgers_shock_run, fn, 0.1, 0.2),
        ]
        path = tmp_path / "residuals.csv"
        write_residual_csv(reports, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "tau,tau_prime,phi_id,residual,normalizer,ratio"
        first = lines[1].split(",")
        assert float(first[3]) == reports[0].residual
        assert float(first[5]) == reports[0].ratio


def _exact_step_history(mesh, left, right, speed, t_final, dt):
    """Frames sampled from an exact traveling step u(t, x)."""
    frames = []
    n = int(round(t_final / dt))
    for k in range(n + 1):
        pos = 1.0 + speed * k * dt
        vals = np.where(mesh.centers < pos, left, right)[:, None]
        frames.append(GridFunction(mesh, vals))
    return SolutionHistory(tuple(frames), dt, "godunov")


class TestEntropyResidual:
    def test_rejects_signed_test_function(self, burgers, burgers_shock_run):
        fn = cosine_bump(0.0, 0.2, 0.5, 1.7, amplitude=-1.0)
        with pytest.raises(ValueError, match="not nonnegative"):
            entropy_residual(burgers, burgers_shock_run, fn, 0.0, 0.1)

    def test_upwind_shock_dissipates(self, burgers, burgers_shock_run):
        fn = cosine_bump(0.0, 0.2, 0.5, 1.7)
        rep = entropy_residual(burgers, burgers_shock_run, fn, 0.0, 0.2)
        assert rep.residual >= -2.0 * rep.normalizer
        assert math.isfinite(rep.ratio)

    def test_entropic_step_produces_positive_defect(self, burgers):
        # 0.8 -> 0.2 travelling at the jump speed 1.5 dissipates entropy
        mesh = Mesh.regular(0.0, 2.0, 800)
        h = _exact_step_history(mesh, 0.8, 0.2, 1.5, 0.2, 0.00125)
        fn = cosine_bump(-0.3, 0.5, 0.6, 1.6)
        rep = entropy_residual(burgers, h, fn, 0.0, 0.2)
        assert rep.residual > 2.0 * rep.normalizer

    def test_expansion_step_produces_negative_defect(self, burgers):
        # the reversed jump is entropy-violating: the signed defect must
        # come out clearly negative, beyond the measurement scale
        mesh = Mesh.regular(0.0, 2.0, 800)
        h = _exact_step_history(mesh, 0.2, 0.8, 1.5, 0.2, 0.00125)
        fn = cosine_bump(-0.3, 0.5, 0.6, 1.6)
        rep = entropy_residual(burgers, h, fn, 0.0, 0.2)
        assert rep.residual < -2.0 * rep.normalizer
        assert rep.residual > -0.02


class TestBuildSignTestFunction:
    def test_shape_validation(self):
        with pytest.raises(ValueError, match="breakpoints"):
            build_sign_test_function([0.0, 1.0], [1.0, -1.0], 1e-3)
        with pytest.raises(ValueError, match="strictly increasing"):
            build_sign_test_function([0.0, 0.5, 0.5, 1.0], [1.0, 1.0, 1.0], 1e-3)

    def test_wide_single_run(self):
        eps = 1e-3
        w = eps**GAMMA
        prof = build_sign_test_function([0.0, 1.0], [3.5], eps)
        assert np.allclose(prof.knots, [0.0, w, 1.0 - w, 1.0], atol=1e-15)
        assert np.allclose(prof.vals, [0.0, 1.0, 1.0, 0.0], atol=0.0)
        assert prof.lipschitz == pytest.approx(eps ** (-GAMMA), rel=1e-13)
        assert prof(np.array([0.5 * w]))[0] == pytest.approx(0.5, abs=1e-13)
        assert prof(np.array([-0.1, 1.1])).tolist() == [0.0, 0.0]

    def test_narrow_run_peaks_below_one(self):
        eps = 1e-3
        w = eps**GAMMA
        prof = build_sign_test_function([0.0, 0.01], [-2.0], eps)
        peak = prof(np.array([0.005]))[0]
        assert peak == pytest.approx(-0.01 / (2.0 * w), rel=1e-12)
        assert abs(peak) < 1.0

    def test_two_runs_oppose_and_meet_at_zero(self):
        eps = 1e-3
        prof = build_sign_test_function([0.0, 0.3, 1.0], [2.0, -0.5], eps)
        xs = np.linspace(0.0, 1.0, 2001)
        phi = prof(xs)
        g = np.where(xs < 0.3, 2.0, -0.5)
        assert np.all(phi * g >= -1e-15)
        assert prof(np.array([0.3]))[0] == 0.0
        assert np.abs(phi).max() <= 1.0 + 1e-15

    def test_zero_pieces_separate_tents(self):
        eps = 1e-3
        prof = build_sign_test_function([0.0, 0.3, 0.6, 1.0], [1.0, 0.0, 1.0], eps)
        xs = np.linspace(0.31, 0.59, 101)
        assert np.all(prof(xs) == 0.0)
        assert prof(np.array([0.45]))[0] == 0.0
        assert prof.lipschitz > 0.0

    def test_all_zero_data_gives_zero_profile(self):
        prof = build_sign_test_function([0.0, 0.4, 1.0], [0.0, 0.0], 1e-3)
        assert prof.lipschitz == 0.0
        assert np.all(prof(np.linspace(-1, 2, 50)) == 0.0)

    def test_slope_never_exceeds_declared_lipschitz(self):
        eps = 4e-4
        prof = build_sign_test_function(
            [0.0, 0.02, 0.3, 0.31, 0.7, 1.0], [1.0, -0.2, 0.4, 0.0, -3.0], eps
        )
        slopes = np.abs(np.diff(prof.vals) / np.diff(prof.knots))
        assert slopes.max() <= prof.lipschitz * (1.0 + 1e-12)

    @given(
        st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=12),
        st.floats(1e-6, 1e-2),
    )
    @settings(max_examples=60, deadline=None)
    def test_profile_properties_hold_generically(self, values, eps):
        breaks = np.linspace(0.0, 1.0, len(values) + 1)
        prof = build_sign_test_function(breaks, values, eps)
        xs = np.linspace(0.0, 1.0, 701)
        phi = prof(xs)
        idx = np.clip(np.searchsorted(breaks, xs, side="right") - 1, 0, len(values) - 1)
        g = np.asarray(values)[idx]
        assert np.all(phi * g >= -1e-12)
        assert np.abs(phi).max() <= 1.0 + 1e-12


class TestVerifySignCapture:
    def test_frozen_single_sign_case(self):
        rep = verify_sign_capture([0.0, 1.0], [1.0], 1e-3)
        assert rep.branch == "interior"
        assert rep.lhs == pytest.approx(0.98, abs=1e-12)
        assert rep.rhs == pytest.approx(0.99, abs=1e-12)
        assert rep.holds

    def test_narrow_single_sign_interval_is_rejected(self):
        with pytest.raises(ValueError, match="too narrow"):
            verify_sign_capture([0.0, 0.015], [1.0], 1e-3)

    def test_frozen_sign_change_case(self):
        rep = verify_sign_capture([0.0, 0.5, 1.0], [1.0, -1.0], 1e-3)
        assert rep.branch == "variation"
        assert rep.lhs == pytest.approx(1.0, abs=1e-12)
        assert rep.rhs == pytest.approx(0.98 + 2.0 * (1e-3**GAMMA) * 2.0, abs=1e-12)
        assert rep.holds

    def test_data_with_zero_pieces_use_variation_branch(self):
        rep = verify_sign_capture([0.0, 0.3, 0.6, 1.0], [1.0, 0.0, 2.0], 1e-3)
        assert rep.branch == "variation"
        assert rep.holds

    def test_randomized_bounds_never_fail(self):
        rng = np.random.default_rng(42)
        for trial in range(300):
            n_pieces = int(rng.integers(1, 40))
            length = float(rng.uniform(0.5, 3.0))
            breaks = np.concatenate([[0.0], np.sort(rng.uniform(0.0, length, n_pieces - 1)), [length]])
            breaks = np.unique(breaks)
            values = rng.uniform(-1.0, 1.0, breaks.size - 1)
            if trial % 3 == 0:
                values = np.abs(values) + 1e-6  # strictly one-signed batch
            if trial % 7 == 0:
                values[rng.integers(0, values.size)] = 0.0
            eps = float(10.0 ** rng.uniform(-6, -2))
            rep = verify_sign_capture(breaks, values, eps)
            assert rep.holds, (trial, rep.lhs, rep.rhs)


def _symmetric_system_model() -> FluxModel:
    """Two-field model with constant symmetric Jacobian (speeds 0.75, 1.25)."""
    A = np.array([[1.0, 0.25], [0.25, 1.0]])
    lams = np.array([0.75, 1.25])
    R = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)
    L = R.T.copy()

    def flux(u):
        return np.asarray(u, dtype=float) @ A.T

    def jacobian(u):
        u = np.asarray(u)
        return np.broadcast_to(A, u.shape[:-1] + (2, 2)).copy()

    return FluxModel(
        name="burgers",
        n_comp=2,
        speed_bounds=(0.7, 1.3),
        flux=flux,
        jacobian=jacobian,
        eigen=lambda u: (lams.copy(), R.copy(), L.copy()),
        char_speed_range=lambda u: (
            np.full(np.asarray(u).shape[:-1], 0.75),
            np.full(np.asarray(u).shape[:-1], 1.25),
        ),
        entropy=lambda u: 0.5 * np.sum(np.asarray(u) ** 2, axis=-1),
        entropy_flux=lambda u: 0.5 * np.einsum("...i,ij,...j->...", np.asarray(u), A, np.asarray(u)),
        admissible=lambda u: True,
        sample_admissible=lambda rng: rng.uniform(-1, 1, size=2),
    )


class TestLinearComparison:
    def test_constant_history_is_reproduced_exactly(self, psystem):
        mesh = Mesh.regular(0.0, 1.0, 50)
        vals = np.tile([2.0, 0.0], (50, 1))
        h = _history(mesh, [vals, vals], dt=0.05)
        trap = Trapezoid(0.0, 0.05, 0.1, 0.9, 0.0, 0.0, inset=0.01)
        rep = linear_comparison_diagnostic(psystem, h, trap)
        assert rep.value == 0.0
        assert rep.kappa == 0.0
        assert rep.bound > 0.0
        assert rep.ratio == 0.0

    def test_exact_linear_transport_matches_to_sampling_error(self):
        model = _symmetric_system_model()
        lams = np.array([0.75, 1.25])
        R = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)
        L = R.T
        mesh = Mesh.regular(0.0, 1.0, 500)
        dt = 0.0375

        def u0(x):
            x = np.asarray(x)
            out = np.empty(x.shape + (2,))
            out[...] = [-0.3, 0.1]
            out[x < 0.7] = [0.2, 0.6]
            out[x < 0.4] = [1.0, 0.0]
            return out

        def exact(x, t):
            acc = np.zeros(np.asarray(x).shape + (2,))
            for i in range(2):
                acc += np.outer(u0(np.asarray(x) - lams[i] * t) @ L[i], R[:, i]).reshape(acc.shape)
            return acc

        frames = [
            GridFunction(mesh, u0(mesh.centers)),
            GridFunction(mesh, exact(mesh.centers, dt)),
        ]
        h = SolutionHistory(tuple(frames), dt, "godunov")
        trap = Trapezoid(0.0, dt, 0.2, 0.85, 0.0, 0.0, inset=0.0)
        rep = linear_comparison_diagnostic(model, h, trap)
        tv0 = total_variation(frames[0])
        assert 0.0 < rep.value <= 2.0 * mesh.dx * tv0
        assert math.isfinite(rep.ratio)

    def test_edge_outside_mesh_is_rejected(self, psystem):
        mesh = Mesh.regular(0.0, 1.0, 20)
        vals = np.tile([2.0, 0.0], (20, 1))
        h = _history(mesh, [vals, vals], dt=0.05)
        trap = Trapezoid(0.0, 0.05, 2.0, 3.0, 0.0, 0.0, inset=0.0)
        with pytest.raises(ValueError, match="meet the mesh"):
            linear_comparison_diagnostic(psystem, h, trap)
