"""Configuration-driven pipeline: model -> scheme -> residuals -> certificate.

The command line has three entry points:

* ``artifact run --config run.ini`` — run the scheme, check residuals,
  post-process the history, and write snapshots, flags, traces, covers,
  the kappa series, a residual report, and the certificate JSON.
* ``artifact sweep --config run.ini --dx 0.004 0.002`` — rerun the same
  configuration on several meshes and tabulate true error, bound, and
  their ratio against the finest run.
* ``artifact verify --config run.ini`` — residual suite only.

Configuration is a flat INI file whose sections mirror the type names
([RunConfig], [SchemeConfig], [PostprocessParams], [ConstantsConfig]).
Unknown sections or keys are hard errors: a silently ignored typo in,
say, ``sigma_min`` would invalidate the certificate.

Exit status: 0 on success, 2 when the total-variation gate stops the
estimate (the certificate is still written, marked "no estimate"), 1 on
any hard error (bad config, scheme failure, I/O trouble).

All CSV/JSON data files are byte-deterministic for a given config; run
metadata (timestamp, package version) goes to a separate manifest file.
"""

from __future__ import annotations

import argparse
import bisect
import configparser
import csv
import dataclasses
import datetime
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from artifact.certify import (
    ConstantsConfig,
    assemble,
    measure_true_error,
    write_certificate_json,
)
from artifact.grids import GridFunction, Mesh, SolutionHistory
from artifact.models import FluxModel, make_burgers, make_psystem
from artifact.postprocess import (
    PostprocessParams,
    kappa_series,
    process_strips,
    write_covers_csv,
    write_flags_csv,
    write_kappa_csv,
    write_traces_csv,
)
from artifact.residuals import (
    LipschitzReport,
    ResidualReport,
    check_time_lipschitz,
    cosine_bump,
    entropy_residual,
    weak_residual,
    write_residual_csv,
)
from artifact.schemes import SchemeConfig, run

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "run_pipeline",
    "convergence_sweep",
    "run_verify",
    "residual_suite",
    "main",
    "OUTPUT_DIR_ENV",
]

#: Environment variable that overrides the configured output directory.
OUTPUT_DIR_ENV = "ARTIFACT_OUTPUT_DIR"

_MODELS = {"burgers": make_burgers, "psystem": make_psystem}
_N_COMP = {"burgers": 1, "psystem": 2}

#: Two-break Riemann data (2, 3, 1 in the first component, 0 in the
#: second) on a window wide enough that no wave reaches the boundary by
#: t = 1.5 with speeds bounded by 2: from the last break at 0.5 the
#: influence cone stops at 3.5 < 4.5.
_PRESETS = {
    "double-riemann": dict(
        model="psystem",
        states=((2.0, 0.0), (3.0, 0.0), (1.0, 0.0)),
        breaks=(0.0, 0.5),
        x_min=-1.0,
        x_max=4.5,
    )
}


class ConfigError(ValueError):
    """A configuration file could not be read or does not make sense."""


@dataclass(frozen=True)
class RunConfig:
    """Fully parsed and validated pipeline configuration."""

    model: str
    initial_data: str
    states: tuple[tuple[float, ...], ...]
    breaks: tuple[float, ...]
    x_min: float
    x_max: float
    output_dir: str
    snapshot_stride: int
    reference_refine: int
    residual_suite: bool
    scheme: SchemeConfig
    postprocess: PostprocessParams
    constants: ConstantsConfig
    # the raw [PostprocessParams] entries (minus eps), kept so sweeps can
    # rebuild the params around a different mesh resolution
    pp_raw: tuple[tuple[str, float], ...]


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


_RUN_KEYS = {
    "model",
    "initial_data",
    "pieces",
    "x_min",
    "x_max",
    "output_dir",
    "snapshot_stride",
    "reference_refine",
    "residual_suite",
}
_SCHEME_KEYS = {
    "scheme_id",
    "dx",
    "dt",
    "t_final",
    "cfl_guard",
    "smoothing_delta",
    "newton_tol",
    "newton_max_iter",
}
_PP_KEYS = {
    "eps",
    "sigma_flag",
    "k_flag",
    "kappa_prime",
    "sigma_min",
    "tv_cap",
    "lambda_minus",
    "lambda_plus",
    "h",
    "rho",
    "delta",
}
_CONST_KEYS = {"c_prime", "c_dprime", "k1", "l0"}
_SECTIONS = {
    "RunConfig": _RUN_KEYS,
    "SchemeConfig": _SCHEME_KEYS,
    "PostprocessParams": _PP_KEYS,
    "ConstantsConfig": _CONST_KEYS,
}


def _float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from None


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} must be an integer, got {raw!r}"
        ) from None


def _bool(section: str, key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{section}] {key} must be a boolean, got {raw!r}")


def _require(section: dict, name: str, key: str) -> str:
    if key not in section:
        raise ConfigError(f"[{name}] is missing the required key '{key}'")
    return section[key]


def _parse_pieces(raw: str) -> tuple[tuple[tuple[float, ...], ...], tuple[float, ...]]:
    """Parse ``state ; break : state ; break : state ...``.

    The first chunk is the leftmost constant state; every later chunk
    moves to a new state at its break point.
    """
    chunks = [c.strip() for c in raw.split(";") if c.strip()]
    if not chunks:
        raise ConfigError("pieces must list at least one constant state")
    if ":" in chunks[0]:
        raise ConfigError(
            "the first piece is the leftmost state and takes no break point"
        )
    states = [tuple(float(v) for v in chunks[0].split())]
    breaks: list[float] = []
    for chunk in chunks[1:]:
        if ":" not in chunk:
            raise ConfigError(f"piece {chunk!r} needs the form 'x_break : state'")
        left, right = chunk.split(":", 1)
        try:
            breaks.append(float(left))
            states.append(tuple(float(v) for v in right.split()))
        except ValueError:
            raise ConfigError(f"piece {chunk!r} has a non-numeric entry") from None
    if any(not s for s in states):
        raise ConfigError("every piece needs at least one state component")
    if len({len(s) for s in states}) != 1:
        raise ConfigError("all pieces must have the same number of components")
    if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
        raise ConfigError("piece break points must be strictly increasing")
    return tuple(states), tuple(breaks)


def load_config(path) -> RunConfig:
    """Read and validate an INI run configuration."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc

    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{name}]; expected {sorted(_SECTIONS)}"
            )
        for key in parser[name]:
            if key not in _SECTIONS[name]:
                raise ConfigError(f"unknown key '{key}' in [{name}]")
    for name in ("RunConfig", "SchemeConfig", "PostprocessParams"):
        if name not in parser:
            raise ConfigError(f"missing required section [{name}]")

    run_sec = dict(parser["RunConfig"])
    scheme_sec = dict(parser["SchemeConfig"])
    pp_sec = dict(parser["PostprocessParams"])
    const_sec = dict(parser["ConstantsConfig"]) if "ConstantsConfig" in parser else {}

    model = _require(run_sec, "RunConfig", "model")
    if model not in _MODELS:
        raise ConfigError(f"unknown model {model!r}; expected {sorted(_MODELS)}")
    initial_data = _require(run_sec, "RunConfig", "initial_data")

    if initial_data in _PRESETS:
        preset = _PRESETS[initial_data]
        if "pieces" in run_sec:
            raise ConfigError("pieces only applies to initial_data = piecewise")
        if model != preset["model"]:
            raise ConfigError(
                f"preset {initial_data!r} provides {preset['model']} data, "
                f"not {model}"
            )
        states, breaks = preset["states"], preset["breaks"]
        x_min = _float("RunConfig", "x_min", run_sec.get("x_min", str(preset["x_min"])))
        x_max = _float("RunConfig", "x_max", run_sec.get("x_max", str(preset["x_max"])))
    elif initial_data == "piecewise":
        states, breaks = _parse_pieces(_require(run_sec, "RunConfig", "pieces"))
        x_min = _float("RunConfig", "x_min", _require(run_sec, "RunConfig", "x_min"))
        x_max = _float("RunConfig", "x_max", _require(run_sec, "RunConfig", "x_max"))
    else:
        options = sorted(_PRESETS) + ["piecewise"]
        raise ConfigError(f"unknown initial_data {initial_data!r}; expected {options}")

    if len(states[0]) != _N_COMP[model]:
        raise ConfigError(
            f"{model} states have {_N_COMP[model]} component(s); "
            f"the initial data provides {len(states[0])}"
        )
    if not x_max > x_min:
        raise ConfigError(f"x_max must exceed x_min, got [{x_min}, {x_max}]")

    output_dir = _require(run_sec, "RunConfig", "output_dir")
    snapshot_stride = _int(
        "RunConfig", "snapshot_stride", run_sec.get("snapshot_stride", "0")
    )
    if snapshot_stride < 0:
        raise ConfigError("snapshot_stride must be >= 0 (0 = first and last only)")
    reference_refine = _int(
        "RunConfig", "reference_refine", run_sec.get("reference_refine", "0")
    )
    if reference_refine < 0:
        raise ConfigError("reference_refine must be >= 0 (0 = skip true error)")
    residual_toggle = _bool(
        "RunConfig", "residual_suite", run_sec.get("residual_suite", "true")
    )

    scheme_kwargs = {}
    for key in ("dx", "dt", "t_final"):
        scheme_kwargs[key] = _float(
            "SchemeConfig", key, _require(scheme_sec, "SchemeConfig", key)
        )
    for key in ("cfl_guard", "smoothing_delta", "newton_tol"):
        if key in scheme_sec:
            scheme_kwargs[key] = _float("SchemeConfig", key, scheme_sec[key])
    if "newton_max_iter" in scheme_sec:
        scheme_kwargs["newton_max_iter"] = _int(
            "SchemeConfig", "newton_max_iter", scheme_sec["newton_max_iter"]
        )
    try:
        scheme = SchemeConfig(
            scheme_id=_require(scheme_sec, "SchemeConfig", "scheme_id"),
            **scheme_kwargs,
        )
    except ValueError as exc:
        raise ConfigError(f"[SchemeConfig] {exc}") from exc

    span = x_max - x_min
    n_cells = round(span / scheme.dx)
    if n_cells < 2 or abs(n_cells * scheme.dx - span) > 1e-9 * scheme.dx:
        raise ConfigError(
            f"dx = {scheme.dx} does not tile the window [{x_min}, {x_max}]"
        )

    try:
        constants = ConstantsConfig(
            **{k: _float("ConstantsConfig", k, v) for k, v in const_sec.items()}
        )
    except ValueError as exc:
        raise ConfigError(f"[ConstantsConfig] {exc}") from exc

    pp_raw = []
    for key in sorted(pp_sec):
        if key == "eps":
            continue
        pp_raw.append((key, _float("PostprocessParams", key, pp_sec[key])))
    derived_eps = max(scheme.dx, scheme.dt)
    if "eps" in pp_sec:
        given = _float("PostprocessParams", "eps", pp_sec["eps"])
        if abs(given - derived_eps) > 1e-12 * derived_eps:
            raise ConfigError(
                f"eps must equal max(dx, dt) = {derived_eps!r}, got {given!r}"
            )
    postprocess = _build_postprocess(tuple(pp_raw), derived_eps, constants.k1)

    return RunConfig(
        model=model,
        initial_data=initial_data,
        states=states,
        breaks=breaks,
        x_min=x_min,
        x_max=x_max,
        output_dir=output_dir,
        snapshot_stride=snapshot_stride,
        reference_refine=reference_refine,
        residual_suite=residual_toggle,
        scheme=scheme,
        postprocess=postprocess,
        constants=constants,
        pp_raw=tuple(pp_raw),
    )


def _build_postprocess(
    pp_raw: tuple[tuple[str, float], ...], eps: float, k1: float
) -> PostprocessParams:
    kwargs = dict(pp_raw)
    for key in ("sigma_flag", "k_flag", "kappa_prime", "sigma_min", "tv_cap",
                "lambda_minus", "lambda_plus"):
        if key not in kwargs:
            raise ConfigError(f"[PostprocessParams] is missing the required key '{key}'")
    try:
        return PostprocessParams(eps=eps, k1=k1, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"[PostprocessParams] {exc}") from exc


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------


def _initial_condition(config: RunConfig):
    states, breaks = config.states, list(config.breaks)

    def ic(x: float):
        return states[bisect.bisect_right(breaks, x)]

    return ic


def _build_mesh(config: RunConfig, dx: float) -> Mesh:
    span = config.x_max - config.x_min
    n_cells = round(span / dx)
    if n_cells < 2 or abs(n_cells * dx - span) > 1e-9 * dx:
        raise ConfigError(
            f"dx = {dx} does not tile the window [{config.x_min}, {config.x_max}]"
        )
    return Mesh.regular(config.x_min, config.x_max, n_cells)


def _run_history(
    config: RunConfig, model: FluxModel, dx: Optional[float] = None
) -> tuple[SolutionHistory, PostprocessParams]:
    """Run the configured scheme, optionally on a rescaled mesh.

    When ``dx`` differs from the configured one, dt is scaled with it
    (preserving the CFL number) and the resolution parameter eps and its
    derived widths are rebuilt around the new mesh.
    """
    if dx is None or dx == config.scheme.dx:
        scheme = config.scheme
        params = config.postprocess
    else:
        scale = dx / config.scheme.dx
        scheme = dataclasses.replace(config.scheme, dx=dx, dt=config.scheme.dt * scale)
        params = _build_postprocess(
            config.pp_raw, max(scheme.dx, scheme.dt), config.constants.k1
        )
    mesh = _build_mesh(config, scheme.dx)
    g0 = GridFunction.sample(mesh, _initial_condition(config))
    return run(_MODELS[config.model](), scheme, g0), params


def residual_suite(
    model: FluxModel, history: SolutionHistory, n_bumps: int = 3
) -> tuple[list[ResidualReport], LipschitzReport]:
    """Deterministic residual measurements over a fixed family of bumps.

    Each bump spans the full run in time and a third of the domain in
    space; the weak-form and entropy residuals are measured against the
    same geometry, and a time-Lipschitz scan rounds out the report.
    """
    mesh = history.mesh
    t0, t1 = float(history.t0), float(history.t_final)
    width = (mesh.x_max - mesh.x_min) / (n_bumps + 1)
    reports: list[ResidualReport] = []
    for k in range(n_bumps):
        x_lo = mesh.x_min + k * width
        box = (t0, t1, x_lo, x_lo + 2 * width)
        weak_fn = cosine_bump(*box, name=f"bump{k}.weak")
        entropy_fn = cosine_bump(*box, name=f"bump{k}.entropy")
        reports.append(weak_residual(model, history, weak_fn, t0, t1))
        reports.append(entropy_residual(model, history, entropy_fn, t0, t1))
    lipschitz = check_time_lipschitz(history)
    return reports, lipschitz


_fmt = "%.17g".__mod__


def _write_snapshots(history: SolutionHistory, stride: int, path) -> None:
    """Selected frames as ``t,x,u0[,u1]`` rows.

    ``stride`` 0 keeps only the first and last frame; a positive stride
    keeps every stride-th frame plus the final one.
    """
    n = history.n_frames
    if stride == 0:
        picks = sorted({0, n - 1})
    else:
        picks = sorted(set(range(0, n, stride)) | {n - 1})
    times = history.times
    centers = history.mesh.centers
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x"] + [f"u{i}" for i in range(history.n_comp)])
        for k in picks:
            vals = history.frames[k].values
            for i, x in enumerate(centers):
                writer.writerow(
                    [_fmt(float(times[k])), _fmt(float(x))]
                    + [_fmt(float(v)) for v in vals[i]]
                )


def _write_manifest(path, config_path, command: str) -> None:
    try:
        from importlib.metadata import version

        pkg = f"artifact {version('artifact')}"
    except Exception:
        pkg = "artifact (uninstalled)"
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    with open(path, "w") as fh:
        fh.write(f"command: {command}\n")
        fh.write(f"config: {os.path.abspath(config_path)}\n")
        fh.write(f"created: {stamp}\n")
        fh.write(f"package: {pkg}\n")


def _resolve_output_dir(config: RunConfig) -> Path:
    out = Path(os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_pipeline(config: RunConfig, config_path="run.ini") -> int:
    """Full pipeline; returns the process exit status (0 or 2)."""
    out = _resolve_output_dir(config)
    model = _MODELS[config.model]()
    history, params = _run_history(config, model)
    _write_snapshots(history, config.snapshot_stride, out / "snapshots.csv")

    if config.residual_suite:
        reports, lipschitz = residual_suite(model, history)
        write_residual_csv(reports, out / "residuals.csv")
        entropy_bad = [
            r
            for r in reports
            if r.phi_id.endswith(".entropy") and r.residual < -2.0 * r.normalizer
        ]
        print(
            f"residuals: {len(reports)} measurements, "
            f"time-Lipschitz ratio {lipschitz.max_ratio:.3g}"
        )
        for r in entropy_bad:
            print(
                f"warning: entropy residual {r.residual:.3g} below "
                f"-2x normalizer for {r.phi_id}",
                file=sys.stderr,
            )

    result = process_strips(history, params)
    write_flags_csv(result.flag_sets, out / "flags.csv")
    write_traces_csv(result.traces, out / "traces.csv")
    write_covers_csv(result.covers, out / "covers.csv")
    write_kappa_csv(kappa_series(result.covers), out / "kappa.csv")

    cert = assemble(history, result.covers, params, config.constants)
    true_error = None
    if result.ok and config.reference_refine > 0:
        reference, _ = _run_history(
            config, model, dx=config.scheme.dx / config.reference_refine
        )
        true_error = measure_true_error(history, reference)
    write_certificate_json(cert, out / "certificate.json", true_error=true_error)
    _write_manifest(out / "run_manifest.txt", config_path, "run")

    if not result.ok:
        print(
            f"variation gate failed: sup TV {result.sup_tv:.6g} exceeds the cap "
            f"{params.tv_cap:.6g}; certificate written as 'no estimate'",
            file=sys.stderr,
        )
        return 2
    accepted = len(result.accepted_traces())
    print(
        f"certificate: bound {cert.bound:.6g} "
        f"(smooth {cert.term_smooth:.6g}, shock {cert.term_shock:.6g}), "
        f"{accepted} traced shock(s) over {cert.nu} strip(s)"
    )
    if true_error is not None:
        print(f"true error vs refined reference: {true_error:.6g}")
    print(f"wrote {out}")
    return 0


def convergence_sweep(
    config: RunConfig, dxs: Sequence[float], config_path="run.ini"
) -> list[dict]:
    """Run the configuration across several meshes and tabulate the trend.

    The finest listed mesh (further refined by ``reference_refine`` when
    that is set) serves as the reference for true errors.  Returns the
    table rows and writes ``sweep.csv``.
    """
    if len(dxs) < 2:
        raise ConfigError("need at least two meshes to sweep")
    if len(set(dxs)) != len(dxs):
        raise ConfigError("meshes must differ")
    out = _resolve_output_dir(config)
    model = _MODELS[config.model]()

    ref_dx = min(dxs)
    if config.reference_refine > 0:
        ref_dx /= config.reference_refine
    reference, _ = _run_history(config, model, dx=ref_dx)

    rows = []
    for dx in sorted(dxs, reverse=True):
        history, params = _run_history(config, model, dx=dx)
        result = process_strips(history, params)
        cert = assemble(history, result.covers, params, config.constants)
        true_error = measure_true_error(history, reference)
        ratio = (
            true_error / cert.bound
            if cert.bound is not None and cert.bound > 0
            else None
        )
        rows.append(
            {
                "dx": dx,
                "dt": history.dt,
                "eps": params.eps,
                "h": params.h,
                "nu": cert.nu,
                "sup_tv": cert.sup_tv,
                "n_traced": sum(cert.traced_counts),
                "kappa_max": max(cert.kappa, default=0.0),
                "term_smooth": cert.term_smooth,
                "term_shock": cert.term_shock,
                "bound": cert.bound,
                "true_error": true_error,
                "ratio": ratio,
            }
        )

    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(rows[0])
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    ""
                    if row[k] is None
                    else (str(row[k]) if isinstance(row[k], int) else _fmt(row[k]))
                    for k in header
                ]
            )
    _write_manifest(out / "run_manifest.txt", config_path, "sweep")
    for row in rows:
        bound = "-" if row["bound"] is None else f"{row['bound']:.6g}"
        print(f"dx {row['dx']:.6g}: true error {row['true_error']:.6g}, bound {bound}")
    return rows


def run_verify(config: RunConfig, config_path="run.ini") -> int:
    """Residual suite only: run the scheme and write the residual report."""
    out = _resolve_output_dir(config)
    model = _MODELS[config.model]()
    history, _ = _run_history(config, model)
    reports, lipschitz = residual_suite(model, history)
    write_residual_csv(reports, out / "residuals.csv")
    _write_manifest(out / "run_manifest.txt", config_path, "verify")
    weak = [r for r in reports if r.phi_id.endswith(".weak")]
    entropy = [r for r in reports if r.phi_id.endswith(".entropy")]
    print(f"weak-form residual ratios: max {max(r.ratio for r in weak):.3g}")
    floor = min(
        (r.residual / r.normalizer if r.normalizer > 0 else 0.0) for r in entropy
    )
    print(f"entropy residual / normalizer: min {floor:.3g} (should stay above -2)")
    print(f"time-Lipschitz ratio: {lipschitz.max_ratio:.3g}")
    print(f"wrote {out / 'residuals.csv'}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="artifact",
        description="A-posteriori L1 error certification for 1D conservation laws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("run", "full pipeline: scheme, residuals, post-processing, certificate"),
        ("sweep", "rerun on several meshes and tabulate error vs bound"),
        ("verify", "residual suite only"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="INI configuration file")
        if name == "sweep":
            p.add_argument(
                "--dx",
                required=True,
                nargs="+",
                help="mesh widths to sweep (space- or comma-separated)",
            )
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.command == "run":
            return run_pipeline(config, args.config)
        if args.command == "sweep":
            dxs = []
            for token in args.dx:
                for part in token.split(","):
                    if part:
                        dxs.append(_float("sweep", "--dx", part))
            convergence_sweep(config, dxs, args.config)
            return 0
        return run_verify(config, args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
