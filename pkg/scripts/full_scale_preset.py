#!/usr/bin/env python3
"""Full-scale double-Riemann run: the production-resolution counterpart of the
desk-scale acceptance test.

Runs the p-system preset at dx = 5e-4, dt = 2.5e-4 (an 11000-cell mesh and
6000 time steps), post-processes it with the same tracing parameters the
acceptance suite pins at desk scale, and writes the certificate plus the
per-strip kappa/trace tables.  Takes a few minutes and a few hundred MB of
memory, which is why it is not part of CI.

Usage:
    python scripts/full_scale_preset.py [--out DIR] [--dx DX] [--dt DT]

Frames are kept every fourth step (the strip width 0.079 is an exact multiple
of the stored cadence), which is the sampling the oscillation covers see.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from artifact.certify import assemble, certificate_to_dict, write_certificate_json
from artifact.grids import GridFunction, Mesh
from artifact.models import make_psystem
from artifact.postprocess import (
    kappa_series,
    PostprocessParams,
    process_strips,
    write_kappa_csv,
    write_traces_csv,
)
from artifact.schemes import SchemeConfig, run

TRACING = dict(
    sigma_flag=0.0063,
    k_flag=25.0,
    kappa_prime=0.1,
    sigma_min=0.4,
    tv_cap=10.0,
    lambda_minus=0.0,
    lambda_plus=2.0,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.environ.get("ARTIFACT_OUTPUT_DIR", "full_scale_out"))
    parser.add_argument("--dx", type=float, default=5e-4)
    parser.add_argument("--dt", type=float, default=2.5e-4)
    parser.add_argument("--t-final", type=float, default=1.5)
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eps = max(args.dx, args.dt)

    mesh = Mesh.regular(-1.0, 4.5, round(5.5 / args.dx))

    def ic(x):
        if x < 0.0:
            return (2.0, 0.0)
        if x < 0.5:
            return (3.0, 0.0)
        return (1.0, 0.0)

    print(f"running: {mesh.n_cells} cells, dt={args.dt:g}, T={args.t_final:g} ...")
    t0 = time.monotonic()
    g0 = GridFunction.sample(mesh, ic)
    config = SchemeConfig("godunov", args.dx, args.dt, args.t_final)

    params = PostprocessParams(eps=eps, **TRACING)
    steps_per_strip = round(params.h / args.dt)
    n_steps = round(args.t_final / args.dt)
    stride = 1
    for candidate in (4, 2):
        if steps_per_strip % candidate == 0 and n_steps % candidate == 0:
            stride = candidate
            break
    history = run(make_psystem(), config, g0, store_stride=stride)
    t_run = time.monotonic() - t0
    print(f"run done in {t_run:.1f}s ({len(history.frames)} stored frames, stride {stride})")

    t0 = time.monotonic()
    result = process_strips(history, params)
    cert = assemble(history, result.covers, params)
    t_post = time.monotonic() - t0
    print(f"post-processing done in {t_post:.1f}s")

    write_certificate_json(cert, out / "certificate.json")
    write_kappa_csv(kappa_series(result.covers), out / "kappa.csv")
    write_traces_csv(result.traces, out / "traces.csv")

    print(f"\ngate: sup TV = {cert.sup_tv:.4f} (cap {params.tv_cap:g}) -> {cert.status}")
    print(f"h = {params.h:g}, rho = {params.rho:g}, delta = {params.delta:g}, "
          f"{cert.nu} strips")
    print("\n strip      t-window    kappa_j  accepted traces (x0 @ speed)")
    for cover in result.covers:
        traced = ", ".join(f"{t.x0:.3f}@{t.lam:.3f}" for t in cover.traced) or "-"
        print(f"  {cover.j:4d}  [{cover.t_lo:.3f}, {cover.t_hi:.3f}]  {cover.kappa_j:7.4f}  {traced}")
    rejections = {}
    for record in result.traces:
        if not record.accepted:
            rejections[record.reason] = rejections.get(record.reason, 0) + 1
    if rejections:
        print("\nrejections:", ", ".join(f"{k} x{v}" for k, v in sorted(rejections.items())))
    if cert.bound is not None:
        print(f"\nsmooth term {cert.term_smooth:.6f} + shock term {cert.term_shock:.6f}"
              f" -> bound {cert.bound:.6f}")
    print(f"files written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
