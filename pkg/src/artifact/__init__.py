"""A-posteriori L1 error certification for 1-D hyperbolic conservation laws.

The package is organised as a pipeline:

- :mod:`artifact.grids` -- meshes, piecewise-constant data, space-time regions,
  and the exact measurement primitives (variation, oscillation, L1 distance);
- :mod:`artifact.models` -- flux models (a 2x2 isentropic gas system and a
  convex scalar law) with entropy pairs and exact Riemann solvers;
- :mod:`artifact.schemes` -- four approximate solvers (upwind, staggered,
  implicit, mollified front evolution) producing solution histories;
- :mod:`artifact.residuals` -- weak-form and entropy residual measurements
  of a history against compactly supported Lipschitz test functions;
- :mod:`artifact.postprocess` -- variation flags, shock tracing and strip
  covers extracted from a history;
- :mod:`artifact.certify` -- assembly of the final L1 error certificate;
- :mod:`artifact.cli` -- configuration-file driven pipeline runner.
"""

from artifact.grids import (
    GridFunction,
    Mesh,
    SlantedBand,
    SolutionHistory,
    Trapezoid,
    cells_in_region,
    l1_distance,
    oscillation,
    total_variation,
)

__version__ = "0.1.0"

__all__ = [
    "Mesh",
    "GridFunction",
    "SolutionHistory",
    "Trapezoid",
    "SlantedBand",
    "total_variation",
    "oscillation",
    "l1_distance",
    "cells_in_region",
    "__version__",
]
