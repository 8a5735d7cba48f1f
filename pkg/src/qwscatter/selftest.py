"""Quick numerical self-checks behind ``qwscatter selftest``.

Each suite returns the worst observed error and the tolerance it must stay
under; the suites are small versions of the test-suite properties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .free_walk import contour_integral_I, green_defect_residual
from .lattice import ROUTE_TOL, HomogeneousParams
from .oracles import (
    contour_integral_quadrature,
    random_field,
    random_params,
    random_theta,
)
from .scattering import smatrix_via_dynamics, smatrix_via_interior


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst < self.tol


def _smatrices(rng, fields: int, thetas: int):
    for _ in range(fields):
        f = random_field(rng, int(rng.integers(0, 9)))
        for t in random_theta(rng, thetas):
            yield f, t, smatrix_via_interior(f, t)


def route_equivalence(rng) -> float:
    worst = 0.0
    for f, t, s in _smatrices(rng, 20, 4):
        worst = max(worst, s.max_difference(smatrix_via_dynamics(f, t)))
    return worst


def unitarity(rng) -> float:
    return max(s.unitarity_defect for _, _, s in _smatrices(rng, 20, 4))


def green_residual(rng) -> float:
    worst = 0.0
    for _ in range(10):
        params = random_params(rng)
        for im in (0.05, 0.5):
            kappa = complex(rng.uniform(0.0, 2 * math.pi), im)
            worst = max(worst, green_defect_residual(kappa, params, -32, 31))
    return worst


def quadrature_oracle(rng) -> float:
    xs = list(range(-10, 11))
    worst = 0.0
    for p in (1.0, 1 / math.sqrt(2), 0.3):
        params = HomogeneousParams.from_angles(p, *rng.uniform(0.0, 2 * math.pi, 3))
        kappa = complex(rng.uniform(0.0, 2 * math.pi), 0.5)
        quad = contour_integral_quadrature(xs, kappa, params)
        exact = np.array([contour_integral_I(x, kappa, params) for x in xs])
        worst = max(worst, float(np.max(np.abs(quad - exact) / np.abs(exact))))
    return worst


SUITES: List[tuple] = [
    ("route-equivalence", route_equivalence, ROUTE_TOL),
    ("unitarity", unitarity, ROUTE_TOL),
    ("green-residual", green_residual, 1e-10),
    ("quadrature-oracle", quadrature_oracle, 1e-8),
]


def run_selftest(seed: int = 0) -> List[CheckResult]:
    out = []
    for name, fn, tol in SUITES:
        worst = fn(np.random.default_rng(seed))
        out.append(CheckResult(name, worst, tol))
    return out


def format_table(results: List[CheckResult]) -> str:
    lines = [f"{'check':<20} {'worst':>12} {'tol':>10}  result"]
    for r in results:
        lines.append(f"{r.name:<20} {r.worst:>12.3e} {r.tol:>10.1e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
