"""Weak-form residual audit of computed solutions.

A solution u of the stochastic transport problem satisfies, for every
compactly supported smooth test function phi,

    int u(t) phi - int u0 phi
        = int_0^t int (b . grad phi) u dx ds
        + int_0^t int (div b) phi u dx ds
        + sum_i int_0^t ( int D_i phi u dx ) o dW^i,

with the stochastic term read in the Fisk-Stratonovich sense. The
verifier evaluates every term on the snapshot mesh, approximating the
Stratonovich integral by midpoint (endpoint-average) sums against the
path increments, and reports the defect. An Ito left-point variant is
kept as a negative control: on exact solutions it converges to the
missing correction term, not to zero. For bounded-variation driving
paths the stochastic term is a plain Riemann-Stieltjes integral and the
same trapezoid sum applies without any correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .drifts import DriftField, divergence_of, eval_drift
from .errors import ConfigError, MeshMismatchError
from .fields import ScalarField, SpatialGrid, lp_norm
from .paths import SamplePath, eval_path
from .spde import SpdeSolution

__all__ = [
    "TestFunction",
    "make_test_functions",
    "WeakResidualSeries",
    "WeakResidualReport",
    "weak_residual",
    "weak_residual_bv",
    "write_weak_report_csv",
]

#: Test-function supports must clear the box edge by this many grid cells.
SUPPORT_MARGIN_CELLS = 2

#: Smallest admissible bump radius, in grid cells.
MIN_RADIUS_CELLS = 8


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported bump a * exp(1/((|x-x0|/r)^2 - 1)) on |x-x0| < r.

    The gradient is analytic. ``sup_value`` and ``sup_gradient`` are the
    extrema used to normalize residuals; the gradient extremum is found
    on a dense radial sample once per instance.
    """

    center: np.ndarray
    radius: float
    amplitude: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not (self.radius > 0 and self.amplitude != 0):
            raise ConfigError("test function needs a positive radius and nonzero amplitude")

    @property
    def d(self) -> int:
        return self.center.size

    def value(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, dtype=float) - self.center
        s = np.sum(rel * rel, axis=-1) / (self.radius * self.radius)
        out = np.zeros(s.shape)
        inside = s < 1.0
        out[inside] = self.amplitude * np.exp(1.0 / (s[inside] - 1.0))
        return out

    def gradient(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, dtype=float) - self.center
        s = np.sum(rel * rel, axis=-1) / (self.radius * self.radius)
        out = np.zeros(rel.shape)
        inside = s < 1.0
        si = s[inside] - 1.0
        scale = -2.0 * self.amplitude * np.exp(1.0 / si) / (si * si * self.radius * self.radius)
        out[inside] = scale[..., None] * rel[inside]
        return out

    @property
    def sup_value(self) -> float:
        return abs(self.amplitude) * math.exp(-1.0)

    @property
    def sup_gradient(self) -> float:
        rho = np.linspace(0.0, self.radius, 20001)[1:-1]
        s = rho * rho / (self.radius * self.radius)
        mag = 2.0 * abs(self.amplitude) * np.exp(1.0 / (s - 1.0)) * rho / (
            (s - 1.0) ** 2 * self.radius * self.radius
        )
        return float(np.max(mag))

    def validate_for(self, grid: SpatialGrid) -> None:
        """Check the support ball clears the box edge by the margin."""
        margin = SUPPORT_MARGIN_CELLS * grid.h
        if np.any(np.abs(self.center) + self.radius > grid.half_width - margin):
            raise ConfigError(
                f"test-function support (center {self.center}, radius {self.radius}) "
                f"does not fit the box with a {margin} margin"
            )


def make_test_functions(grid: SpatialGrid, count: int, seed: int) -> list[TestFunction]:
    """Draw reproducible bump test functions that fit the box with margins.

    Radii are uniform in [8h, r_max] and centers uniform in the shrunken
    box that keeps each support two cells clear of the edge; the Philox
    stream keyed by the seed makes the draw deterministic.
    """
    if count < 1:
        raise ConfigError(f"count must be positive, got {count}")
    r_min = MIN_RADIUS_CELLS * grid.h
    r_max = min(grid.half_width / 3.0, 0.8 * (grid.half_width - SUPPORT_MARGIN_CELLS * grid.h))
    if r_min >= r_max:
        raise ConfigError(
            f"box of {grid.n} cells per axis too small for bump radii in "
            f"[{r_min}, {r_max}]"
        )
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    out = []
    for _ in range(count):
        radius = float(rng.uniform(r_min, r_max))
        reach = grid.half_width - SUPPORT_MARGIN_CELLS * grid.h - radius
        center = rng.uniform(-reach, reach, size=grid.d)
        phi = TestFunction(center, radius, 1.0)
        phi.validate_for(grid)
        out.append(phi)
    return out


@dataclass(frozen=True)
class WeakResidualSeries:
    """Residual time series for one test function, with its term breakdown."""

    phi_index: int
    times: np.ndarray
    residuals: np.ndarray
    term_initial: np.ndarray  # A(t) - A(0)
    term_drift: np.ndarray
    term_div: np.ndarray
    term_stoch: np.ndarray
    normalizer: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    @property
    def max_normalized(self) -> float:
        return self.max_abs / self.normalizer


@dataclass(frozen=True)
class WeakResidualReport:
    """Aggregate of residual series over a family of test functions."""

    series: tuple

    @property
    def max_abs(self) -> float:
        return max(s.max_abs for s in self.series)

    @property
    def max_normalized(self) -> float:
        return max(s.max_normalized for s in self.series)

    @property
    def rms(self) -> float:
        stacked = np.concatenate([s.residuals for s in self.series])
        return float(np.sqrt(np.mean(stacked * stacked)))


def _check_alignment(times: np.ndarray, path: SamplePath) -> None:
    T = max(path.horizon, 1.0e-300)
    knots = path.times
    idx = np.searchsorted(knots, times)
    idx = np.clip(idx, 0, knots.size - 1)
    near = np.minimum(
        np.abs(knots[idx] - times),
        np.abs(knots[np.maximum(idx - 1, 0)] - times),
    )
    if np.any(near > 1.0e-9 * T):
        raise MeshMismatchError("snapshot times do not sit on the path mesh")


def _residual_series(
    fields,
    times: np.ndarray,
    b: DriftField,
    path: SamplePath,
    phi: TestFunction,
    phi_index: int,
    p,
    rule: str,
) -> WeakResidualSeries:
    grid = fields[0].grid
    nodes = grid.nodes()
    w = grid.cell_volume
    phi_vals = phi.value(nodes)
    phi_grad = phi.gradient(nodes)

    U = np.stack([f.values.ravel() for f in fields])  # (M+1, n)
    A = U @ phi_vals * w
    g = U @ phi_grad * w  # (M+1, d)

    drift_rate = np.empty(times.size)
    div_rate = np.empty(times.size)
    for m, t in enumerate(times):
        bx = eval_drift(b, float(t), nodes)
        drift_rate[m] = float((U[m] * np.sum(bx * phi_grad, axis=-1)).sum()) * w
        div_vals = divergence_of(b, float(t), nodes, fd_step=1.0e-4 * grid.half_width)
        div_rate[m] = float((U[m] * div_vals * phi_vals).sum()) * w
    term_drift = cumulative_trapezoid(drift_rate, times, initial=0.0)
    term_div = cumulative_trapezoid(div_rate, times, initial=0.0)

    B = eval_path(path, times)  # (M+1, d)
    dB = np.diff(B, axis=0)
    if rule in ("stratonovich", "bv_trapezoid"):
        inc = np.sum(0.5 * (g[:-1] + g[1:]) * dB, axis=-1)
    elif rule == "ito":
        inc = np.sum(g[:-1] * dB, axis=-1)
    else:
        raise ConfigError(f"unknown stochastic quadrature rule {rule!r}")
    term_stoch = np.concatenate([[0.0], np.cumsum(inc)])

    term_initial = A - A[0]
    residuals = term_initial - term_drift - term_div - term_stoch
    normalizer = lp_norm(fields[0], p) * (phi.sup_value + phi.sup_gradient)
    if normalizer == 0.0:
        normalizer = phi.sup_value + phi.sup_gradient
    return WeakResidualSeries(
        phi_index=phi_index,
        times=times,
        residuals=residuals,
        term_initial=term_initial,
        term_drift=term_drift,
        term_div=term_div,
        term_stoch=term_stoch,
        normalizer=normalizer,
    )


def weak_residual(
    sol: SpdeSolution,
    b: DriftField,
    path: SamplePath | None = None,
    phis=None,
    p=None,
    rule: str = "stratonovich",
) -> WeakResidualReport:
    """Defect of the weak identity on the solution snapshots.

    Parameters
    ----------
    sol : SpdeSolution
        Snapshots aligned with the driving path mesh.
    b : DriftField
        The drift the solution claims to solve for.
    path : SamplePath, optional
        Defaults to the solution's own path.
    phis : sequence of TestFunction, optional
        Defaults to ten reproducible bumps drawn with seed 0.
    p : exponent, optional
        Normalizing exponent; defaults to the solution's.
    rule : {"stratonovich", "ito"}
        Midpoint (endpoint-average) sums match the Stratonovich reading
        of the identity; the left-point Ito sums are a negative control.
    """
    path = sol.path if path is None else path
    phis = make_test_functions(sol.grid, 10, 0) if phis is None else list(phis)
    exponent = sol.p if p is None else p
    _check_alignment(sol.times, path)
    for phi in phis:
        phi.validate_for(sol.grid)
    series = tuple(
        _residual_series(sol.fields, sol.times, b, path, phi, j, exponent, rule)
        for j, phi in enumerate(phis)
    )
    return WeakResidualReport(series)


def weak_residual_bv(
    sol: SpdeSolution,
    b: DriftField,
    path: SamplePath | None = None,
    phis=None,
    p=None,
) -> WeakResidualReport:
    """Weak defect against a bounded-variation driving path.

    The stochastic term is the Riemann-Stieltjes integral of the test
    moment against the BV path, approximated by the same trapezoid sums;
    no Stratonovich correction enters.
    """
    path = sol.path if path is None else path
    if path.kind not in ("piecewise_linear_bv", "zero"):
        raise ConfigError(f"BV residual needs a BV or zero path, got {path.kind!r}")
    phis = make_test_functions(sol.grid, 10, 0) if phis is None else list(phis)
    exponent = sol.p if p is None else p
    _check_alignment(sol.times, path)
    for phi in phis:
        phi.validate_for(sol.grid)
    series = tuple(
        _residual_series(sol.fields, sol.times, b, path, phi, j, exponent, "bv_trapezoid")
        for j, phi in enumerate(phis)
    )
    return WeakResidualReport(series)


def write_weak_report_csv(report: WeakResidualReport, path) -> None:
    """One row per (test function, snapshot time) with the term breakdown."""
    lines = ["phi_index,t,residual,term_initial,term_drift,term_div,term_stoch,normalizer\n"]
    for s in report.series:
        for m in range(s.times.size):
            lines.append(
                f"{s.phi_index},{float(s.times[m])!r},{float(s.residuals[m])!r},"
                f"{float(s.term_initial[m])!r},{float(s.term_drift[m])!r},"
                f"{float(s.term_div[m])!r},{float(s.term_stoch[m])!r},{s.normalizer!r}\n"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines)
