"""Multiple stochastic integrals and U-statistics, evaluated exactly.

For step kernels (disjoint cells, diagonal-free coefficients) the d-fold
compensated integral factorizes over compensated cell counts.  Projected
kernels in general do not vanish on diagonals, so their integrals are
evaluated via the inclusion-exclusion expansion over factorial measures of
the realized sample; on a finite cell space a factorial-measure integral
reduces to falling-factorial products of cell counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SizeError
from .kernels import (
    DiscreteKernel,
    StepKernel,
    l2_norm_sq,
    mean_coefficient,
    project_kernel,
)
from .point_process import SpatioTemporalSample, factorial_tuples, restrict

__all__ = [
    "ChaosDecomposition",
    "compensated_counts",
    "wiener_ito_step",
    "factorial_measure_integral",
    "multiple_integral",
    "ustat",
    "ustat_mean",
    "ustat_variance",
    "chaos_expand",
    "chaos_identity_residual",
]

_MAX_ORDER = 4
_MAX_POINTS = 300
_MAX_TUPLE_GRID = 5_000_000


def compensated_counts(
    sample: SpatioTemporalSample, cell_measures: np.ndarray, t: float
) -> np.ndarray:
    """Per-cell compensated counts N_j(t) - t * lambda(A_j)."""
    if t > sample.horizon:
        raise ConfigurationError("t exceeds the sample horizon")
    counts = sample.cell_counts(t)
    cm = np.asarray(cell_measures, dtype=float)
    if len(counts) != len(cm):
        raise ConfigurationError("kernel cells do not match the sample space")
    return counts - t * cm


def wiener_ito_step(h: StepKernel, sample: SpatioTemporalSample, t: float) -> float:
    """Product-form integral of a diagonal-free step kernel."""
    comp = compensated_counts(sample, h.cell_measures, t)
    values = h.coeffs
    for _ in range(h.order):
        values = np.tensordot(values, comp, axes=([values.ndim - 1], [0]))
    return float(values)


def factorial_measure_integral(values: np.ndarray, counts: np.ndarray) -> float:
    """Sum of values over ordered distinct-point tuples, grouped by cell.

    The number of ordered selections of distinct points realizing a cell
    tuple is a product of falling factorials of the cell counts.
    """
    values = np.asarray(values, dtype=float)
    counts = np.asarray(counts, dtype=float)
    k = values.ndim
    if k == 0:
        return float(values)
    if k == 1:
        return float(values @ counts)
    if k == 2:
        # N^T V N minus the diagonal correction sum_i V_ii N_i
        quad = counts @ values @ counts
        return float(quad - np.diag(values) @ counts)
    if values.size > 2_000_000:
        raise SizeError("factorial-measure tensor too large for enumeration")
    total = 0.0
    for idx in np.ndindex(*values.shape):
        v = values[idx]
        if v == 0.0:
            continue
        used: dict[int, int] = {}
        f = 1.0
        for j in idx:
            c = used.get(j, 0)
            f *= counts[j] - c
            used[j] = c + 1
        total += v * f
    return total


def multiple_integral(g, sample: SpatioTemporalSample, t: float) -> float:
    """Compensated integral of a (possibly diagonal-carrying) cell kernel.

    Inclusion-exclusion over the number of factorial-measure coordinates,
    with the deterministic coordinates integrated against t * lambda.
    """
    n = g.order
    if n > _MAX_ORDER:
        raise SizeError(f"integral order {n} exceeds cap {_MAX_ORDER}")
    counts = sample.cell_counts(t)
    if counts.sum() > _MAX_POINTS:
        raise SizeError(f"sample larger than {_MAX_POINTS} points")
    w = np.asarray(g.weights, dtype=float)
    total = 0.0
    for k in range(n + 1):
        partial = np.asarray(g.values, dtype=float)
        for _ in range(n - k):
            partial = np.tensordot(partial, t * w, axes=([partial.ndim - 1], [0]))
        sign = (-1.0) ** (n - k)
        total += sign * math.comb(n, k) * factorial_measure_integral(partial, counts)
    return float(total)


def ustat(g, sample: SpatioTemporalSample, t: float) -> float:
    """Sum of the kernel over ordered tuples of distinct points by time t."""
    if isinstance(g, (StepKernel, DiscreteKernel)):
        counts = sample.cell_counts(t)
        return factorial_measure_integral(np.asarray(g.values, float), counts)
    # analytic kernel over raw point locations
    sub = restrict(sample, t)
    n = len(sub)
    d = g.order
    if n < d:
        return 0.0
    if n**d > _MAX_TUPLE_GRID:
        raise SizeError("too many tuples for direct U-statistic evaluation")
    pts = np.atleast_2d(np.asarray(sub.locations, dtype=float))
    grids = np.meshgrid(*([np.arange(n)] * d), indexing="ij")
    values = np.asarray(g.evaluate(*[pts[ix] for ix in grids]), dtype=float)
    distinct = np.ones((n,) * d, dtype=bool)
    for a in range(d):
        for b in range(a + 1, d):
            distinct &= grids[a] != grids[b]
    return float(values[distinct].sum())


def ustat_mean(g, t: float) -> float:
    """t^d times the full integral of the kernel."""
    return float(t**g.order * mean_coefficient(g))


def ustat_variance(g, t: float) -> float:
    """Exact variance from the squared L2 norms of the projected kernels."""
    d = g.order
    total = 0.0
    for n in range(1, d + 1):
        gn = project_kernel(g, n)
        total += (
            math.factorial(n) * math.comb(d, n) ** 2 * t ** (2 * d - n) * l2_norm_sq(gn)
        )
    return float(total)


@dataclass(frozen=True)
class ChaosDecomposition:
    """Projected kernels and the mean coefficient of a U-statistic kernel."""

    kernel: StepKernel | DiscreteKernel
    projected: tuple[DiscreteKernel, ...]  # g_1 .. g_d
    mean_coefficient: float
    binomials: tuple[int, ...]  # C(d, n) for n = 1..d

    @property
    def order(self) -> int:
        return self.kernel.order

    def degeneracy_order(self, rel_threshold: float = 1e-12) -> int:
        """Smallest n with g_n not identically zero (relative threshold)."""
        scale = math.sqrt(l2_norm_sq(self.kernel))
        for n, gn in enumerate(self.projected, start=1):
            if math.sqrt(l2_norm_sq(gn)) > rel_threshold * scale:
                return n
        return self.order


def chaos_expand(g) -> ChaosDecomposition:
    d = g.order
    return ChaosDecomposition(
        kernel=g,
        projected=tuple(project_kernel(g, n) for n in range(1, d + 1)),
        mean_coefficient=mean_coefficient(g),
        binomials=tuple(math.comb(d, n) for n in range(1, d + 1)),
    )


def chaos_identity_residual(g: StepKernel, sample: SpatioTemporalSample, t: float) -> float:
    """Residual of the finite chaos expansion of the centered U-statistic.

    Algebraically zero for step kernels; bounded by float roundoff.
    """
    d = g.order
    decomp = chaos_expand(g)
    u = ustat(g, sample, t)
    rhs = ustat_mean(g, t)
    for n in range(1, d + 1):
        rhs += math.comb(d, n) * t ** (d - n) * multiple_integral(decomp.projected[n - 1], sample, t)
    return float(u - rhs)
