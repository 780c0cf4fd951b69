"""Right-hand sides of the concentration inequalities and LIL quantities.

Every bound takes its universal constant (c or C, depending only on the
order) as an explicit input defaulting to 1.0: the bounds are shape-exact
and constant-calibratable.  Entries whose norm vanishes contribute an
infinite exponent and are skipped; if every entry vanishes the kernel is
almost everywhere zero and the tail is reported as 0 with a flag.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chaos import chaos_expand
from .errors import ConfigurationError, SizeError
from .kernels import DiscreteKernel, StepKernel, l2_norm_sq
from .norms import NormTable, shape_multiplicity

__all__ = [
    "BoundResult",
    "BoundSpec",
    "ClusterSet",
    "integral_tail_bound",
    "integral_moment_bound",
    "simplified_tail_bound",
    "ustat_tail_bound",
    "subgraph_tail_bound",
    "power_length_bound",
    "power_length_quantities",
    "ou_bound",
    "ou_variance_bound",
    "polynomial_tail_bound",
    "mixed_l1_l2_norm",
    "lil_cluster_set",
    "lil_normalizer",
    "curve_csv",
]


@dataclass(frozen=True)
class BoundResult:
    """A tail bound together with the regime that realized the minimum."""

    value: float
    exponent: float
    regime: str
    trivial_zero: bool = False  # all norms vanished: the kernel is a.e. zero

    def __float__(self) -> float:
        return self.value


def _finish(c: float, terms: list[tuple[float, str]]) -> BoundResult:
    if not terms:
        return BoundResult(value=0.0, exponent=math.inf, regime="degenerate", trivial_zero=True)
    exponent, regime = min(terms, key=lambda pair: pair[0])
    return BoundResult(value=2.0 * math.exp(-c * exponent), exponent=exponent, regime=regime)


def _check_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value}")


def integral_tail_bound(table: NormTable, T: float, u: float, c: float = 1.0) -> BoundResult:
    """Tail bound for sup_{t<=T} |I_t| from the conditional norm table."""
    _check_positive(T=T, u=u, c=c)
    d = table.d
    terms = []
    for (k, shape), norm in table.items():
        if norm <= 0.0:
            continue
        scale = T ** ((d - k) / 2) * norm
        exponent = (u / scale) ** (2.0 / (2 * k + len(shape)))
        terms.append((exponent, f"k={k},J={'+'.join(map(str, shape)) or 'empty'}"))
    return _finish(c, terms)


def integral_moment_bound(table: NormTable, T: float, p: float, C: float = 1.0) -> float:
    """Moment bound for sup_{t<=T} |I_t|; the partition sum is grouped by
    shape, each shape weighted by how many set partitions realize it."""
    _check_positive(T=T, C=C)
    if p < 2:
        raise ConfigurationError(f"moment order p must be >= 2, got {p}")
    d = table.d
    total = 0.0
    for (k, shape), norm in table.items():
        mult = shape_multiplicity(d - k, shape)
        total += mult * p ** (k + len(shape) / 2) * T ** ((d - k) / 2) * norm
    return C * total


def simplified_tail_bound(B: Sequence[float], T: float, u: float, c: float = 1.0) -> BoundResult:
    """Single-block simplification: only the norms B_0..B_d, exponents 2/(d+k)."""
    _check_positive(T=T, u=u, c=c)
    d = len(B) - 1
    terms = []
    for k, bk in enumerate(B):
        if bk <= 0.0:
            continue
        exponent = (u / (T ** ((d - k) / 2) * bk)) ** (2.0 / (d + k))
        terms.append((exponent, f"k={k}"))
    return _finish(c, terms)


def ustat_tail_bound(
    tables: Sequence[NormTable], T: float, u: float, c: float = 1.0
) -> BoundResult:
    """Tail bound for the centered U-statistic from the projected kernels.

    ``tables[n-1]`` must be the norm table of the n-th projected kernel;
    the ambient order d is the number of tables.
    """
    _check_positive(T=T, u=u, c=c)
    d = len(tables)
    terms = []
    for n, table in enumerate(tables, start=1):
        if table.d != n:
            raise ConfigurationError("tables must be ordered g_1 .. g_d")
        for (k, shape), norm in table.items():
            if norm <= 0.0:
                continue
            scale = T ** (d - (n + k) / 2) * norm
            exponent = (u / scale) ** (2.0 / (2 * k + len(shape)))
            terms.append((exponent, f"n={n},k={k},J={'+'.join(map(str, shape)) or 'empty'}"))
    return _finish(c, terms)


def subgraph_tail_bound(
    var_st: float, t: float, b_dr: float, d: int, u: float, c: float = 1.0
) -> BoundResult:
    """Three-regime bound for centered subgraph counts of an order-d pattern."""
    _check_positive(var_st=var_st, t=t, b_dr=b_dr, u=u, c=c)
    terms = [
        (u**2 / var_st, "gaussian"),
        (u / (t * b_dr) ** (d - 1), "intermediate"),
        (u ** (1.0 / d), "poisson"),
    ]
    return _finish(c, terms)


def power_length_quantities(
    grid_or_space,
    r,
    beta: float,
    pairs: Sequence[tuple[float, float]],
) -> tuple[dict[tuple[float, float], float], dict[tuple[float, float], float]]:
    """A_{gamma,p} and B_{gamma,p} for the power-weighted edge-length kernel.

    A integrates r(x)^gamma * lambda(B(x, beta r(x)))^p; B takes the sup.
    Closed forms on a constant-density torus with constant radius; exact
    discrete sums on a grid (r may then vary per cell).
    """
    from .norms import ball_measures, unit_ball_volume
    from .point_process import SpaceConfig

    if isinstance(grid_or_space, SpaceConfig):
        space = grid_or_space
        if space.kind != "torus":
            raise ConfigurationError("closed forms require a torus; use a Grid otherwise")
        r = float(r)
        ball = space.density * unit_ball_volume(space.dimension) * (beta * r) ** space.dimension
        a = {(g, p): space.total_mass * r**g * ball**p for (g, p) in pairs}
        b = {(g, p): r**g * ball**p for (g, p) in pairs}
        return a, b
    grid = grid_or_space
    radii = np.broadcast_to(np.asarray(r, dtype=float), (grid.n_cells,))
    if np.ptp(radii) == 0.0:  # constant radius: one neighborhood sweep suffices
        balls = ball_measures(grid, beta * float(radii[0]))
    else:
        balls = np.array(
            [ball_measures(grid, beta * rv)[i] for i, rv in enumerate(radii)]
        )
    vals = {(g, p): radii**g * balls**p for (g, p) in pairs}
    a = {gp: float(np.sum(v * grid.weights)) for gp, v in vals.items()}
    b = {gp: float(np.max(v)) for gp, v in vals.items()}
    return a, b


def power_length_bound(
    A: dict[tuple[float, float], float],
    B: dict[tuple[float, float], float],
    t: float,
    u: float,
    beta: float,
    alpha: float,
    c: float = 1.0,
    C_var: float = 1.0,
) -> tuple[BoundResult, float]:
    """Four-regime bound for the power-weighted total edge length.

    Requires B at (alpha, 1), (2*alpha/3, 1/3), (alpha/2, 0) and A at
    (2*alpha, 2), (2*alpha, 1).  Returns the bound and the variance bound
    C_var * beta^(2 alpha) * (t^3 A_{2a,2} + t^2 A_{2a,1}).
    """
    _check_positive(t=t, u=u, beta=beta, c=c)
    var_bound = C_var * beta ** (2 * alpha) * (
        t**3 * A[(2 * alpha, 2.0)] + t**2 * A[(2 * alpha, 1.0)]
    )
    terms = []
    if var_bound > 0:
        terms.append((u**2 / var_bound, "gaussian"))
    b1 = B[(alpha, 1.0)]
    if b1 > 0:
        terms.append((u / (t * beta**alpha * b1), "linear"))
    b23 = B[(2 * alpha / 3, 1.0 / 3.0)]
    if b23 > 0:
        terms.append((u ** (2 / 3) / (t ** (1 / 3) * beta ** (2 * alpha / 3) * b23), "two-thirds"))
    b12 = B[(alpha / 2, 0.0)]
    if b12 > 0:
        terms.append((u ** (1 / 2) / (beta ** (alpha / 2) * b12), "square-root"))
    return _finish(c, terms), var_bound


def ou_variance_bound(rho: float, c_nu: float, T: float) -> float:
    """Variance bound for the quadratic Ornstein-Uhlenbeck functional."""
    _check_positive(rho=rho, T=T)
    return (c_nu**2 + 2.0 / rho) * T


def ou_bound(
    rho: float, A: float, c_nu: float, T: float, u: float, c: float = 1.0
) -> tuple[BoundResult, float]:
    """Three-regime bound for Q_T; A bounds the mark support, c_nu^2 the
    fourth mark moment.  Returns the bound and the variance bound."""
    _check_positive(rho=rho, A=A, T=T, u=u, c=c)
    var_bound = ou_variance_bound(rho, c_nu, T)
    terms = [
        (u**2 / var_bound, "gaussian"),
        (u ** (2 / 3) / (A ** (2 / 3) * rho ** (-1 / 3)), "two-thirds"),
        (u ** (1 / 2) / A, "square-root"),
    ]
    return _finish(c, terms), var_bound


def mixed_l1_l2_norm(g: DiscreteKernel | StepKernel, I: Sequence[int]) -> float:
    """L1-in-the-complement of the L2-norm over the coordinates in I."""
    d = g.order
    I = sorted(set(int(i) for i in I))
    if any(not 0 <= i < d for i in I):
        raise ConfigurationError("coordinate subset out of range")
    w = np.asarray(g.weights, dtype=float)
    sq = np.asarray(g.values, dtype=float) ** 2
    for axis in sorted(I, reverse=True):
        sq = np.tensordot(sq, w, axes=([axis], [0]))
    out = np.sqrt(sq)
    while out.ndim:
        out = np.tensordot(out, w, axes=([out.ndim - 1], [0]))
    return float(out)


def polynomial_tail_bound(
    g: DiscreteKernel | StepKernel, I: Sequence[int], T: float, u: float, C: float = 1.0
) -> float:
    """First-moment tail bound C/u * T^(d-|I|/2) * mixed L1(L2) norm."""
    _check_positive(T=T, u=u, C=C)
    d = g.order
    return C / u * T ** (d - len(set(I)) / 2) * mixed_l1_l2_norm(g, I)


# ---------------------------------------------------------------------------
# law of the iterated logarithm


@dataclass(frozen=True)
class ClusterSet:
    """Extremes of the limit set {integral of g against phi^(tensor d)}."""

    kernel: DiscreteKernel | StepKernel
    lower: float
    upper: float
    phi: np.ndarray  # weighted-L2 unit vector attaining the upper extreme
    degeneracy_order: int


def lil_normalizer(t: float, d: int, m: int | None = None) -> float:
    """t^(d - m/2) * (2 log log t)^(m/2); defaults to the integral case m=d."""
    if t <= math.e:
        raise ConfigurationError("normalizer requires log log t > 0, i.e. t > e")
    m = d if m is None else m
    return t ** (d - m / 2) * (2.0 * math.log(math.log(t))) ** (m / 2)


def _weighted_sym_tensor(g) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(g.weights, dtype=float)
    sw = np.sqrt(w)
    t = np.asarray(g.values, dtype=float).copy()
    for axis in range(t.ndim):
        shape = [1] * t.ndim
        shape[axis] = len(sw)
        t *= sw.reshape(shape)
    return t, sw


def lil_cluster_set(g: DiscreteKernel | StepKernel, restarts: int = 32) -> ClusterSet:
    """Extremes of the cluster set over the weighted-L2 unit ball; d <= 3.

    d=1 is Cauchy-Schwarz, d=2 reduces to the spectrum of the weighted
    symmetric operator (the achievable values are the convex hull of the
    spectrum together with 0), d=3 uses symmetric power iteration.
    """
    d = g.order
    if d > 3:
        raise SizeError("cluster-set extremes supported up to order 3")
    m = chaos_expand(g).degeneracy_order() if l2_norm_sq(g) > 0 else d
    t, sw = _weighted_sym_tensor(g)
    safe_sw = np.where(sw > 0, sw, 1.0)
    if d == 1:
        norm = float(np.linalg.norm(t))
        x = t / norm if norm > 0 else np.zeros_like(t)
        return ClusterSet(g, -norm, norm, x / safe_sw, m)
    if d == 2:
        evals, evecs = np.linalg.eigh(t)
        upper = max(float(evals[-1]), 0.0)
        lower = min(float(evals[0]), 0.0)
        x = evecs[:, -1] if evals[-1] >= -evals[0] else evecs[:, 0]
        return ClusterSet(g, lower, upper, x / safe_sw, m)
    # d == 3: the set is symmetric under phi -> -phi
    rng = np.random.default_rng(0)
    best_val, best_x = 0.0, np.zeros(len(sw))
    for _ in range(restarts):
        x = rng.standard_normal(len(sw))
        x /= np.linalg.norm(x)
        prev = 0.0
        for _ in range(500):
            h = np.einsum("ijk,j,k->i", t, x, x)
            nh = float(np.linalg.norm(h))
            if nh == 0.0:
                break
            val = abs(float(h @ x))
            x = h / nh if h @ x >= 0 else -h / nh
            if abs(val - prev) < 1e-13:
                break
            prev = val
        val = abs(float(np.einsum("ijk,i,j,k->", t, x, x, x)))
        if val > best_val:
            best_val, best_x = val, x
    return ClusterSet(g, -best_val, best_val, best_x / safe_sw, m)


# ---------------------------------------------------------------------------
# specification plumbing

_FAMILIES = (
    "integral_tail",
    "integral_moment",
    "simplified",
    "ustat_tail",
    "subgraph",
    "power_length",
    "ou_quadratic",
    "polynomial",
)


@dataclass
class BoundSpec:
    """A bound family with its precomputed inputs and constant."""

    family: str
    params: dict = field(default_factory=dict)
    constant: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigurationError(f"unknown bound family {self.family!r}")
        if not self.constant > 0:
            raise ConfigurationError("the bound constant must be positive")

    def evaluate(self, u: float) -> float:
        p = self.params
        if self.family == "integral_tail":
            return integral_tail_bound(p["table"], p["T"], u, self.constant).value
        if self.family == "integral_moment":
            return integral_moment_bound(p["table"], p["T"], u, self.constant)
        if self.family == "simplified":
            return simplified_tail_bound(p["B"], p["T"], u, self.constant).value
        if self.family == "ustat_tail":
            return ustat_tail_bound(p["tables"], p["T"], u, self.constant).value
        if self.family == "subgraph":
            return subgraph_tail_bound(
                p["var"], p["t"], p["b_dr"], p["d"], u, self.constant
            ).value
        if self.family == "power_length":
            return power_length_bound(
                p["A"], p["B"], p["t"], u, p["beta"], p["alpha"], self.constant
            )[0].value
        if self.family == "ou_quadratic":
            return ou_bound(p["rho"], p["A"], p["c_nu"], p["T"], u, self.constant)[0].value
        return polynomial_tail_bound(p["kernel"], p["I"], p["T"], u, self.constant)

    def exponent(self, u: float) -> float:
        """Unit-constant exponent E(u) of families shaped 2*exp(-c*E(u))."""
        p = self.params
        if self.family == "integral_tail":
            return integral_tail_bound(p["table"], p["T"], u, 1.0).exponent
        if self.family == "simplified":
            return simplified_tail_bound(p["B"], p["T"], u, 1.0).exponent
        if self.family == "ustat_tail":
            return ustat_tail_bound(p["tables"], p["T"], u, 1.0).exponent
        if self.family == "subgraph":
            return subgraph_tail_bound(p["var"], p["t"], p["b_dr"], p["d"], u, 1.0).exponent
        if self.family == "power_length":
            return power_length_bound(p["A"], p["B"], p["t"], u, p["beta"], p["alpha"], 1.0)[
                0
            ].exponent
        if self.family == "ou_quadratic":
            return ou_bound(p["rho"], p["A"], p["c_nu"], p["T"], u, 1.0)[0].exponent
        raise ConfigurationError(f"family {self.family!r} is not an exponential tail bound")


def curve_csv(us: Sequence[float], results: Sequence[BoundResult]) -> str:
    """Bound curve as CSV rows (u, bound, regime tag)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["u", "bound", "regime"])
    for u, res in zip(us, results):
        writer.writerow([repr(float(u)), repr(res.value), res.regime])
    return buf.getvalue()
