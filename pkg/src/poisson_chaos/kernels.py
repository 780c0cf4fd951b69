"""Symmetric kernels: exact step kernels, analytic families, discretization.

Step kernels live on finitely many disjoint cells and vanish on diagonals;
they make every identity in :mod:`poisson_chaos.chaos` exact.  Analytic
kernels (subgraph indicators, length powers, Ornstein-Uhlenbeck quadratic
functionals, product-mark kernels) are discretized by the midpoint rule on
a grid; the grid is the single source of truth for both norm computation
and semi-discrete simulation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, SizeError
from .geometry import GraphPattern, PATTERNS, distance
from .point_process import SpaceConfig

__all__ = [
    "Grid",
    "StepKernel",
    "DiscreteKernel",
    "SubgraphKernel",
    "PowerLengthKernel",
    "OUOrder1Kernel",
    "OUOrder2Kernel",
    "ProductMarkKernel",
    "symmetrize",
    "symmetrize_tensor",
    "discretize",
    "project_kernel",
    "l2_norm_sq",
    "sup_norm",
    "integral",
    "to_step",
    "ou_f1",
    "ou_f2",
    "ou_truncation_length",
    "kernel_from_config",
]


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid:
    """Finite cell collection: midpoints (R, k) and positive weights (R,)."""

    midpoints: np.ndarray
    weights: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        if self.midpoints.ndim != 2 or len(self.midpoints) != len(self.weights):
            raise ConfigurationError("midpoints must be (R, k) aligned with weights")
        if np.any(np.asarray(self.weights) <= 0):
            raise ConfigurationError("grid weights must be positive")

    @property
    def n_cells(self) -> int:
        return len(self.weights)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def to_space(self) -> SpaceConfig:
        return SpaceConfig.finite(self.weights)

    @classmethod
    def torus(cls, n_cells: int, dim: int = 1, density: float = 1.0) -> "Grid":
        """Regular grid on the unit torus; cell measure density / n_cells^dim."""
        axis = (np.arange(n_cells) + 0.5) / n_cells
        pts = np.stack(
            [m.ravel() for m in np.meshgrid(*([axis] * dim), indexing="ij")], axis=-1
        )
        w = np.full(len(pts), density / n_cells**dim)
        return cls(midpoints=pts, weights=w, metric="torus")

    @classmethod
    def interval(cls, a: float, b: float, n_cells: int, density: float = 1.0) -> "Grid":
        h = (b - a) / n_cells
        mid = a + (np.arange(n_cells) + 0.5) * h
        return cls(midpoints=mid[:, None], weights=np.full(n_cells, density * h))

    def with_marks(self, mark_values: Sequence[float], mark_probs: Sequence[float]) -> "Grid":
        """Product grid over (cell, mark) with weight w_i * nu(mark)."""
        mv = np.asarray(mark_values, dtype=float)
        mp = np.asarray(mark_probs, dtype=float)
        if mv.shape != mp.shape or not math.isclose(mp.sum(), 1.0, rel_tol=1e-9):
            raise ConfigurationError("mark probabilities must sum to 1")
        mids = []
        ws = []
        for i in range(self.n_cells):
            for v, p in zip(mv, mp):
                mids.append(np.concatenate([self.midpoints[i], [v]]))
                ws.append(self.weights[i] * p)
        return Grid(midpoints=np.asarray(mids), weights=np.asarray(ws), metric=self.metric)


# ---------------------------------------------------------------------------
# kernel value objects


def _check_symmetric(values: np.ndarray, what: str, atol: float = 0.0) -> None:
    d = values.ndim
    for perm in itertools.permutations(range(d)):
        if not np.allclose(values, np.transpose(values, perm), atol=atol, rtol=1e-12):
            raise ConfigurationError(f"{what} must be symmetric under index permutation")


def _diagonal_mask(shape: tuple[int, ...]) -> np.ndarray:
    """Boolean mask of entries with at least two equal indices."""
    d = len(shape)
    mask = np.zeros(shape, dtype=bool)
    idx = np.indices(shape)
    for a in range(d):
        for b in range(a + 1, d):
            mask |= idx[a] == idx[b]
    return mask


@dataclass(frozen=True)
class StepKernel:
    """Simple symmetric kernel: disjoint cells plus a coefficient tensor.

    Coefficients are symmetric and vanish whenever two indices coincide.
    """

    cell_measures: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        cm = np.asarray(self.cell_measures, dtype=float)
        object.__setattr__(self, "cell_measures", cm)
        a = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", a)
        if np.any(cm <= 0) or not np.all(np.isfinite(cm)):
            raise ConfigurationError("cell measures must be positive and finite")
        if a.ndim >= 1 and any(s != len(cm) for s in a.shape):
            raise ConfigurationError("coefficient tensor sides must match cell count")
        if a.ndim >= 2 and np.any(a[_diagonal_mask(a.shape)] != 0):
            raise ConfigurationError("coefficients must vanish on diagonals")
        _check_symmetric(a, "step-kernel coefficients")

    @property
    def order(self) -> int:
        return self.coeffs.ndim

    @property
    def weights(self) -> np.ndarray:
        return self.cell_measures

    @property
    def values(self) -> np.ndarray:
        return self.coeffs


@dataclass(frozen=True)
class DiscreteKernel:
    """A d-way tensor over weighted grid cells (diagonals allowed)."""

    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)
        if np.any(w <= 0):
            raise ConfigurationError("weights must be positive")
        if v.ndim >= 1 and any(s != len(w) for s in v.shape):
            raise ConfigurationError("tensor sides must match cell count")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("tensor entries must be finite")
        scale = float(np.max(np.abs(v))) if v.size else 0.0
        _check_symmetric(v, "kernel tensor", atol=1e-12 * scale)

    @property
    def order(self) -> int:
        return self.values.ndim

    def to_csv(self) -> str:
        import io, csv as _csv

        buf = io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        d = self.order
        writer.writerow([f"i_{j+1}" for j in range(d)] + ["value"])
        for idx in np.ndindex(*self.values.shape):
            writer.writerow(list(idx) + [repr(float(self.values[idx]))])
        return buf.getvalue()


Kernel = StepKernel | DiscreteKernel


# ---------------------------------------------------------------------------
# analytic kernel families


class SubgraphKernel:
    """Product of edge indicators of a connected pattern at radius r."""

    def __init__(self, pattern: GraphPattern | str, r: float, metric: str = "torus"):
        if isinstance(pattern, str):
            pattern = PATTERNS[pattern]
        if r <= 0:
            raise ConfigurationError("radius must be positive")
        self.pattern = pattern
        self.r = float(r)
        self.metric = metric
        self.order = pattern.n_vertices

    def evaluate(self, *points: np.ndarray) -> np.ndarray:
        if len(points) != self.order:
            raise ConfigurationError(f"expected {self.order} arguments")
        out = None
        for a, b in self.pattern.edges:
            ind = distance(points[a], points[b], self.metric) <= self.r
            out = ind if out is None else (out & ind)
        return np.asarray(out, dtype=float)


class PowerLengthKernel:
    """|x-y|^alpha on pairs whose balls of radius r(.) touch."""

    def __init__(
        self,
        alpha: float,
        r_func: Callable[[np.ndarray], np.ndarray] | float,
        beta: float = 2.0,
        metric: str = "euclidean",
    ):
        if alpha < 0 or beta < 2:
            raise ConfigurationError("need alpha >= 0 and beta >= 2")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.metric = metric
        if callable(r_func):
            self._r = r_func
        else:
            rv = float(r_func)
            self._r = lambda x: np.full(np.asarray(x).shape[:-1], rv)
        self.order = 2

    def radius(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._r(np.asarray(x, dtype=float)))

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dist = distance(x, y, self.metric)
        ind = dist <= self.radius(x) + self.radius(y)
        with np.errstate(invalid="ignore"):
            val = np.where(ind, dist**self.alpha, 0.0)
        return np.asarray(val, dtype=float)

    def validate_slow_variation(self, grid: Grid) -> bool:
        """Check sup r(x+v) <= (beta-1) r(x) for |v| <= 2 sup r on the grid."""
        pts = grid.midpoints
        r = self.radius(pts)
        r_sup = float(np.max(r))
        ok = True
        for i in range(len(pts)):
            d = distance(pts[i][None, :], pts, grid.metric)
            near = d <= 2.0 * r_sup
            if np.any(r[near] > (self.beta - 1.0) * r[i] + 1e-12):
                ok = False
        return ok


def ou_f1(x: np.ndarray, rho: float, T: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    base = np.where(
        x <= 0,
        1.0 - np.exp(-2.0 * rho * T),
        np.exp(-2.0 * rho * np.clip(x, 0.0, None)) - np.exp(-2.0 * rho * T),
    )
    return np.where(x <= T, np.exp(2.0 * rho * x) * base, 0.0)


def ou_f2(x1: np.ndarray, x2: np.ndarray, rho: float, T: float) -> np.ndarray:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    m = np.maximum(x1, x2)
    base = np.where(
        m <= 0,
        1.0 - np.exp(-2.0 * rho * T),
        np.exp(-2.0 * rho * np.clip(m, 0.0, None)) - np.exp(-2.0 * rho * T),
    )
    return np.where(m <= T, np.exp(rho * (x1 + x2)) * base, 0.0)


def ou_truncation_length(rho: float, T: float, rel_tol: float = 1e-6) -> float:
    """Left truncation point -L with discarded L2 mass below rel_tol."""
    reference = T + (math.exp(-2.0 * rho * T) - 1.0) / (2.0 * rho)
    target = rel_tol * max(reference, 1e-300)
    return max(1.0, math.log(1.0 / (2.0 * rho * target)) / (2.0 * rho))


class OUOrder1Kernel:
    """First chaos kernel of the quadratic OU-Levy functional: u^2 f1(x)."""

    def __init__(self, rho: float, T: float):
        if rho <= 0 or T <= 0:
            raise ConfigurationError("rho and T must be positive")
        self.rho = float(rho)
        self.T = float(T)
        self.order = 1

    def evaluate(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        x, u = p[..., 0], p[..., 1]
        return u**2 * ou_f1(x, self.rho, self.T)


class OUOrder2Kernel:
    """Second chaos kernel of the quadratic OU-Levy functional: u1 u2 f2."""

    def __init__(self, rho: float, T: float):
        if rho <= 0 or T <= 0:
            raise ConfigurationError("rho and T must be positive")
        self.rho = float(rho)
        self.T = float(T)
        self.order = 2

    def evaluate(self, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        return p1[..., 1] * p2[..., 1] * ou_f2(p1[..., 0], p2[..., 0], self.rho, self.T)


class ProductMarkKernel:
    """h(mark1, mark2) * 1{spatial distance <= r}; last coordinate is the mark."""

    def __init__(
        self,
        h: Callable[[np.ndarray, np.ndarray], np.ndarray],
        r: float = math.inf,
        metric: str = "torus",
    ):
        self.h = h
        self.r = float(r)
        self.metric = metric
        self.order = 2

    def evaluate(self, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        hv = np.asarray(self.h(p1[..., -1], p2[..., -1]), dtype=float)
        if math.isinf(self.r):
            return hv
        ind = distance(p1[..., :-1], p2[..., :-1], self.metric) <= self.r
        return hv * ind


# ---------------------------------------------------------------------------
# operations


def symmetrize_tensor(a: np.ndarray) -> np.ndarray:
    """Average over all index permutations; a projection."""
    d = a.ndim
    if d <= 1:
        return np.array(a, dtype=float)
    out = np.zeros_like(a, dtype=float)
    for perm in itertools.permutations(range(d)):
        out += np.transpose(a, perm)
    return out / math.factorial(d)


def symmetrize(kernel: StepKernel | np.ndarray, cell_measures=None) -> StepKernel:
    """Symmetrize coefficients of a step-kernel-like object."""
    if isinstance(kernel, StepKernel):
        return StepKernel(kernel.cell_measures, symmetrize_tensor(kernel.coeffs))
    if cell_measures is None:
        raise ConfigurationError("cell measures required for raw coefficient input")
    return StepKernel(np.asarray(cell_measures, float), symmetrize_tensor(np.asarray(kernel, float)))


_DISCRETIZE_CAP = 20_000_000


def discretize(kernel, grid: Grid, symmetrize_values: bool = True) -> DiscreteKernel:
    """Midpoint-rule tensor of an analytic kernel on the grid."""
    d = kernel.order
    r = grid.n_cells
    if r**d > _DISCRETIZE_CAP:
        raise SizeError(f"discretization size {r}^{d} exceeds cap")
    mids = grid.midpoints
    index_grids = np.meshgrid(*([np.arange(r)] * d), indexing="ij")
    values = np.asarray(
        kernel.evaluate(*[mids[ix] for ix in index_grids]), dtype=float
    ).reshape((r,) * d)
    if symmetrize_values and d > 1:
        values = symmetrize_tensor(values)
    return DiscreteKernel(weights=grid.weights.copy(), values=values)


def project_kernel(kernel: Kernel, n: int) -> DiscreteKernel:
    """Integrate out the last d-n arguments against the cell measure."""
    d = kernel.order
    if not 1 <= n <= d:
        raise ConfigurationError(f"projection order {n} outside 1..{d}")
    values = np.asarray(kernel.values, dtype=float)
    w = np.asarray(kernel.weights, dtype=float)
    for _ in range(d - n):
        values = np.tensordot(values, w, axes=([values.ndim - 1], [0]))
    return DiscreteKernel(weights=w.copy(), values=values)


def mean_coefficient(kernel: Kernel) -> float:
    """Full integral of the kernel against the product measure."""
    values = np.asarray(kernel.values, dtype=float)
    w = np.asarray(kernel.weights, dtype=float)
    for _ in range(kernel.order):
        values = np.tensordot(values, w, axes=([values.ndim - 1], [0]))
    return float(values)


def integral(kernel: Kernel) -> float:
    return mean_coefficient(kernel)


def l2_norm_sq(kernel: Kernel) -> float:
    """Weighted squared L2 norm: sum of value^2 times product of weights."""
    values = np.asarray(kernel.values, dtype=float) ** 2
    w = np.asarray(kernel.weights, dtype=float)
    for _ in range(kernel.order):
        values = np.tensordot(values, w, axes=([values.ndim - 1], [0]))
    return float(values)


def sup_norm(kernel: Kernel) -> float:
    return float(np.max(np.abs(kernel.values))) if kernel.values.size else 0.0


def to_step(kernel: DiscreteKernel) -> tuple[StepKernel, float]:
    """Zero diagonal entries; return the step kernel and dropped L2 mass."""
    values = np.array(kernel.values, dtype=float)
    if values.ndim >= 2:
        mask = _diagonal_mask(values.shape)
        dropped = DiscreteKernel(kernel.weights, np.where(mask, values, 0.0))
        dropped_mass = math.sqrt(l2_norm_sq(dropped))
        values[mask] = 0.0
    else:
        dropped_mass = 0.0
    return StepKernel(kernel.weights.copy(), values), dropped_mass


# ---------------------------------------------------------------------------
# configuration loading


def grid_from_config(cfg: dict) -> Grid:
    try:
        return _grid_from_config(cfg)
    except KeyError as exc:
        raise ConfigurationError(f"grid config missing key {exc.args[0]!r}") from None


def _grid_from_config(cfg: dict) -> Grid:
    kind = cfg.get("kind", "torus")
    if kind == "torus":
        g = Grid.torus(int(cfg["cells"]), dim=int(cfg.get("dim", 1)), density=float(cfg.get("density", 1.0)))
    elif kind == "interval":
        g = Grid.interval(float(cfg["a"]), float(cfg["b"]), int(cfg["cells"]), density=float(cfg.get("density", 1.0)))
    else:
        raise ConfigurationError(f"unknown grid kind {kind!r}")
    if "mark_values" in cfg:
        g = g.with_marks(cfg["mark_values"], cfg["mark_probs"])
    return g


def kernel_from_config(cfg: dict):
    """Build a kernel (analytic or tensor-backed) from a plain dict."""
    try:
        return _kernel_from_config(cfg)
    except KeyError as exc:
        raise ConfigurationError(f"kernel config missing key {exc.args[0]!r}") from None


def _kernel_from_config(cfg: dict):
    kind = cfg.get("type")
    if kind == "step":
        return StepKernel(np.asarray(cfg["cell_measures"], float), np.asarray(cfg["coeffs"], float))
    if kind == "discrete":
        return DiscreteKernel(np.asarray(cfg["weights"], float), np.asarray(cfg["values"], float))
    if kind == "subgraph":
        return SubgraphKernel(cfg.get("graph", "K_2"), float(cfg["r"]), cfg.get("metric", "torus"))
    if kind == "power_length":
        return PowerLengthKernel(float(cfg.get("alpha", 1.0)), float(cfg.get("r", 0.1)), float(cfg.get("beta", 2.0)))
    if kind == "ou1":
        return OUOrder1Kernel(float(cfg["rho"]), float(cfg["T"]))
    if kind == "ou2":
        return OUOrder2Kernel(float(cfg["rho"]), float(cfg["T"]))
    if kind == "product_mark":
        return ProductMarkKernel(lambda a, b: a * b, float(cfg.get("r", math.inf)), cfg.get("metric", "torus"))
    raise ConfigurationError(f"unknown kernel type {kind!r}")
