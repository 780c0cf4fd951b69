"""Partition-indexed injective tensor norms of discrete kernels.

The norm attached to a partition of the coordinate set is the supremum of
the weighted multilinear form over factors of weighted-L2 norm at most one.
After absorbing square-root weights into the tensor, this is the injective
norm of a block-flattened tensor over Euclidean unit vectors:

* one block      -> weighted L2 norm (exact),
* two blocks     -> largest singular value of the flattening (exact),
* three or more  -> alternating block maximization with random restarts,
                    cross-checked against a brute-force oracle.

Conditional versions freeze the first k coordinates and take the maximum
over all cell assignments of the frozen slots.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, SizeError
from .kernels import DiscreteKernel, Grid, StepKernel
from .point_process import SpaceConfig

__all__ = [
    "Partition",
    "NormTable",
    "set_partitions",
    "partition_shapes",
    "shape_multiplicity",
    "partition_norm",
    "conditional_norm_sup",
    "brute_force_norm",
    "build_norm_table",
    "ball_measures",
    "subgraph_bound_quantities",
    "unit_ball_volume",
]

_ALS_RESTARTS = 32
_ALS_MAX_SWEEPS = 500
_ALS_GAIN_TOL = 1e-10
_BRUTE_CAP = 256
_BRUTE_STARTS = 200


@dataclass(frozen=True)
class Partition:
    """A partition of a subset of the coordinate slots {0, ..., d-1}."""

    d: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = [i for b in self.blocks for i in b]
        if any(len(b) == 0 for b in self.blocks):
            raise ConfigurationError("partition blocks must be nonempty")
        if len(flat) != len(set(flat)) or any(not 0 <= i < self.d for i in flat):
            raise ConfigurationError("blocks must be disjoint subsets of the slots")
        object.__setattr__(
            self, "blocks", tuple(tuple(sorted(b)) for b in self.blocks)
        )

    @property
    def covered(self) -> tuple[int, ...]:
        return tuple(sorted(i for b in self.blocks for i in b))

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(sorted((len(b) for b in self.blocks), reverse=True))

    def key(self) -> str:
        return "".join("{" + ",".join(str(i + 1) for i in b) + "}" for b in self.blocks) or "{}"


def set_partitions(items: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All partitions of ``items`` into nonempty blocks."""
    items = list(items)
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + ((first,) + sub[i],) + sub[i + 1 :]
        yield ((first,),) + sub


def partition_shapes(s: int) -> list[tuple[int, ...]]:
    """Integer partitions of s, sorted descending within each shape."""
    if s == 0:
        return [()]
    shapes: list[tuple[int, ...]] = []

    def rec(remaining: int, cap: int, prefix: tuple[int, ...]):
        if remaining == 0:
            shapes.append(prefix)
            return
        for part in range(min(cap, remaining), 0, -1):
            rec(remaining - part, part, prefix + (part,))

    rec(s, s, ())
    return shapes


def shape_multiplicity(s: int, shape: tuple[int, ...]) -> int:
    """Number of set partitions of an s-set with the given block sizes."""
    if sum(shape) != s:
        raise ConfigurationError("shape must sum to the set size")
    count = math.factorial(s)
    for part in shape:
        count //= math.factorial(part)
    for mult in [list(shape).count(v) for v in set(shape)]:
        count //= math.factorial(mult)
    return count


# ---------------------------------------------------------------------------
# core machinery


def _weighted_tensor(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Absorb sqrt(weights) into every mode of the tensor."""
    out = np.asarray(values, dtype=float).copy()
    sw = np.sqrt(np.asarray(weights, dtype=float))
    d = out.ndim
    for axis in range(d):
        shape = [1] * d
        shape[axis] = len(sw)
        out *= sw.reshape(shape)
    return out


def _flatten_blocks(t: np.ndarray, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    """Transpose coordinates into block order and merge each block's axes."""
    order = [i for b in blocks for i in b]
    t = np.transpose(t, order)
    dims = []
    pos = 0
    for b in blocks:
        size = 1
        for _ in b:
            size *= t.shape[pos]
            pos += 1
        dims.append(size)
    return t.reshape(dims)


def _als_injective_norm(
    t: np.ndarray,
    restarts: int = _ALS_RESTARTS,
    rng: np.random.Generator | None = None,
) -> float:
    """Alternating block maximization of |<t, u_1 x ... x u_m>|."""
    m = t.ndim
    if not np.any(t):
        return 0.0
    if m == 1:
        return float(np.linalg.norm(t))
    if m == 2:
        return float(np.linalg.svd(t, compute_uv=False)[0])
    rng = rng or np.random.default_rng(0)
    best = 0.0
    axes = list(range(m))
    for _ in range(restarts):
        us = [None] * m
        for j in range(m):
            v = rng.standard_normal(t.shape[j])
            us[j] = v / np.linalg.norm(v)
        prev = 0.0
        for _ in range(_ALS_MAX_SWEEPS):
            current = prev
            for j in axes:
                # contract all modes except j, highest axis first
                h = t
                for a in sorted((x for x in axes if x != j), reverse=True):
                    h = np.tensordot(h, us[a], axes=([a], [0]))
                nh = float(np.linalg.norm(h))
                if nh == 0.0:
                    break
                us[j] = h / nh
                assert nh >= current - 1e-9  # objective nondecreasing per update
                current = nh
            if current - prev < _ALS_GAIN_TOL:
                prev = current
                break
            prev = current
        best = max(best, prev)
    return best


def partition_norm(
    g: DiscreteKernel | StepKernel,
    partition: Partition | Sequence[Sequence[int]],
    restarts: int = _ALS_RESTARTS,
    rng: np.random.Generator | None = None,
) -> float:
    """Supremum of the weighted multilinear form over unit-L2 factors."""
    d = g.order
    if not isinstance(partition, Partition):
        partition = Partition(d, tuple(tuple(b) for b in partition))
    if partition.d != d or partition.covered != tuple(range(d)):
        raise ConfigurationError("partition must cover all coordinate slots")
    t = _flatten_blocks(_weighted_tensor(g.values, g.weights), partition.blocks)
    return _als_injective_norm(t, restarts=restarts, rng=rng)


def conditional_norm_sup(
    g: DiscreteKernel | StepKernel,
    k: int,
    partition: Partition | Sequence[Sequence[int]] | None = None,
) -> float:
    """Max over frozen first-k cell assignments of the slice partition norm."""
    d = g.order
    if not 0 <= k <= d:
        raise ConfigurationError(f"k must be in 0..{d}")
    if k == d:
        return float(np.max(np.abs(g.values))) if g.values.size else 0.0
    rest = tuple(range(k, d))
    if partition is None:
        partition = Partition(d, (rest,))
    elif not isinstance(partition, Partition):
        partition = Partition(d, tuple(tuple(b) for b in partition))
    if partition.covered != rest:
        raise ConfigurationError("partition must cover exactly the unfrozen slots")
    values = np.asarray(g.values, dtype=float)
    w = np.asarray(g.weights, dtype=float)
    if k == 0:
        return partition_norm(g, Partition(d, partition.blocks))
    m = partition.size
    r = len(w)
    if m == 1:
        # slice L2 norms, fully vectorized
        sq = values**2
        for _ in range(d - k):
            sq = np.tensordot(sq, w, axes=([sq.ndim - 1], [0]))
        return float(np.sqrt(np.max(sq)))
    if m == 2 and d - k == 2:
        flat = values.reshape((-1, r, r))
        sw = np.sqrt(w)
        scaled = flat * sw[None, :, None] * sw[None, None, :]
        sv = np.linalg.svd(scaled, compute_uv=False)
        return float(np.max(sv[:, 0]))
    # general fallback: loop over frozen assignments
    if r**k > 100_000:
        raise SizeError("too many frozen-slot assignments")
    shifted = Partition(d - k, tuple(tuple(i - k for i in b) for b in partition.blocks))
    best = 0.0
    for idx in np.ndindex(*(r,) * k):
        slice_kernel = DiscreteKernel(w, values[idx])
        best = max(best, partition_norm(slice_kernel, shifted))
    return best


# ---------------------------------------------------------------------------
# brute-force oracle


def _sphere_grid(dim: int, step_deg: float) -> np.ndarray:
    """Unit vectors covering the sphere at the given angular resolution."""
    step = math.radians(step_deg)
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = np.arange(0.0, 2 * math.pi, step)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if dim == 3:
        thetas = np.arange(0.0, math.pi + step / 2, step)
        pts = []
        for th in thetas:
            ring = max(1, int(round(2 * math.pi * math.sin(th) / step)))
            phis = np.arange(ring) * 2 * math.pi / ring
            pts.append(
                np.stack(
                    [
                        np.sin(th) * np.cos(phis),
                        np.sin(th) * np.sin(phis),
                        np.full(ring, math.cos(th)),
                    ],
                    axis=1,
                )
            )
        return np.concatenate(pts, axis=0)
    raise SizeError("spherical grid supported up to dimension 3")


def brute_force_norm(
    g: DiscreteKernel | StepKernel,
    partition: Partition | Sequence[Sequence[int]],
    starts: int = _BRUTE_STARTS,
    seed: int = 1234,
) -> float:
    """Dense-search oracle for the partition norm on small tensors.

    Projected gradient ascent from many random starts, plus an exhaustive
    spherical grid when the factor spaces are at most 3-dimensional.
    """
    d = g.order
    if not isinstance(partition, Partition):
        partition = Partition(d, tuple(tuple(b) for b in partition))
    values = np.asarray(g.values, dtype=float)
    if values.size > _BRUTE_CAP:
        raise SizeError(f"brute-force oracle capped at {_BRUTE_CAP} entries")
    if not np.any(values):
        return 0.0
    t = _flatten_blocks(_weighted_tensor(values, g.weights), partition.blocks)
    m = t.ndim
    if m == 1:
        return float(np.linalg.norm(t))
    rng = np.random.default_rng(seed)
    best = _gradient_ascent_batch(t, starts, rng)
    if m == 2 and t.shape[0] <= 3:
        grid = _sphere_grid(t.shape[0], 2.0)
        inner = grid @ t.reshape(t.shape[0], -1)
        best = max(best, float(np.max(np.linalg.norm(inner.reshape(len(grid), *t.shape[1:]), axis=-1))))
    elif m == 3 and t.shape[0] <= 3 and t.shape[1] <= 3:
        g1 = _sphere_grid(t.shape[0], 4.0)
        g2 = _sphere_grid(t.shape[1], 4.0)
        for chunk in np.array_split(g1, max(1, len(g1) // 256)):
            # chunk: (c, n1); contract to (c, n2, n3) then with g2 -> (c, g2, n3)
            a = np.tensordot(chunk, t, axes=([1], [0]))
            b = np.einsum("cjk,gj->cgk", a, g2)
            best = max(best, float(np.max(np.linalg.norm(b, axis=-1))))
    return best


def _gradient_ascent_batch(t: np.ndarray, starts: int, rng: np.random.Generator) -> float:
    """Batched projected gradient ascent on the product of unit spheres."""
    m = t.ndim
    us = []
    for j in range(m):
        v = rng.standard_normal((starts, t.shape[j]))
        us.append(v / np.linalg.norm(v, axis=1, keepdims=True))
    letters = "abcdefgh"[:m]
    form_spec = letters + "," + ",".join(f"B{c}" for c in letters) + "->B"
    best = 0.0
    gamma = 0.5
    for _ in range(300):
        vals = np.einsum(form_spec, t, *us)
        best = max(best, float(np.max(np.abs(vals))))
        new_us = []
        for j in range(m):
            others = [f"B{c}" for i, c in enumerate(letters) if i != j]
            spec = letters + "," + ",".join(others) + f"->B{letters[j]}"
            grad = np.einsum(spec, t, *[us[i] for i in range(m) if i != j])
            # ascend on |F|: flip gradient where the form is negative
            step = us[j] + gamma * np.sign(vals)[:, None] * grad
            norms = np.linalg.norm(step, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            new_us.append(step / norms)
        us = new_us
    vals = np.einsum(form_spec, t, *us)
    return max(best, float(np.max(np.abs(vals))))


# ---------------------------------------------------------------------------
# norm tables and closed-form quantities


@dataclass
class NormTable:
    """All conditional partition norms of a symmetric kernel, keyed by shape."""

    d: int
    entries: dict[tuple[int, tuple[int, ...]], float] = field(default_factory=dict)

    @property
    def l2(self) -> float:
        return self.entries[(0, (self.d,))]

    def B(self, k: int) -> float:
        """Simplified-bound quantity: single-block norm of the last d-k slots."""
        shape = (self.d - k,) if k < self.d else ()
        return self.entries[(k, shape)]

    def items(self):
        return self.entries.items()

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "entries": {
                    f"{k}/" + ("+".join(map(str, shape)) or "empty"): v
                    for (k, shape), v in sorted(self.entries.items())
                },
            },
            indent=2,
        )


def build_norm_table(g: DiscreteKernel | StepKernel) -> NormTable:
    """Enumerate all (k, partition-shape) conditional norms; d <= 4.

    Only partition shapes matter because the kernel is symmetric, so one
    canonical partition per shape is evaluated.
    """
    d = g.order
    if d > 4:
        raise SizeError("norm tables supported up to order 4")
    table = NormTable(d=d)
    for k in range(d + 1):
        for shape in partition_shapes(d - k):
            blocks = []
            pos = k
            for part in shape:
                blocks.append(tuple(range(pos, pos + part)))
                pos += part
            if k == d:
                value = conditional_norm_sup(g, d)
            else:
                value = conditional_norm_sup(g, k, Partition(d, tuple(blocks)))
            table.entries[(k, shape)] = value
    return table


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def ball_measures(grid: Grid, r: float) -> np.ndarray:
    """lambda(B(x_i, r)) for every grid cell, on the discrete measure."""
    from .geometry import distance

    pts = grid.midpoints
    out = np.empty(grid.n_cells)
    for i in range(grid.n_cells):
        d = distance(pts[i][None, :], pts, grid.metric)
        out[i] = float(np.sum(grid.weights[d <= r]))
    return out


def subgraph_bound_quantities(
    space: SpaceConfig | Grid, r: float, ks: Sequence[int]
) -> tuple[dict[int, float], float]:
    """A_{r,k} = integral of ball-measure^k and B_r = sup ball measure.

    Closed form on a constant-density torus for r below half the side;
    exact discrete sums on a grid.
    """
    if r <= 0:
        raise ConfigurationError("radius must be positive")
    if isinstance(space, SpaceConfig):
        if space.kind != "torus":
            raise ConfigurationError("closed forms require a torus; use a Grid otherwise")
        if r > 0.5:
            raise ConfigurationError("radius must be below half the torus side")
        c = space.density
        ball = c * unit_ball_volume(space.dimension) * r**space.dimension
        mass = space.total_mass
        return {k: mass * ball**k for k in ks}, ball
    balls = ball_measures(space, r)
    a = {k: float(np.sum(balls**k * space.weights)) for k in ks}
    return a, float(np.max(balls))
