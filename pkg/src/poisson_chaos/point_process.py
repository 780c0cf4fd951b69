"""Spatiotemporal Poisson point processes on finite-mass windows.

A sample is a finite list of (location, arrival time) pairs on a bounded
window.  Three window kinds are supported:

* ``finite``  -- a list of weighted cells; a location is a cell index,
* ``box``     -- an axis-aligned box in R^N with constant intensity density,
* ``torus``   -- the unit torus in dimension N with constant intensity.

Sampling draws the total count from a Poisson law and then i.i.d.
(location, time) pairs, sorted by arrival time.  Every operation is pure
given (inputs, seed); per-replication randomness is derived from
``numpy`` seed sequences of the form ``[master_seed, replication_index]``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "SpaceConfig",
    "SpatioTemporalSample",
    "MarkedSample",
    "sample_process",
    "restrict",
    "mark_sample",
    "factorial_tuples",
    "constant_mark",
    "two_point_mark",
]


@dataclass(frozen=True)
class SpaceConfig:
    """A finite-mass window carrying the intensity measure."""

    kind: str  # "finite" | "box" | "torus"
    weights: tuple[float, ...] = ()  # finite: cell weights
    dimension: int = 0
    sides: tuple[float, ...] = ()  # box: side lengths
    density: float = 0.0  # box/torus: constant intensity density

    def __post_init__(self):
        if self.kind not in ("finite", "box", "torus"):
            raise ConfigurationError(f"unknown space kind {self.kind!r}")
        if self.kind == "finite":
            if any(w < 0 for w in self.weights):
                raise ConfigurationError("cell weights must be nonnegative")
        else:
            if self.density < 0:
                raise ConfigurationError("intensity density must be nonnegative")
            if self.dimension < 1:
                raise ConfigurationError("dimension must be positive")
        if not math.isfinite(self.total_mass):
            raise ConfigurationError("total mass must be finite")

    @classmethod
    def finite(cls, weights: Sequence[float]) -> "SpaceConfig":
        return cls(kind="finite", weights=tuple(float(w) for w in weights))

    @classmethod
    def box(cls, sides: Sequence[float], density: float = 1.0) -> "SpaceConfig":
        sides = tuple(float(s) for s in sides)
        if any(s <= 0 for s in sides):
            raise ConfigurationError("box sides must be positive")
        return cls(kind="box", dimension=len(sides), sides=sides, density=float(density))

    @classmethod
    def torus(cls, dimension: int, density: float = 1.0) -> "SpaceConfig":
        return cls(kind="torus", dimension=dimension, density=float(density))

    @property
    def total_mass(self) -> float:
        if self.kind == "finite":
            return float(sum(self.weights))
        if self.kind == "box":
            return self.density * float(np.prod(self.sides))
        return self.density  # unit torus has volume 1

    @property
    def n_cells(self) -> int:
        if self.kind != "finite":
            raise ConfigurationError("n_cells is defined only for finite spaces")
        return len(self.weights)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "finite":
            d["weights"] = list(self.weights)
        else:
            d["dimension"] = self.dimension
            d["density"] = self.density
            if self.kind == "box":
                d["sides"] = list(self.sides)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceConfig":
        kind = d.get("kind")
        try:
            if kind == "finite":
                return cls.finite(d["weights"])
            if kind == "box":
                return cls.box(d["sides"], d.get("density", 1.0))
            if kind == "torus":
                return cls.torus(int(d["dimension"]), d.get("density", 1.0))
        except KeyError as exc:
            raise ConfigurationError(f"space config missing key {exc.args[0]!r}") from None
        raise ConfigurationError(f"unknown space kind {kind!r}")


@dataclass(frozen=True)
class SpatioTemporalSample:
    """A realized process: locations plus sorted arrival times on [0, T]."""

    locations: np.ndarray  # (n,) int cell ids or (n, N) float coordinates
    times: np.ndarray  # (n,) arrival times, nondecreasing
    horizon: float
    space: SpaceConfig
    seed: int

    def __post_init__(self):
        if len(self.times) != len(self.locations):
            raise ConfigurationError("locations and times must align")
        if len(self.times) and (self.times.min() < 0 or self.times.max() > self.horizon):
            raise ConfigurationError("arrival times must lie in [0, horizon]")

    def __len__(self) -> int:
        return len(self.times)

    def cell_counts(self, t: float | None = None) -> np.ndarray:
        """Counts per cell of points arrived by time t (finite spaces only)."""
        if self.space.kind != "finite":
            raise ConfigurationError("cell_counts requires a finite space")
        t = self.horizon if t is None else t
        m = int(np.searchsorted(self.times, t, side="right"))
        return np.bincount(
            np.asarray(self.locations[:m], dtype=int), minlength=self.space.n_cells
        ).astype(float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        if self.space.kind == "finite":
            writer.writerow(["index", "cell", "arrival_time"])
            for i, (c, t) in enumerate(zip(self.locations, self.times)):
                writer.writerow([i, int(c), repr(float(t))])
        else:
            dim = self.space.dimension
            writer.writerow(["index"] + [f"x_{j+1}" for j in range(dim)] + ["arrival_time"])
            for i in range(len(self)):
                row = [i] + [repr(float(v)) for v in np.atleast_1d(self.locations[i])]
                row.append(repr(float(self.times[i])))
                writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "space": self.space.to_dict(),
                "horizon": self.horizon,
                "seed": self.seed,
                "points": [
                    {
                        "location": (
                            int(self.locations[i])
                            if self.space.kind == "finite"
                            else [float(v) for v in np.atleast_1d(self.locations[i])]
                        ),
                        "time": float(self.times[i]),
                    }
                    for i in range(len(self))
                ],
            }
        )


@dataclass(frozen=True)
class MarkedSample:
    """A sample with one mark attached to each point."""

    base: SpatioTemporalSample
    marks: np.ndarray
    mark_space: str = "real"

    def __post_init__(self):
        if len(self.marks) != len(self.base):
            raise ConfigurationError("marks must align with points")

    def __len__(self) -> int:
        return len(self.base)


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one replication of a seeded campaign."""
    return np.random.default_rng([int(master_seed), int(index)])


def sample_process(space: SpaceConfig, T: float, seed: int) -> SpatioTemporalSample:
    """Draw one realization on ``space`` over the time window [0, T]."""
    if not (math.isfinite(T) and T > 0):
        raise ConfigurationError(f"horizon T must be positive and finite, got {T}")
    mass = space.total_mass
    if not math.isfinite(mass):
        raise ConfigurationError("total mass must be finite")
    rng = np.random.default_rng(int(seed))
    n = int(rng.poisson(T * mass))
    times = np.sort(rng.uniform(0.0, T, size=n))
    if space.kind == "finite":
        if mass > 0:
            probs = np.asarray(space.weights) / mass
            locations = rng.choice(space.n_cells, size=n, p=probs)
        else:
            locations = np.zeros(0, dtype=int)
    elif space.kind == "box":
        locations = rng.uniform(0.0, 1.0, size=(n, space.dimension)) * np.asarray(space.sides)
    else:  # torus
        locations = rng.uniform(0.0, 1.0, size=(n, space.dimension))
    return SpatioTemporalSample(
        locations=locations, times=times, horizon=float(T), space=space, seed=int(seed)
    )


def restrict(sample: SpatioTemporalSample, t: float) -> SpatioTemporalSample:
    """Keep points with arrival time <= t; the horizon shrinks to t."""
    if not 0 <= t <= sample.horizon:
        raise ConfigurationError(
            f"restriction time {t} outside [0, {sample.horizon}]"
        )
    m = int(np.searchsorted(sample.times, t, side="right"))
    return SpatioTemporalSample(
        locations=sample.locations[:m],
        times=sample.times[:m],
        horizon=float(t),
        space=sample.space,
        seed=sample.seed,
    )


def constant_mark(value: float) -> Callable:
    """Mark law putting all mass at ``value``."""

    def law(location, rng: np.random.Generator) -> float:
        return value

    return law


def two_point_mark(p_plus: float = 0.5) -> Callable:
    """Mark law +1 with probability p_plus, -1 otherwise (spin marks)."""

    def law(location, rng: np.random.Generator) -> float:
        return 1.0 if rng.random() < p_plus else -1.0

    return law


def mark_sample(
    sample: SpatioTemporalSample, mark_law: Callable, seed: int
) -> MarkedSample:
    """Attach conditionally independent marks, mark_i ~ K(X_i, .)."""
    rng = np.random.default_rng(int(seed))
    marks = np.asarray([mark_law(sample.locations[i], rng) for i in range(len(sample))])
    if marks.size == 0:
        marks = np.zeros(0)
    return MarkedSample(base=sample, marks=marks)


def factorial_tuples(sample_or_n, d: int) -> Iterator[tuple[int, ...]]:
    """Ordered d-tuples of pairwise distinct point indices.

    Yields exactly n(n-1)...(n-d+1) tuples; empty when n < d.
    """
    if d < 1:
        raise ConfigurationError(f"tuple order d must be >= 1, got {d}")
    n = sample_or_n if isinstance(sample_or_n, int) else len(sample_or_n)
    return itertools.permutations(range(n), d)
