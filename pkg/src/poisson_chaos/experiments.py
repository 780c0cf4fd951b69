"""Seeded Monte Carlo campaigns: tail comparison, identity checks,
maximal/decoupling inequality shape checks, and LIL trajectory recording.

All campaigns are deterministic given (plan, master seed).  For kernels on
finite cell spaces the per-cell counts are a sufficient statistic for every
functional evaluated here, so replications draw count vectors directly
instead of materializing point lists; this keeps 10^5-replication runs in
the low seconds.  Statistical comparisons use 5-standard-error bands or
Wilson 95% intervals; empirical constants are reported, never asserted.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import BoundSpec, ClusterSet, lil_cluster_set, lil_normalizer
from .chaos import chaos_expand, factorial_measure_integral
from .errors import ConfigurationError, SizeError
from .kernels import DiscreteKernel, StepKernel, l2_norm_sq, mean_coefficient
from .point_process import SpaceConfig, replication_rng, sample_process

__all__ = [
    "ExperimentPlan",
    "ExperimentResult",
    "VarianceReport",
    "MaximalReport",
    "DecouplingReport",
    "LILResult",
    "wilson_interval",
    "empirical_tail",
    "variance_check",
    "maximal_inequality_check",
    "decoupling_check",
    "lil_trajectory",
    "simulate_integral_batch",
    "simulate_ustat_batch",
]


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson 95% (by default) score interval for a binomial proportion."""
    if n < 1:
        raise ConfigurationError("Wilson interval requires n >= 1")
    phat = successes / n
    denom = 1.0 + z**2 / n
    center = (phat + z**2 / (2 * n)) / denom
    half = z / denom * math.sqrt(phat * (1 - phat) / n + z**2 / (4 * n**2))
    return max(0.0, center - half), min(1.0, center + half)


def _count_product(values: np.ndarray, comp: np.ndarray) -> np.ndarray:
    """Batched full contraction of a d-tensor with per-replication vectors."""
    d = values.ndim
    letters = "abcd"[:d]
    spec = letters + "," + ",".join(f"m{c}" for c in letters) + "->m"
    return np.einsum(spec, values, *([comp] * d))


def _batched_factorial_integral(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """factorial_measure_integral for a batch of count vectors (M, R)."""
    d = values.ndim
    if d == 1:
        return counts @ values
    if d == 2:
        return np.einsum("ma,ab,mb->m", counts, values, counts) - counts @ np.diag(values)
    # general order: enumerate cell tuples; R^d stays small in practice
    out = np.zeros(len(counts))
    for idx in np.ndindex(*values.shape):
        v = values[idx]
        if v == 0.0:
            continue
        factor = np.ones(len(counts))
        used: dict[int, int] = {}
        for j in idx:
            c = used.get(j, 0)
            factor *= counts[:, j] - c
            used[j] = c + 1
        out += v * factor
    return out


def simulate_integral_batch(
    kernel: StepKernel, T: float, M: int, master_seed: int
) -> np.ndarray:
    """M independent draws of the order-d compensated integral at time T."""
    rng = replication_rng(master_seed, 0)
    cm = np.asarray(kernel.cell_measures, dtype=float)
    counts = rng.poisson(T * cm, size=(M, len(cm))).astype(float)
    return _count_product(kernel.coeffs, counts - T * cm)


def simulate_ustat_batch(
    kernel: StepKernel | DiscreteKernel, t: float, M: int, master_seed: int
) -> np.ndarray:
    """M independent draws of the U-statistic at time t (cell kernels)."""
    rng = replication_rng(master_seed, 0)
    w = np.asarray(kernel.weights, dtype=float)
    counts = rng.poisson(t * w, size=(M, len(w))).astype(float)
    return _batched_factorial_integral(np.asarray(kernel.values, float), counts)


# ---------------------------------------------------------------------------
# empirical tails


@dataclass
class ExperimentPlan:
    """One seeded tail-comparison campaign."""

    kind: str  # "integral" | "ustat"
    kernel: StepKernel | DiscreteKernel
    T: float
    replications: int
    u_grid: tuple[float, ...]
    master_seed: int
    bound: BoundSpec | None = None
    name: str = "tail"

    def __post_init__(self):
        if self.kind not in ("integral", "ustat"):
            raise ConfigurationError(f"unknown campaign kind {self.kind!r}")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not self.u_grid or list(self.u_grid) != sorted(self.u_grid):
            raise ConfigurationError("u grid must be nonempty and sorted")
        if self.T <= 0:
            raise ConfigurationError("horizon must be positive")
        if self.replications * len(self.kernel.weights) > 5e8:
            raise SizeError("campaign too large; reduce replications or cells")


@dataclass
class ExperimentResult:
    """Empirical tail curve with Wilson bands, paired bound, calibration."""

    plan_name: str
    master_seed: int
    u_grid: tuple[float, ...]
    frequencies: tuple[float, ...]
    wilson_low: tuple[float, ...]
    wilson_high: tuple[float, ...]
    bound_values: tuple[float, ...] | None
    calibrated_c: float | None
    summaries: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["u", "frequency", "wilson_low", "wilson_high"]
        if self.bound_values is not None:
            header.append("bound")
        writer.writerow(header)
        for i, u in enumerate(self.u_grid):
            row = [
                repr(float(u)),
                repr(self.frequencies[i]),
                repr(self.wilson_low[i]),
                repr(self.wilson_high[i]),
            ]
            if self.bound_values is not None:
                row.append(repr(self.bound_values[i]))
            writer.writerow(row)
        return buf.getvalue()

    def manifest(self) -> dict:
        return {
            "plan": self.plan_name,
            "master_seed": self.master_seed,
            "calibrated_c": self.calibrated_c,
            "summaries": self.summaries,
        }


def empirical_tail(plan: ExperimentPlan) -> ExperimentResult:
    """Empirical P(|X| >= u) across the grid, with the paired bound curve.

    The calibrated constant is the largest c for which 2*exp(-c*E(u))
    dominates the upper Wilson limit at every grid point.
    """
    start = time.perf_counter()
    M = plan.replications
    if plan.kind == "integral":
        draws = simulate_integral_batch(plan.kernel, plan.T, M, plan.master_seed)
        centered = np.abs(draws)
    else:
        draws = simulate_ustat_batch(plan.kernel, plan.T, M, plan.master_seed)
        centered = np.abs(draws - plan.T ** plan.kernel.order * mean_coefficient(plan.kernel))
    freqs, lows, highs = [], [], []
    for u in plan.u_grid:
        hits = int(np.count_nonzero(centered >= u))
        lo, hi = wilson_interval(hits, M)
        freqs.append(hits / M)
        lows.append(lo)
        highs.append(hi)
    bound_values = None
    calibrated = None
    if plan.bound is not None:
        bound_values = tuple(plan.bound.evaluate(u) for u in plan.u_grid)
        ratios = []
        for u, hi in zip(plan.u_grid, highs):
            exponent = plan.bound.exponent(u)
            if math.isfinite(exponent) and exponent > 0 and hi > 0:
                ratios.append(math.log(2.0 / hi) / exponent)
        calibrated = min(ratios) if ratios else math.inf
    return ExperimentResult(
        plan_name=plan.name,
        master_seed=plan.master_seed,
        u_grid=tuple(float(u) for u in plan.u_grid),
        frequencies=tuple(freqs),
        wilson_low=tuple(lows),
        wilson_high=tuple(highs),
        bound_values=bound_values,
        calibrated_c=calibrated,
        summaries={
            "replications": M,
            "mean": float(np.mean(draws)),
            "variance": float(np.var(draws, ddof=1)) if M > 1 else 0.0,
        },
        runtime=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class VarianceReport:
    empirical_mean: float
    predicted_mean: float
    empirical_var: float
    predicted_var: float
    standard_error: float  # of the empirical variance estimator
    deviation_in_se: float
    passed: bool

    def manifest(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def variance_check(
    kernel: StepKernel | DiscreteKernel, t: float, M: int, master_seed: int
) -> VarianceReport:
    """Compare empirical Var U_t against the chaos-expansion variance."""
    if M < 2:
        raise ConfigurationError("variance check requires at least 2 replications")
    from .chaos import ustat_mean, ustat_variance

    draws = simulate_ustat_batch(kernel, t, M, master_seed)
    emp_var = float(np.var(draws, ddof=1))
    centered = draws - draws.mean()
    m4 = float(np.mean(centered**4))
    se = math.sqrt(max(m4 - emp_var**2, 0.0) / M)
    predicted = ustat_variance(kernel, t)
    dev = abs(emp_var - predicted) / se if se > 0 else 0.0
    return VarianceReport(
        empirical_mean=float(np.mean(draws)),
        predicted_mean=ustat_mean(kernel, t),
        empirical_var=emp_var,
        predicted_var=predicted,
        standard_error=se,
        deviation_in_se=dev,
        passed=bool(dev <= 5.0 or (se == 0.0 and emp_var == predicted)),
    )


# ---------------------------------------------------------------------------
# maximal inequality


@dataclass(frozen=True)
class MaximalReport:
    u_grid: tuple[float, ...]
    p_sup: tuple[float, ...]  # empirical P(sup_t |I_t| >= u)
    p_end: dict  # C -> tuple of empirical P(|I_T| >= u/C)
    dominating_c: float | None  # smallest C with p_sup <= C * p_end across grid

    def manifest(self) -> dict:
        return {
            "u_grid": list(self.u_grid),
            "p_sup": list(self.p_sup),
            "p_end": {str(c): list(v) for c, v in self.p_end.items()},
            "dominating_c": self.dominating_c,
        }


def maximal_inequality_check(
    kernel: StepKernel,
    T: float,
    M: int,
    u_grid: Sequence[float],
    master_seed: int,
    constants: Sequence[float] = (1.0, 2.0, 4.0, 8.0),
    grid_points: int = 256,
) -> MaximalReport:
    """Empirical comparison of sup_{t<=T} |I_t| with the endpoint |I_T|.

    The sup is evaluated over all jump times plus a fixed time grid, a
    lower bound on the true sup (between evaluation points trajectories
    are deterministic drifts, so the approximation error is the drift of
    one grid step).
    """
    cm = np.asarray(kernel.cell_measures, dtype=float)
    space = SpaceConfig.finite(cm)
    grid = np.linspace(0.0, T, grid_points)
    sups = np.empty(M)
    ends = np.empty(M)
    for i in range(M):
        seed_pair = replication_rng(master_seed, i).integers(0, 2**63 - 1)
        sample = sample_process(space, T, int(seed_pair))
        eval_times = np.unique(np.concatenate([grid, sample.times]))
        if len(sample):
            one_hot = np.zeros((len(sample), len(cm)))
            one_hot[np.arange(len(sample)), np.asarray(sample.locations, int)] = 1.0
            cum = np.cumsum(one_hot, axis=0)
            idx = np.searchsorted(sample.times, eval_times, side="right")
            counts = np.vstack([np.zeros(len(cm)), cum])[idx]
        else:
            counts = np.zeros((len(eval_times), len(cm)))
        comp = counts - eval_times[:, None] * cm
        values = _count_product(kernel.coeffs, comp)
        sups[i] = float(np.max(np.abs(values)))
        ends[i] = abs(values[-1])
    u_grid = tuple(float(u) for u in u_grid)
    p_sup = tuple(float(np.mean(sups >= u)) for u in u_grid)
    p_end = {
        c: tuple(float(np.mean(ends >= u / c)) for u in u_grid) for c in constants
    }
    dominating = None
    for c in sorted(constants):
        if all(ps <= c * pe for ps, pe in zip(p_sup, p_end[c])):
            dominating = c
            break
    return MaximalReport(u_grid=u_grid, p_sup=p_sup, p_end=p_end, dominating_c=dominating)


# ---------------------------------------------------------------------------
# decoupling


@dataclass(frozen=True)
class DecouplingReport:
    u_grid: tuple[float, ...]
    p_coupled: tuple[float, ...]
    p_decoupled: dict  # C -> tuple of empirical P(|decoupled| >= u/C)
    dominating_c: float | None

    def manifest(self) -> dict:
        return {
            "u_grid": list(self.u_grid),
            "p_coupled": list(self.p_coupled),
            "p_decoupled": {str(c): list(v) for c, v in self.p_decoupled.items()},
            "dominating_c": self.dominating_c,
        }


def decoupling_check(
    kernel: DiscreteKernel | StepKernel,
    n: int,
    M: int,
    u_grid: Sequence[float],
    master_seed: int,
    constants: Sequence[float] = (1.0, 2.0, 4.0, 8.0, 16.0),
) -> DecouplingReport:
    """Coupled vs decoupled U-statistics of n i.i.d. points.

    The coupled statistic sums the kernel over distinct index tuples of one
    sample; the decoupled one uses an independent sample per argument slot.
    Reports the smallest constant under which the decoupled tail dominates.
    """
    d = kernel.order
    if n > 50 or d > 3:
        raise SizeError("decoupling check limited to n <= 50, d <= 3")
    if M < 1:
        raise ConfigurationError("decoupling check requires M >= 1")
    w = np.asarray(kernel.weights, dtype=float)
    probs = w / w.sum()
    values = np.asarray(kernel.values, dtype=float)
    rng = replication_rng(master_seed, 0)
    xs = [rng.choice(len(w), size=(M, n), p=probs) for _ in range(d)]
    coupled_counts = np.zeros((M, len(w)))
    rows = np.repeat(np.arange(M), n)
    np.add.at(coupled_counts, (rows, xs[0].ravel()), 1.0)
    coupled = _batched_factorial_integral(values, coupled_counts)
    if d == 1:
        decoupled = coupled.copy()
    elif d == 2:
        c1 = np.zeros((M, len(w)))
        c2 = np.zeros((M, len(w)))
        np.add.at(c1, (rows, xs[0].ravel()), 1.0)
        np.add.at(c2, (rows, xs[1].ravel()), 1.0)
        full = np.einsum("ma,ab,mb->m", c1, values, c2)
        paired = values[xs[0], xs[1]].sum(axis=1)
        decoupled = full - paired
    else:
        c = [np.zeros((M, len(w))) for _ in range(3)]
        for j in range(3):
            np.add.at(c[j], (rows, xs[j].ravel()), 1.0)
        full = np.einsum("ma,abq,mb,mq->m", c[0], values, c[1], c[2])
        # inclusion-exclusion over index coincidences between slots
        p12 = np.einsum("miq,mq->m", values[xs[0], xs[1]], c[2])
        p13 = np.einsum("mib,mb->m", values[xs[0], :, xs[2]], c[1])
        p23 = np.einsum("mia,ma->m", values[:, xs[1], xs[2]].transpose(1, 2, 0), c[0])
        p123 = values[xs[0], xs[1], xs[2]].sum(axis=1)
        decoupled = full - p12 - p13 - p23 + 2.0 * p123
    u_grid = tuple(float(u) for u in u_grid)
    p_coupled = tuple(float(np.mean(np.abs(coupled) >= u)) for u in u_grid)
    p_dec = {
        cc: tuple(float(np.mean(np.abs(decoupled) >= u / cc)) for u in u_grid)
        for cc in constants
    }
    dominating = None
    for cc in sorted(constants):
        if all(pc <= cc * pd for pc, pd in zip(p_coupled, p_dec[cc])):
            dominating = cc
            break
    return DecouplingReport(
        u_grid=u_grid, p_coupled=p_coupled, p_decoupled=p_dec, dominating_c=dominating
    )


# ---------------------------------------------------------------------------
# law of the iterated logarithm


@dataclass
class LILResult:
    """Normalized trajectories at dyadic ladder times, one row per seed."""

    times: np.ndarray  # (L,)
    integral: np.ndarray | None  # (seeds, L) raw compensated integral
    ustat_centered: np.ndarray  # (seeds, L)
    order: int
    degeneracy_order: int
    cluster: ClusterSet

    def normalized_integral(self) -> np.ndarray:
        norm = np.array([lil_normalizer(t, self.order) for t in self.times])
        return self.integral / norm

    def normalized_ustat(self, m: int | None = None) -> np.ndarray:
        m = self.degeneracy_order if m is None else m
        norm = np.array([lil_normalizer(t, self.order, m) for t in self.times])
        return self.ustat_centered / norm

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seed_index", "t", "integral", "ustat_centered"])
        for s in range(self.ustat_centered.shape[0]):
            for j, t in enumerate(self.times):
                writer.writerow(
                    [
                        s,
                        repr(float(t)),
                        repr(float(self.integral[s, j])) if self.integral is not None else "",
                        repr(float(self.ustat_centered[s, j])),
                    ]
                )
        return buf.getvalue()


def lil_trajectory(
    kernel: StepKernel | DiscreteKernel,
    max_exponent: int,
    n_seeds: int,
    master_seed: int,
    min_exponent: int = 2,
) -> LILResult:
    """Record normalized trajectories at times 2^j, j = min..max exponent.

    Each seed evolves a single process by drawing per-cell count increments
    between consecutive ladder times; the compensated integral (step kernels
    only) and the centered U-statistic are recomputed from the counts.
    """
    if min_exponent < 2:
        raise ConfigurationError("ladder must start above e for the normalizer")
    w = np.asarray(kernel.weights, dtype=float)
    mass = float(w.sum())
    if 2.0**max_exponent * mass > 1e7:
        raise SizeError("ladder budget exceeded: 2^J * total mass > 1e7")
    times = 2.0 ** np.arange(min_exponent, max_exponent + 1)
    is_step = isinstance(kernel, StepKernel)
    values = np.asarray(kernel.values, dtype=float)
    mean_c = mean_coefficient(kernel)
    d = kernel.order
    integral = np.zeros((n_seeds, len(times))) if is_step else None
    ustat_c = np.zeros((n_seeds, len(times)))
    for s in range(n_seeds):
        rng = replication_rng(master_seed, s)
        counts = np.zeros(len(w))
        prev = 0.0
        for j, t in enumerate(times):
            counts += rng.poisson((t - prev) * w)
            prev = t
            if is_step:
                comp = counts - t * w
                integral[s, j] = _count_product(kernel.coeffs, comp[None, :])[0]
            ustat_c[s, j] = factorial_measure_integral(values, counts) - t**d * mean_c
    cluster = lil_cluster_set(kernel) if d <= 3 else None
    m = cluster.degeneracy_order if cluster else chaos_expand(kernel).degeneracy_order()
    return LILResult(
        times=times,
        integral=integral,
        ustat_centered=ustat_c,
        order=d,
        degeneracy_order=m,
        cluster=cluster,
    )


def result_manifest(plan_like: dict, results: dict, seed: int) -> str:
    """JSON manifest shared by campaign writers (plan snapshot + outputs)."""
    return json.dumps(
        {"plan": plan_like, "master_seed": seed, "results": results}, indent=2, default=str
    )
