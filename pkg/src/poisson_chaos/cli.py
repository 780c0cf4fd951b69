"""Configuration-driven command line interface.

Subcommands: simulate, decompose, norms, bound, experiment.  Configuration
is TOML (primary) or JSON, with repeatable --set key=value overrides using
dotted paths.  Every successful run writes a manifest.json capturing the
resolved configuration, the seed and the package version, so the run can
be reproduced exactly.

Exit codes: 0 success, 1 configuration/validation failure, 2 a statistical
or identity check failed (the tool itself worked).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bounds import (
    BoundSpec,
    curve_csv,
    integral_tail_bound,
    ou_bound,
    simplified_tail_bound,
    subgraph_tail_bound,
    ustat_tail_bound,
)
from .chaos import chaos_expand, ustat_mean, ustat_variance
from .errors import ConfigurationError, PoissonChaosError
from .experiments import (
    ExperimentPlan,
    decoupling_check,
    empirical_tail,
    lil_trajectory,
    maximal_inequality_check,
    variance_check,
)
from .kernels import (
    DiscreteKernel,
    StepKernel,
    discretize,
    grid_from_config,
    kernel_from_config,
    to_step,
)
from .norms import build_norm_table
from .point_process import SpaceConfig, sample_process

__all__ = ["main", "parse_config", "run"]


def _parse_override(text: str) -> tuple[list[str], object]:
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} must have the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def parse_config(path: str | None, overrides: list[str]) -> dict:
    """Load TOML/JSON configuration and apply dotted-path overrides."""
    cfg: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigurationError(f"config file not found: {path}")
        if p.suffix == ".json":
            cfg = json.loads(p.read_text())
        else:
            with open(p, "rb") as fh:
                cfg = tomllib.load(fh)
    for text in overrides:
        keys, value = _parse_override(text)
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override path {'.'.join(keys)} crosses a scalar")
        node[keys[-1]] = value
    return cfg


def _validate(cfg: dict, requirements: dict[str, type]) -> list[str]:
    """Collect all missing/ill-typed fields; dotted paths in messages."""
    errors = []
    for path, expected in requirements.items():
        node = cfg
        for key in path.split("."):
            if not isinstance(node, dict) or key not in node:
                errors.append(f"{path}: missing")
                node = None
                break
            node = node[key]
        if node is None:
            continue
        if expected is float and isinstance(node, (int, float)) and not isinstance(node, bool):
            if not math.isfinite(float(node)) or float(node) <= 0:
                errors.append(f"{path}: must be a positive finite number, got {node}")
        elif expected is int and (not isinstance(node, int) or isinstance(node, bool) or node < 1):
            errors.append(f"{path}: must be a positive integer, got {node!r}")
        elif expected is list and (not isinstance(node, list) or not node):
            errors.append(f"{path}: must be a nonempty list")
        elif expected is dict and not isinstance(node, dict):
            errors.append(f"{path}: must be a table")
        elif expected is str and not isinstance(node, str):
            errors.append(f"{path}: must be a string")
    return errors


def _resolve_seed(args, cfg: dict) -> int | None:
    if args.seed is not None:
        return int(args.seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("POISSON_CHAOS_SEED")
    return int(env) if env is not None else None


def _resolve_kernel(cfg: dict):
    """Kernel from config; analytic kernels are discretized on [grid]."""
    kernel = kernel_from_config(cfg["kernel"])
    if isinstance(kernel, (StepKernel, DiscreteKernel)):
        return kernel
    if "grid" not in cfg:
        raise ConfigurationError("grid: missing (required to discretize an analytic kernel)")
    return discretize(kernel, grid_from_config(cfg["grid"]))


def _write(outdir: Path, name: str, text: str) -> str:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / name).write_text(text)
    return name


def _manifest(outdir: Path, command: str, cfg: dict, seed, threads: int, outputs: list[str]):
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "threads": threads,
        "config": cfg,
        "outputs": outputs,
    }
    _write(outdir, "manifest.json", json.dumps(manifest, indent=2, default=str))


def _cmd_simulate(cfg: dict, outdir: Path, seed: int) -> tuple[int, list[str]]:
    errors = _validate(cfg, {"space": dict, "plan.T": float})
    if errors:
        raise ConfigurationError("; ".join(errors))
    space = SpaceConfig.from_dict(cfg["space"])
    sample = sample_process(space, float(cfg["plan"]["T"]), seed)
    outputs = [
        _write(outdir, "sample.csv", sample.to_csv()),
        _write(outdir, "sample.json", sample.to_json()),
    ]
    return 0, outputs


def _cmd_decompose(cfg: dict, outdir: Path, seed) -> tuple[int, list[str]]:
    errors = _validate(cfg, {"kernel": dict, "plan.T": float})
    if errors:
        raise ConfigurationError("; ".join(errors))
    kernel = _resolve_kernel(cfg)
    T = float(cfg["plan"]["T"])
    decomp = chaos_expand(kernel)
    outputs = []
    for n, gn in enumerate(decomp.projected, start=1):
        outputs.append(_write(outdir, f"projected_{n}.csv", gn.to_csv()))
    report = {
        "order": decomp.order,
        "mean_coefficient": decomp.mean_coefficient,
        "mean": ustat_mean(kernel, T),
        "variance": ustat_variance(kernel, T),
        "degeneracy_order": decomp.degeneracy_order(),
        "binomials": list(decomp.binomials),
    }
    outputs.append(_write(outdir, "decomposition.json", json.dumps(report, indent=2)))
    return 0, outputs


def _cmd_norms(cfg: dict, outdir: Path, seed) -> tuple[int, list[str]]:
    errors = _validate(cfg, {"kernel": dict})
    if errors:
        raise ConfigurationError("; ".join(errors))
    kernel = _resolve_kernel(cfg)
    table = build_norm_table(kernel)
    return 0, [_write(outdir, "norms.json", table.to_json())]


def _cmd_bound(cfg: dict, outdir: Path, seed) -> tuple[int, list[str]]:
    errors = _validate(cfg, {"bound.family": str, "bound.u_grid": list})
    if errors:
        raise ConfigurationError("; ".join(errors))
    bcfg = cfg["bound"]
    family = bcfg["family"]
    us = [float(u) for u in bcfg["u_grid"]]
    constant = float(bcfg.get("constant", 1.0))
    if family in ("integral_tail", "simplified", "ustat_tail"):
        kernel = _resolve_kernel(cfg)
        T = float(bcfg.get("T", 1.0))
        if family == "integral_tail":
            table = build_norm_table(kernel)
            results = [integral_tail_bound(table, T, u, constant) for u in us]
        elif family == "simplified":
            table = build_norm_table(kernel)
            B = [table.B(k) for k in range(kernel.order + 1)]
            results = [simplified_tail_bound(B, T, u, constant) for u in us]
        else:
            tables = [build_norm_table(gn) for gn in chaos_expand(kernel).projected]
            results = [ustat_tail_bound(tables, T, u, constant) for u in us]
    elif family == "subgraph":
        results = [
            subgraph_tail_bound(
                float(bcfg["var"]), float(bcfg["t"]), float(bcfg["b_dr"]),
                int(bcfg["d"]), u, constant,
            )
            for u in us
        ]
    elif family == "ou_quadratic":
        results = [
            ou_bound(
                float(bcfg["rho"]), float(bcfg["A"]), float(bcfg.get("c_nu", 1.0)),
                float(bcfg["T"]), u, constant,
            )[0]
            for u in us
        ]
    else:
        raise ConfigurationError(f"bound.family: unsupported family {family!r}")
    return 0, [_write(outdir, "bound_curve.csv", curve_csv(us, results))]


def _cmd_experiment(cfg: dict, outdir: Path, seed: int) -> tuple[int, list[str]]:
    errors = _validate(cfg, {"experiment.kind": str})
    if errors:
        raise ConfigurationError("; ".join(errors))
    ecfg = cfg["experiment"]
    kind = ecfg["kind"]
    outputs = []
    status = 0
    if kind == "tail":
        errors = _validate(cfg, {"kernel": dict, "experiment.T": float,
                                 "experiment.M": int, "experiment.u_grid": list})
        if errors:
            raise ConfigurationError("; ".join(errors))
        kernel = _resolve_kernel(cfg)
        statistic = ecfg.get("statistic", "integral")
        if statistic == "integral" and isinstance(kernel, DiscreteKernel):
            kernel, _ = to_step(kernel)
        bound = None
        if "bound_family" in ecfg:
            table = build_norm_table(kernel)
            if ecfg["bound_family"] == "simplified":
                bound = BoundSpec(
                    "simplified",
                    {"B": [table.B(k) for k in range(kernel.order + 1)],
                     "T": float(ecfg["T"])},
                    float(ecfg.get("constant", 1.0)),
                )
            else:
                bound = BoundSpec(
                    "integral_tail", {"table": table, "T": float(ecfg["T"])},
                    float(ecfg.get("constant", 1.0)),
                )
        plan = ExperimentPlan(
            kind=statistic,
            kernel=kernel,
            T=float(ecfg["T"]),
            replications=int(ecfg["M"]),
            u_grid=tuple(float(u) for u in ecfg["u_grid"]),
            master_seed=seed,
            bound=bound,
        )
        result = empirical_tail(plan)
        outputs.append(_write(outdir, "tail.csv", result.to_csv()))
        outputs.append(
            _write(outdir, "tail.json", json.dumps(result.manifest(), indent=2))
        )
    elif kind == "variance":
        errors = _validate(cfg, {"kernel": dict, "experiment.t": float, "experiment.M": int})
        if errors:
            raise ConfigurationError("; ".join(errors))
        report = variance_check(_resolve_kernel(cfg), float(ecfg["t"]), int(ecfg["M"]), seed)
        outputs.append(
            _write(outdir, "variance.json", json.dumps(report.manifest(), indent=2))
        )
        status = 0 if report.passed else 2
    elif kind == "maximal":
        errors = _validate(cfg, {"kernel": dict, "experiment.T": float,
                                 "experiment.M": int, "experiment.u_grid": list})
        if errors:
            raise ConfigurationError("; ".join(errors))
        kernel = _resolve_kernel(cfg)
        if isinstance(kernel, DiscreteKernel):
            kernel, _ = to_step(kernel)
        report = maximal_inequality_check(
            kernel, float(ecfg["T"]), int(ecfg["M"]),
            [float(u) for u in ecfg["u_grid"]], seed,
        )
        outputs.append(_write(outdir, "maximal.json", json.dumps(report.manifest(), indent=2)))
        status = 0 if report.dominating_c is not None else 2
    elif kind == "decoupling":
        errors = _validate(cfg, {"kernel": dict, "experiment.n": int,
                                 "experiment.M": int, "experiment.u_grid": list})
        if errors:
            raise ConfigurationError("; ".join(errors))
        report = decoupling_check(
            _resolve_kernel(cfg), int(ecfg["n"]), int(ecfg["M"]),
            [float(u) for u in ecfg["u_grid"]], seed,
        )
        outputs.append(
            _write(outdir, "decoupling.json", json.dumps(report.manifest(), indent=2))
        )
        status = 0 if report.dominating_c is not None else 2
    elif kind == "lil":
        errors = _validate(cfg, {"kernel": dict, "experiment.max_exponent": int,
                                 "experiment.seeds": int})
        if errors:
            raise ConfigurationError("; ".join(errors))
        result = lil_trajectory(
            _resolve_kernel(cfg), int(ecfg["max_exponent"]), int(ecfg["seeds"]), seed,
            min_exponent=int(ecfg.get("min_exponent", 2)),
        )
        outputs.append(_write(outdir, "lil.csv", result.to_csv()))
        summary = {
            "degeneracy_order": result.degeneracy_order,
            "cluster_lower": result.cluster.lower if result.cluster else None,
            "cluster_upper": result.cluster.upper if result.cluster else None,
            "running_max": np.abs(result.normalized_ustat()).max(axis=1).tolist(),
        }
        outputs.append(_write(outdir, "lil.json", json.dumps(summary, indent=2)))
    else:
        raise ConfigurationError(f"experiment.kind: unknown kind {kind!r}")
    return status, outputs


_COMMANDS = {
    "simulate": (_cmd_simulate, True),
    "decompose": (_cmd_decompose, False),
    "norms": (_cmd_norms, False),
    "bound": (_cmd_bound, False),
    "experiment": (_cmd_experiment, True),
}


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="poisson-chaos",
        description="Simulation and verification toolkit for Poisson U-statistics "
        "and multiple stochastic integrals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML or JSON configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed (overrides config/env)")
        p.add_argument("--threads", type=int, default=None, help="worker thread cap")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="override a config entry by dotted path (repeatable)",
        )
    args = parser.parse_args(argv)
    handler, needs_seed = _COMMANDS[args.command]
    try:
        cfg = parse_config(args.config, args.overrides)
        seed = _resolve_seed(args, cfg)
        if needs_seed and seed is None:
            raise ConfigurationError(
                "seed: missing (pass --seed, set seed in the config, "
                "or export POISSON_CHAOS_SEED)"
            )
        threads = args.threads or int(os.environ.get("POISSON_CHAOS_THREADS", "1"))
        outdir = Path(args.out)
        status, outputs = handler(cfg, outdir, seed)
    except PoissonChaosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _manifest(Path(args.out), args.command, cfg, seed, threads, outputs)
    return status


def main() -> None:
    sys.exit(run())
