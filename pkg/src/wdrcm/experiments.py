"""Declarative experiment runner: JSON config in, CSV rows and a manifest out.

A config names one experiment kind, the model parameters, the grids it needs,
a replication count, and a master seed (wall-clock seeding is not allowed:
identical config and seed must reproduce identical CSV bytes).  Every emitted
column is registered in ``SCHEMAS``; rows carry a schema version tag.
"""

from __future__ import annotations

import csv
import itertools
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .aba import giant_fraction_trajectory
from .clusters import pc_sweep, theta_replication_rows, wilson_interval
from .hierarchy import success_curve
from .model import Kernel, ModelParams, Profile
from .paths import (
    MarkedPath,
    catalan,
    count_two_skeleton_paths,
    path_to_tree,
    skeleton_local_maxima,
    skeleton_scan,
    tree_to_path,
)
from .rng import generator
from .verify import (
    LEMMAS,
    random_admissible_pair,
    verify_i_rho,
    verify_lemma_grid,
    verify_two_connection,
)

SCHEMA_VERSION = "1"

SCHEMAS: dict[str, list[str]] = {
    "percolation_rows": [
        "gamma", "delta", "beta", "p", "d", "domain", "L", "R", "seed",
        "n_vertices", "n_edges", "largest_cluster", "origin_size",
        "origin_reach", "reaches_R", "wraps",
    ],
    "percolation_summary": [
        "gamma", "delta", "beta", "p", "d", "domain", "L", "R",
        "replications", "reach_freq", "ci_low", "ci_high",
    ],
    "construct_rows": [
        "gamma", "delta", "beta", "p", "d", "s0", "alpha1", "alpha2", "K",
        "seed", "steps_completed", "success",
    ],
    "construct_summary": [
        "gamma", "delta", "beta", "p", "d", "s0", "alpha1", "alpha2", "K",
        "replications", "success_freq", "ci_low", "ci_high",
    ],
    "aba": [
        "gamma", "delta", "beta", "p", "d", "t", "seed", "n_vertices",
        "n_edges", "largest_fraction", "oldest_component_fraction",
        "xi_1", "xi_10", "xi_100",
    ],
    "verify": [
        "lemma", "point", "lhs", "rhs", "relation", "margin", "method",
        "tolerance", "passed", "lhs_error",
    ],
    "paths_selftest": ["check", "cases", "failures", "passed"],
}

KINDS = ("sweep", "theta", "paths-selftest", "verify", "construct", "aba")


class ConfigError(ValueError):
    """Invalid experiment config; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: ModelParams
    seed: int
    replications: int
    options: dict

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        kind = raw.get("kind")
        if kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}, got {kind!r}")
        if "seed" not in raw:
            raise ConfigError("seed", "master seed is required (no wall-clock seeding)")
        if not isinstance(raw["seed"], int):
            raise ConfigError("seed", "must be an integer")
        params_raw = raw.get("params", {})
        if not isinstance(params_raw, dict):
            raise ConfigError("params", "must be an object")
        try:
            kernel = Kernel(params_raw.get("kernel", "pa"))
        except ValueError:
            raise ConfigError("params.kernel",
                              f"unknown kernel {params_raw.get('kernel')!r}") from None
        try:
            profile = Profile(params_raw.get("profile", "polynomial"))
        except ValueError:
            raise ConfigError("params.profile",
                              f"unknown profile {params_raw.get('profile')!r}") from None
        try:
            params = ModelParams(
                d=params_raw.get("d", 1), gamma=params_raw.get("gamma", 0.5),
                beta=params_raw.get("beta", 1.0), delta=params_raw.get("delta", 2.0),
                p=params_raw.get("p", 1.0), A=params_raw.get("A", 1.0),
                intensity=params_raw.get("intensity", 1.0),
                kernel=kernel, profile=profile)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None
        replications = raw.get("replications", 1)
        if not (isinstance(replications, int) and replications >= 1):
            raise ConfigError("replications", "must be a positive integer")
        options = {k: v for k, v in raw.items()
                   if k not in ("kind", "seed", "params", "replications")}
        cfg = ExperimentConfig(kind=kind, params=params, seed=raw["seed"],
                               replications=replications, options=options)
        cfg._validate_options()
        return cfg

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return ExperimentConfig.from_dict(raw)

    def _require_grid(self, name: str):
        grid = self.options.get(name)
        if not isinstance(grid, list) or not grid:
            raise ConfigError(name, "must be a nonempty list")
        if not all(isinstance(v, (int, float)) for v in grid):
            raise ConfigError(name, "entries must be numbers")
        return [float(v) for v in grid]

    def _validate_options(self) -> None:
        kind = self.kind
        if kind in ("theta", "sweep"):
            domain = self.options.get("domain", "torus")
            if domain not in ("torus", "box"):
                raise ConfigError("domain", "must be 'torus' or 'box'")
        if kind == "theta":
            L = self.options.get("L")
            if not isinstance(L, (int, float)) or L <= 0:
                raise ConfigError("L", "must be a positive number")
            R = self.options.get("R")
            if R is not None and (not isinstance(R, (int, float)) or not 0 < R < L / 2):
                raise ConfigError("R", "must lie in (0, L/2)")
        elif kind == "sweep":
            self._require_grid("p_grid")
            self._require_grid("L_grid")
        elif kind == "construct":
            self._require_grid("s0_grid")
            K = self.options.get("K", 3)
            if not (isinstance(K, int) and K >= 0):
                raise ConfigError("K", "must be a non-negative integer")
        elif kind == "aba":
            grid = self._require_grid("t_grid")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError("t_grid", "must be strictly increasing")
        elif kind == "verify":
            lemmas = self.options.get("lemmas", "all")
            if lemmas != "all":
                if not isinstance(lemmas, list) or not lemmas:
                    raise ConfigError("lemmas", "must be 'all' or a nonempty list")
                bad = [x for x in lemmas if x not in LEMMAS]
                if bad:
                    raise ConfigError("lemmas", f"unknown lemma ids {bad}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, schema: str, rows: list[dict]) -> None:
    columns = SCHEMAS[schema]
    for row in rows:
        unknown = set(row) - set(columns)
        if unknown:
            raise ValueError(f"columns {sorted(unknown)} not in schema {schema!r}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns + ["schema_version"])
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns] + [SCHEMA_VERSION])


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    outputs: list[str]
    manifest: str


def run(config: ExperimentConfig, out_dir, seed_override: int | None = None) -> RunResult:
    """Dispatch the experiment, write CSVs plus a JSON manifest, and clean up
    partial outputs on failure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = config.seed if seed_override is None else seed_override
    t0 = time.time()
    written: list[Path] = []
    extras: dict = {}
    exit_code = 0
    try:
        if config.kind == "theta":
            L = float(config.options["L"])
            R = config.options.get("R")
            rows = theta_replication_rows(config.params, L,
                                          None if R is None else float(R),
                                          config.replications, seed,
                                          config.options.get("domain", "torus"))
            path = out / "theta.csv"
            write_csv(path, "percolation_rows", rows)
            written.append(path)
            successes = sum(r["reaches_R"] for r in rows)
            phat, lo, hi = wilson_interval(successes, len(rows))
            extras["theta"] = {"estimate": phat, "ci_low": lo, "ci_high": hi}
        elif config.kind == "sweep":
            res = pc_sweep(config.params,
                           [float(p) for p in config.options["p_grid"]],
                           [float(L) for L in config.options["L_grid"]],
                           config.replications, seed,
                           domain_kind=config.options.get("domain", "torus"))
            rows_path = out / "sweep_rows.csv"
            summary_path = out / "sweep_summary.csv"
            write_csv(rows_path, "percolation_rows", res.rows)
            write_csv(summary_path, "percolation_summary", res.summary)
            written.extend([rows_path, summary_path])
            extras["transition_window"] = res.transition_window
        elif config.kind == "construct":
            rows, summary = success_curve(
                [float(s) for s in config.options["s0_grid"]],
                int(config.options.get("K", 3)), config.replications,
                config.params, seed)
            rows_path = out / "construct_rows.csv"
            summary_path = out / "construct_summary.csv"
            write_csv(rows_path, "construct_rows", rows)
            write_csv(summary_path, "construct_summary", summary)
            written.extend([rows_path, summary_path])
        elif config.kind == "aba":
            rows = giant_fraction_trajectory(
                config.params, config.params.p,
                [float(t) for t in config.options["t_grid"]],
                config.replications, seed)
            path = out / "aba.csv"
            write_csv(path, "aba", rows)
            written.append(path)
        elif config.kind == "verify":
            rows, any_failed = _run_verify(config, seed)
            path = out / "verify.csv"
            write_csv(path, "verify", rows)
            written.append(path)
            if any_failed:
                exit_code = 3
        elif config.kind == "paths-selftest":
            rows, any_failed = _run_selftest(config, seed)
            path = out / "paths_selftest.csv"
            write_csv(path, "paths_selftest", rows)
            written.append(path)
            if any_failed:
                exit_code = 3
        else:  # pragma: no cover - guarded by config validation
            raise ConfigError("kind", f"unhandled kind {config.kind!r}")
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    manifest_path = out / "manifest.json"
    manifest = {
        "tool": "wdrcm",
        "tool_version": __version__,
        "config": _config_echo(config, seed),
        "outputs": [p.name for p in written],
        "wall_time_s": time.time() - t0,
        "extras": extras,
        "exit_code": exit_code,
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunResult(exit_code=exit_code, outputs=[str(p) for p in written],
                     manifest=str(manifest_path))


def _config_echo(config: ExperimentConfig, seed: int) -> dict:
    p = config.params
    return {
        "kind": config.kind, "seed": seed, "replications": config.replications,
        "params": {
            "d": p.d, "gamma": p.gamma, "beta": p.beta, "delta": p.delta,
            "p": p.p, "A": p.A, "intensity": p.intensity,
            "kernel": p.kernel.value, "profile": p.profile.value,
        },
        "options": config.options,
    }


def _run_verify(config: ExperimentConfig, seed: int):
    lemmas = config.options.get("lemmas", "all")
    if lemmas == "all":
        lemmas = list(LEMMAS)
    rows = []
    any_failed = False
    for lemma in lemmas:
        for report in verify_lemma_grid(lemma, seed=seed):
            rows.append(report.row())
            any_failed |= not report.passed
    for d in config.options.get("i_rho_dims", [1, 2, 3]):
        params = config.params.with_(d=int(d), profile=Profile.SURGERY)
        report = verify_i_rho(params)
        rows.append(report.row())
        any_failed |= not report.passed
    two_conn = config.options.get("two_connection")
    if two_conn:
        n_configs = int(two_conn.get("n_configs", 5))
        reps = int(two_conn.get("replications", 20_000))
        params = config.params.with_(profile=Profile.SURGERY)
        rng = generator(seed, 997)
        for i in range(n_configs):
            x, y = random_admissible_pair(params, rng)
            report = verify_two_connection(params, x, y, reps, seed + i)
            rows.append(report.row())
            any_failed |= not report.passed
    return rows, any_failed


def _run_selftest(config: ExperimentConfig, seed: int):
    opts = config.options.get("selftest", {})
    catalan_max = int(opts.get("catalan_max", 6))
    exhaustive_max = int(opts.get("max_exhaustive", 6))
    random_cases = int(opts.get("random_cases", 2000))
    max_len = int(opts.get("max_len", 12))
    bijection_max = int(opts.get("bijection_max", 5))
    rows = []

    failures = sum(count_two_skeleton_paths(k) != catalan(k)
                   for k in range(catalan_max + 1))
    rows.append({"check": "catalan_counts", "cases": catalan_max + 1,
                 "failures": failures, "passed": int(failures == 0)})

    cases = failures = 0
    for n in range(1, exhaustive_max + 1):
        base = [(i + 1) / (n + 1) for i in range(n)]
        for perm in itertools.permutations(range(n)):
            path = MarkedPath([(i, base[perm[i]]) for i in range(n)])
            cases += 1
            if skeleton_scan(path).indices != skeleton_local_maxima(path).indices:
                failures += 1
    rows.append({"check": "skeleton_equivalence_exhaustive", "cases": cases,
                 "failures": failures, "passed": int(failures == 0)})

    rng = generator(seed, 31)
    cases = failures = 0
    for _ in range(random_cases):
        n = int(rng.integers(1, max_len + 1))
        marks = 1.0 - rng.random(n)
        if len(set(marks.tolist())) != n:
            continue
        path = MarkedPath(list(enumerate(marks.tolist())))
        cases += 1
        if skeleton_scan(path).indices != skeleton_local_maxima(path).indices:
            failures += 1
    rows.append({"check": "skeleton_equivalence_random", "cases": cases,
                 "failures": failures, "passed": int(failures == 0)})

    cases = failures = 0
    endpoints = ((0, 0.10), (1, 0.05))
    for k in range(bijection_max + 1):
        connectors = [(2 + i, 0.5 + (i + 1) / (k + 1) * 0.4) for i in range(k)]
        for perm in itertools.permutations(connectors):
            path = MarkedPath((endpoints[0],) + perm + (endpoints[1],))
            cases += 1
            tree = path_to_tree(path)
            back = tree_to_path(tree, endpoints)
            if back.entries != path.entries:
                failures += 1
    rows.append({"check": "bijection_roundtrip", "cases": cases,
                 "failures": failures, "passed": int(failures == 0)})

    any_failed = any(not r["passed"] for r in rows)
    return rows, any_failed
