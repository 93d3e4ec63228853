"""Experiment orchestration: config parsing, seeding, worker pools, and CSV
emission for every experiment in the repo.

Config precedence is CLI flags > JSON config file > defaults.  Every
experiment writes one CSV atomically (temp file + rename), validates it
against its declared column schema, and prints a one-line JSON summary.
Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from specsim.bucketing import (
    alignment_error,
    bucket,
    large_bucket_spectrum_error,
    misclassification,
    tomography_estimate,
)
from specsim.classical import classical_two_bucket_lmm, sample_from
from specsim.linalg import random_density_from_spectrum, sorted_eigenvalues, tv_distance
from specsim.moments import moment_estimates, renyi_estimate
from specsim.pipeline import desk_params, run_pipeline
from specsim.povm import PovmRecord, measure_uniform_povm_batch
from specsim.schur import (
    fixed_exponent_fit,
    game_success,
    min_copies,
    power_law_fit,
    spectra_family,
)
from specsim.streams import derive_stream

__all__ = ["ExperimentConfig", "main", "run_experiment", "validate_csv"]

EXPERIMENTS = (
    "tomography",
    "moments",
    "renyi",
    "bucket",
    "spectrum",
    "classical",
    "game",
    "scan",
    "fit",
)

SCHEMAS = {
    "tomography": ["d", "n", "trial", "seed", "opnorm_err"],
    "moments": ["d", "k", "n", "trial", "estimate", "truth"],
    "renyi": ["d", "k", "n", "trial", "seed", "estimate", "truth"],
    "bucket": ["d", "B", "eps", "n", "trial", "seed", "rank_r", "large_tv", "miscls", "alignment"],
    "spectrum": ["d", "eps", "trial", "seed", "tv_error", "alignment_err", "miscls", "rank_r"],
    "classical": ["d", "n", "eps", "trial", "seed", "tv_error"],
    "game": ["d", "n", "m", "seed", "success"],
    "scan": ["family_k", "d", "n_min", "m", "threshold", "seed"],
    "fit": ["family_k", "a", "c", "b", "rss"],
}

REFERENCE_EXPONENT = {2: 1.0, 3: 4.0 / 3.0, 4: 1.5}

STATE_KINDS = ("dirichlet", "uniform", "pure")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d: int = 8
    eps: float = 0.3
    k: int = 2
    n: int | None = None
    m: int = 10_000
    trials: int = 20
    seed: int = 0
    B: float | None = None
    K: int | None = None
    c1: float = 2.2
    c2: float = 2.0
    c_k: float = 0.1
    c_b: float = 2.2
    v_mult: float = 0.02
    threshold: float = 0.7
    state_kind: str = "dirichlet"
    d_list: tuple[int, ...] | None = None
    threads: int | None = None
    input_path: str | None = None
    output_path: str = "results.csv"

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.d < 1:
            raise ConfigError("d must be positive")
        if not 0.0 < self.eps <= 1.0:
            raise ConfigError("eps must lie in (0, 1]")
        if self.k < 1:
            raise ConfigError("k must be positive")
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be positive")
        if self.m < 1:
            raise ConfigError("m must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.B is not None and not 0.0 < self.B <= 1.0:
            raise ConfigError("B must lie in (0, 1]")
        if self.K is not None and self.K < 1:
            raise ConfigError("K must be positive")
        if not 0.5 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0.5, 1)")
        if self.state_kind not in STATE_KINDS:
            raise ConfigError(f"state_kind must be one of {STATE_KINDS}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        for name in ("c1", "c2", "c_k", "c_b", "v_mult"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.d_list is not None:
            if not self.d_list or any(x < 1 for x in self.d_list):
                raise ConfigError("d_list entries must be positive")
            object.__setattr__(self, "d_list", tuple(int(x) for x in self.d_list))

    @classmethod
    def from_sources(cls, experiment: str, file_values: dict, cli_values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)} - {"experiment"}
        merged: dict = {}
        for source, values in (("config file", file_values), ("command line", cli_values)):
            for key, value in values.items():
                if key not in known:
                    raise ConfigError(f"unknown key {key!r} in {source}")
                merged[key] = value
        return cls(experiment=experiment, **merged)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _state_spectrum(kind: str, d: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "uniform":
        return np.full(d, 1.0 / d)
    if kind == "pure":
        out = np.zeros(d)
        out[0] = 1.0
        return out
    return np.sort(rng.dirichlet(np.ones(d)))[::-1]


def _trial_seed(cfg: ExperimentConfig, trial: int) -> int:
    return int(derive_stream(cfg.seed, cfg.experiment, "trial", trial).integers(0, 2**62))


def _default_copies(cfg: ExperimentConfig) -> int:
    if cfg.n is not None:
        return cfg.n
    return max(100, 50 * cfg.d)


def _run_tomography(cfg: ExperimentConfig, trial: int) -> list:
    seed = _trial_seed(cfg, trial)
    rng = derive_stream(seed, "state")
    alpha = _state_spectrum(cfg.state_kind, cfg.d, rng)
    rho = random_density_from_spectrum(alpha, rng)
    n = _default_copies(cfg)
    vecs = measure_uniform_povm_batch(rho, n, derive_stream(seed, "povm"))
    rho_hat = tomography_estimate([PovmRecord(vector=v, dim=cfg.d) for v in vecs])
    err = float(np.max(np.abs(sorted_eigenvalues(rho_hat - rho))))
    return [cfg.d, n, trial, seed, err]


def _run_moments(cfg: ExperimentConfig, trial: int) -> list:
    seed = _trial_seed(cfg, trial)
    rng = derive_stream(seed, "state")
    alpha = _state_spectrum(cfg.state_kind, cfg.d, rng)
    rho = random_density_from_spectrum(alpha, rng)
    n = _default_copies(cfg)
    vecs = measure_uniform_povm_batch(rho, n, derive_stream(seed, "povm"))
    records = [PovmRecord(vector=v, dim=cfg.d) for v in vecs]
    est = moment_estimates(records, cfg.k).value(cfg.k)
    truth = float(np.sum(alpha**cfg.k))
    return [cfg.d, cfg.k, n, trial, est, truth]


def _run_renyi(cfg: ExperimentConfig, trial: int) -> list:
    seed = _trial_seed(cfg, trial)
    rng = derive_stream(seed, "state")
    alpha = _state_spectrum(cfg.state_kind, cfg.d, rng)
    rho = random_density_from_spectrum(alpha, rng)
    n = _default_copies(cfg)
    vecs = measure_uniform_povm_batch(rho, n, derive_stream(seed, "povm"))
    records = [PovmRecord(vector=v, dim=cfg.d) for v in vecs]
    est = renyi_estimate(moment_estimates(records, cfg.k).value(cfg.k), cfg.k)
    truth = math.log(float(np.sum(alpha**cfg.k))) / (1 - cfg.k)
    return [cfg.d, cfg.k, n, trial, seed, est, truth]


def _run_bucket(cfg: ExperimentConfig, trial: int) -> list:
    seed = _trial_seed(cfg, trial)
    rng = derive_stream(seed, "state")
    alpha = _state_spectrum(cfg.state_kind, cfg.d, rng)
    rho = random_density_from_spectrum(alpha, rng)
    b_threshold = cfg.B if cfg.B is not None else 0.25
    n = cfg.n if cfg.n is not None else math.ceil(cfg.c2 * cfg.d / (b_threshold**2 * cfg.eps**2))
    vecs = measure_uniform_povm_batch(rho, n, derive_stream(seed, "povm"))
    outcome = bucket(tomography_estimate([PovmRecord(vector=v, dim=cfg.d) for v in vecs]), b_threshold)
    return [
        cfg.d,
        b_threshold,
        cfg.eps,
        n,
        trial,
        seed,
        outcome.rank_r,
        large_bucket_spectrum_error(rho, outcome),
        misclassification(rho, outcome.pi),
        alignment_error(rho, outcome.pi),
    ]


def _run_spectrum(cfg: ExperimentConfig, trial: int) -> list:
    seed = _trial_seed(cfg, trial)
    rng = derive_stream(seed, "state")
    alpha = _state_spectrum(cfg.state_kind, cfg.d, rng)
    rho = random_density_from_spectrum(alpha, rng)
    params = desk_params(
        cfg.d,
        cfg.eps,
        seed=seed,
        c_k=cfg.c_k,
        c_b=cfg.c_b,
        c2=cfg.c2,
        v_mult=cfg.v_mult,
        n_copies=cfg.n,
        threshold_b=cfg.B,
        **({"k_moments": cfg.K} if cfg.K is not None else {}),
    )
    run = run_pipeline(rho, params)
    diag = run.diagnostics
    return [
        cfg.d,
        cfg.eps,
        trial,
        seed,
        tv_distance(run.spectrum, alpha),
        diag.alignment,
        diag.misclassification,
        diag.rank_r,
    ]


CLASSICAL_BUDGET_C = 1.0  # n = C d/(log d eps^4), calibrated once


def _run_classical(cfg: ExperimentConfig, trial: int) -> list:
    seed = _trial_seed(cfg, trial)
    rng = derive_stream(seed, "state")
    alpha = _state_spectrum(cfg.state_kind, cfg.d, rng)
    n = cfg.n if cfg.n is not None else math.ceil(
        CLASSICAL_BUDGET_C * cfg.d / (math.log(cfg.d) * cfg.eps**4)
    )
    threshold_l = cfg.B if cfg.B is not None else min(
        1.0, 4.0 * math.log(cfg.d) / (n * cfg.eps**2)
    )
    k_max = cfg.K if cfg.K is not None else max(1, round(0.5 * math.log(cfg.d)))
    samples = sample_from(alpha, 2 * n, derive_stream(seed, "samples"))
    est = classical_two_bucket_lmm(samples, cfg.d, cfg.eps, k_max, threshold_l)
    return [cfg.d, n, cfg.eps, trial, seed, tv_distance(est, np.sort(alpha)[::-1])]


TRIAL_RUNNERS = {
    "tomography": _run_tomography,
    "moments": _run_moments,
    "renyi": _run_renyi,
    "bucket": _run_bucket,
    "spectrum": _run_spectrum,
    "classical": _run_classical,
}


def _rows_game(cfg: ExperimentConfig) -> list[list]:
    pair = spectra_family(cfg.k, cfg.d)
    n = cfg.n if cfg.n is not None else 2 * cfg.d
    success = game_success(pair, n, cfg.m, derive_stream(cfg.seed, "game", cfg.k, cfg.d, n))
    return [[cfg.d, n, cfg.m, cfg.seed, success]]


def _rows_scan(cfg: ExperimentConfig) -> list[list]:
    dims = cfg.d_list if cfg.d_list is not None else (cfg.d,)
    rows = []
    for d in dims:
        if d % cfg.k:
            raise ConfigError(f"scan dimension {d} not divisible by family k={cfg.k}")
        pair = spectra_family(cfg.k, d)
        n_min = min_copies(
            pair, cfg.threshold, cfg.m, derive_stream(cfg.seed, "scan", cfg.k, d)
        )
        rows.append([cfg.k, d, n_min, cfg.m, cfg.threshold, cfg.seed])
    return rows


def _rows_fit(cfg: ExperimentConfig) -> list[list]:
    if not cfg.input_path:
        raise ConfigError("fit requires input_path pointing at a scan CSV")
    try:
        with open(cfg.input_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != SCHEMAS["scan"]:
                raise ConfigError(f"input CSV is not a scan CSV: header {header}")
            data = [(int(r[0]), float(r[1]), float(r[2])) for r in reader]
    except OSError as exc:
        raise ConfigError(f"cannot read input CSV: {exc}") from exc
    if not data:
        raise ConfigError("input scan CSV has no rows")
    rows = []
    for family in sorted({fam for fam, _, _ in data}):
        points = [(d, n) for fam, d, n in data if fam == family]
        try:
            a, c, b = power_law_fit(points)
        except ValueError as exc:
            raise ConfigError(f"cannot fit family {family}: {exc}") from exc
        _, _, rss = fixed_exponent_fit(points, c)
        rows.append([family, a, c, b, rss])
        c_ref = REFERENCE_EXPONENT.get(family)
        if c_ref is not None:
            a_ref, b_ref, rss_ref = fixed_exponent_fit(points, c_ref)
            rows.append([family, a_ref, c_ref, b_ref, rss_ref])
    return rows


def _thread_count(cfg: ExperimentConfig) -> int:
    if cfg.threads is not None:
        return cfg.threads
    env = os.environ.get("THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"THREADS environment variable {env!r} is not an integer")
    return 1


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run one experiment, write its CSV atomically, return the summary."""
    if cfg.experiment in TRIAL_RUNNERS:
        runner = TRIAL_RUNNERS[cfg.experiment]
        workers = _thread_count(cfg)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(lambda t: runner(cfg, t), range(cfg.trials)))
        else:
            rows = [runner(cfg, t) for t in range(cfg.trials)]
    elif cfg.experiment == "game":
        rows = _rows_game(cfg)
    elif cfg.experiment == "scan":
        rows = _rows_scan(cfg)
    else:
        rows = _rows_fit(cfg)

    columns = SCHEMAS[cfg.experiment]
    out_dir = os.path.dirname(os.path.abspath(cfg.output_path)) or "."
    fd, tmp_path = tempfile.mkstemp(prefix=".specsim-", suffix=".csv", dir=out_dir)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        os.replace(tmp_path, cfg.output_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    validate_csv(cfg.output_path, columns)
    return {"experiment": cfg.experiment, "rows": len(rows), "output": cfg.output_path}


def validate_csv(path: str, columns: list[str]) -> None:
    """Check header equality and that every row parses to numbers."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != columns:
            raise RuntimeError(f"CSV header {header} != schema {columns}")
        for row in reader:
            if len(row) != len(columns):
                raise RuntimeError(f"CSV row has {len(row)} fields, expected {len(columns)}")
            for value in row:
                float(value)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specsim", description=__doc__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", dest="output_path", type=str, default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--B", type=float, default=None)
        p.add_argument("--K", type=int, default=None)
        p.add_argument("--c1", type=float, default=None)
        p.add_argument("--c2", type=float, default=None)
        p.add_argument("--c-k", dest="c_k", type=float, default=None)
        p.add_argument("--c-b", dest="c_b", type=float, default=None)
        p.add_argument("--v-mult", dest="v_mult", type=float, default=None)
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--state-kind", dest="state_kind", type=str, default=None)
        p.add_argument("--d-list", dest="d_list", type=str, default=None)
        p.add_argument("--input", dest="input_path", type=str, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values: dict = {}
        if args.config:
            with open(args.config) as fh:
                file_values = json.load(fh)
            file_values.pop("experiment", None)
        cli_values = {
            key: value
            for key, value in vars(args).items()
            if key not in ("experiment", "config") and value is not None
        }
        if isinstance(cli_values.get("d_list"), str):
            cli_values["d_list"] = tuple(int(x) for x in cli_values["d_list"].split(","))
        if isinstance(file_values.get("d_list"), list):
            file_values["d_list"] = tuple(int(x) for x in file_values["d_list"])
        cfg = ExperimentConfig.from_sources(args.experiment, file_values, cli_values)
    except (ConfigError, json.JSONDecodeError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_experiment(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: partial CSV already removed
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
