"""Command-line driver.

Each subcommand reads plain-text inputs, writes its artifacts plus a
``manifest.txt`` of every effective parameter into ``--output-dir``, and
exits 0 on success, 1 on bad input, 2 when no IFS structure is found and 3
on an internal integrity violation.  Parameters come from the defaults
below, then an optional ``--config`` file of ``key=value`` lines, then
command-line flags.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from . import io
from .detection import default_grid, detect, estimate_regime_count, find_gap, histogram, nn_diameters
from .embedding import EmbeddingConfig, ami_curve, delay_embed, first_minimum, fnn_curve
from .errors import IfsError, InputError, StructureError
from .ghost import analyze_ghosts, synth_surrogate
from .ifs import HENON_F0, HENON_F1, HENON_F2, Bernoulli, IfsModel, generate
from .separation import evaluate_separation, separate

COMMANDS = ("simulate", "embed", "detect", "separate", "ghost", "evaluate")
MODELS = {
    "henon": (HENON_F0, HENON_F1),
    "henon-f0": (HENON_F0,),
    "henon3": (HENON_F0, HENON_F1, HENON_F2),
}
AUTO = "auto"
DERIVED = "derived."  # manifest keys that record results, skipped when read back as config


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    truth: str | None = None
    output_dir: str = "."
    model: str = "henon"
    T: int = 30_000
    seed: int = 2
    burn_in: int = 1000
    tau: int = 1
    m: int = 3
    k: int | None = None  # 5 for detect, 10 for ghost
    K: int = 40
    J: int = 10_000
    epsilon: str = AUTO  # a number, or auto
    N: str = AUTO  # a count, or auto
    period: int = 215
    shift: float = 200.0
    max_lag: int = 20
    max_m: int = 10
    workers: int = 1


_INT_FIELDS = {"T", "seed", "burn_in", "tau", "m", "k", "K", "J", "period", "max_lag", "max_m", "workers"}


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _INT_FIELDS:
            return int(value)
        if key == "shift":
            return float(value)
        if key == "epsilon" and str(value) != AUTO:
            v = float(value)
            if not v > 0:
                raise ValueError
            return str(value)
        if key == "N" and str(value) != AUTO:
            if int(value) < 1:
                raise ValueError
            return str(int(value))
    except ValueError:
        raise InputError(f"bad value for {key}: {value!r}") from None
    return str(value)


def build_config(command: str, file_values: dict | None = None, flags: dict | None = None) -> RunConfig:
    names = {f.name for f in fields(RunConfig)} - {"command"}
    merged = {}
    for source in (file_values or {}, flags or {}):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key == "command" or key.startswith(DERIVED):
                continue
            if key not in names:
                raise InputError(f"unknown parameter {key!r}")
            if value is not None and value != "none":
                merged[key] = _coerce(key, value)
    cfg = RunConfig(command, **merged)
    if cfg.command not in COMMANDS:
        raise InputError(f"unknown command {cfg.command!r}")
    if cfg.model not in MODELS and cfg.model != "surrogate":
        raise InputError(f"unknown model {cfg.model!r}")
    if cfg.workers < 1:
        raise InputError("workers must be at least 1")
    return cfg


def _need_input(cfg: RunConfig) -> str:
    if not cfg.input:
        raise InputError(f"{cfg.command} needs --input")
    return cfg.input


def _write_histograms(out: Path, report) -> None:
    io.write_histogram(out / "domain_hist.csv", *_hist(report.domain_diameters))
    io.write_histogram(out / "image_hist.csv", *_hist(report.image_diameters))
    if report.regimes is not None:
        rows = []
        for eps, h in report.regimes.histograms.items():
            rows.extend((eps, c, int(n)) for c, n in enumerate(h))
        io.write_rows(out / "component_counts.csv", ["epsilon", "components", "images"], rows)


def _hist(values):
    h = histogram(values, bins=100)
    return h.bin_edges, h.counts


def run_simulate(cfg: RunConfig, out: Path, effective: dict) -> int:
    if cfg.model == "surrogate":
        sur = synth_surrogate(cfg.T, cfg.period, cfg.shift, cfg.seed, burn_in=cfg.burn_in)
        io.write_series(out / "series.csv", sur.series)
        io.write_rows(out / "injected.csv", ["i", "index"], enumerate(sur.injected))
        return 0
    model = IfsModel(MODELS[cfg.model])
    rule = Bernoulli(tuple([1.0 / model.N] * model.N), cfg.seed)
    traj = generate(model, rule, cfg.T, burn_in=cfg.burn_in)
    io.write_cloud(out / "trajectory.csv", traj.cloud, ["x", "y"])
    io.write_indexed(out / "truth.csv", "n_t", traj.regimes)
    return 0


def run_embed(cfg: RunConfig, out: Path, effective: dict) -> int:
    s = io.parse_series_csv(_need_input(cfg))
    ami = ami_curve(s, cfg.max_lag)
    io.write_rows(out / "ami.csv", ["lag_or_m", "value"], enumerate(ami))
    fnn = fnn_curve(s, cfg.tau, cfg.max_m)
    io.write_rows(out / "fnn.csv", ["lag_or_m", "value"], zip(range(1, cfg.max_m + 1), fnn))
    effective["derived.ami_first_minimum"] = first_minimum(ami)
    io.write_cloud(out / "cloud.csv", delay_embed(s, EmbeddingConfig(cfg.tau, cfg.m)))
    return 0


def run_detect(cfg: RunConfig, out: Path, effective: dict) -> int:
    cloud = io.parse_cloud_csv(_need_input(cfg))
    k = cfg.k or 5
    effective["k"] = k
    eps = None if cfg.epsilon == AUTO else float(cfg.epsilon)
    report = detect(cloud, k=k, epsilon=eps, workers=cfg.workers)
    gap = report.gap
    items = {"bimodal": gap.bimodal, "gap_low": gap.gap_low, "gap_high": gap.gap_high,
             "epsilon": report.epsilon, "N": None, "persistent": None}
    if report.regimes is not None:
        items["N"] = report.regimes.N
        items["persistent"] = report.regimes.persistent
        for e, n in report.regimes.per_epsilon.items():
            items[f"N_at_{io.fmt(e)}"] = n
    items["ifs_detected"] = report.ifs_detected
    io.write_keyvalues(out / "gap_report.txt", items)
    _write_histograms(out, report)
    effective["derived.epsilon_effective"] = report.epsilon
    if not report.ifs_detected:
        print("detect: no IFS detected", file=sys.stderr)
        return 2
    return 0


def run_separate(cfg: RunConfig, out: Path, effective: dict) -> int:
    cloud = io.parse_cloud_csv(_need_input(cfg))
    if cfg.epsilon == AUTO:
        _, image = nn_diameters(cloud, cfg.workers)
        gap = find_gap(image)
        if not gap.bimodal:
            raise StructureError("epsilon=auto but the image diameters show no gap")
        eps = gap.epsilon
    else:
        eps = float(cfg.epsilon)
    if cfg.N == AUTO:
        rc = estimate_regime_count(cloud, cfg.k or 5, default_grid(eps), workers=cfg.workers)
        if not rc.persistent:
            raise StructureError("N=auto but the regime count is not persistent")
        N = rc.N
    else:
        N = int(cfg.N)
    effective["derived.epsilon_effective"] = eps
    effective["derived.N_effective"] = N
    result, graph = separate(cloud, eps, N, cfg.K, cfg.J, workers=cfg.workers)
    io.write_indexed(out / "labels.csv", "label", result.labels)
    io.write_rows(out / "census.csv", ["component", "points"], enumerate(result.census))
    effective["derived.n_unidentified"] = result.n_unidentified
    return 0


def run_ghost(cfg: RunConfig, out: Path, effective: dict) -> int:
    s = io.parse_series_csv(_need_input(cfg))
    k = cfg.k or 10
    eps = 30.0 if cfg.epsilon == AUTO else float(cfg.epsilon)
    effective["k"] = k
    effective["derived.epsilon_effective"] = eps
    a = analyze_ghosts(s, EmbeddingConfig(cfg.tau, cfg.m), k, eps, workers=cfg.workers)
    r = a.report
    io.write_keyvalues(out / "ghost_report.txt", {
        "ghosts": r.ghost_indices.size,
        "period": r.period,
        "shift": r.shift,
        "spurious": " ".join(str(i) for i in r.spurious),
        "determinism_failures": a.failures,
    })
    io.write_rows(out / "ghost_indices.csv", ["i", "index"], enumerate(r.ghost_indices))
    io.write_rows(out / "first_differences.csv", ["i", "first_difference"], enumerate(r.first_differences))
    io.write_series(out / "adjusted.csv", a.adjusted)
    return 0


def run_evaluate(cfg: RunConfig, out: Path, effective: dict) -> int:
    labels = io.parse_indexed_ints(_need_input(cfg))
    if not cfg.truth:
        raise InputError("evaluate needs --truth")
    truth = io.parse_indexed_ints(cfg.truth)
    score = evaluate_separation(labels, truth)
    items = {"purity": score.purity, "coverage": score.coverage}
    for lab, p in score.per_label_purity.items():
        items[f"purity_label_{lab}"] = p
    for lab, v in score.permutation.items():
        items[f"label_{lab}_regime"] = v
    io.write_keyvalues(out / "evaluation.txt", items)
    return 0


RUNNERS = {
    "simulate": run_simulate,
    "embed": run_embed,
    "detect": run_detect,
    "separate": run_separate,
    "ghost": run_ghost,
    "evaluate": run_evaluate,
}


def run_pipeline(cfg: RunConfig) -> int:
    """Run one stage; returns the exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    effective = dataclasses.asdict(cfg)
    status = RUNNERS[cfg.command](cfg, out, effective)
    io.write_keyvalues(out / "manifest.txt", effective)
    return status


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value parameter file; flags override it")
    common.add_argument("--input")
    common.add_argument("--truth", help="truth CSV for evaluate")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--model", help="henon, henon-f0, henon3 or surrogate")
    for name in ("T", "seed", "burn-in", "tau", "m", "k", "K", "J", "period", "max-lag", "max-m", "workers"):
        common.add_argument(f"--{name}", dest=name.replace("-", "_"), type=int)
    common.add_argument("--epsilon", help="a positive number or 'auto'")
    common.add_argument("--N", help="a count or 'auto'")
    common.add_argument("--shift", type=float)
    parser = argparse.ArgumentParser(prog="ifsregimes", description="Detect and separate IFS regimes in trajectories.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = vars(make_parser().parse_args(argv))
    command = args.pop("command")
    try:
        file_values = io.read_keyvalues(args.pop("config")) if args.get("config") else {}
        args.pop("config", None)
        cfg = build_config(command, file_values, args)
        return run_pipeline(cfg)
    except IfsError as exc:
        print(f"{command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"{command}: input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
