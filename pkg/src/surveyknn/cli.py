"""Command-line interface.

Subcommands
-----------
estimate      ad-hoc design-weighted k-NN estimates from CSV sample data
diagnose-c4   sampling-fraction balance scan across a population ladder
diagnose-c9   exhaustive partition-conditional dependence scan
study         the consistency (simulated) or wine (real-data) MSE ladder
bounds        unit-ball volumes, bias constants, and rate-shape tables

Every run writes its delimited outputs, one rendered figure, and a
``run_manifest.json`` recording the exact configuration, seed, and
package version, into the output directory (``--out``, else
``$SURVEYKNN_OUT``, else ``./surveyknn-out``).  Exit codes: 0 success,
1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import knn_bias_constant, kn_schedule, rate_bound, unit_ball_volume
from .dataio import (
    read_points_csv,
    read_sample_csv,
    write_matrix_csv,
    write_results,
)
from .designs import InclusionProbs, Sample
from .errors import SurveyKnnError
from .neighbors import estimate_sample_ht
from .plots import (
    plot_c4,
    plot_c9,
    plot_consistency,
    plot_rate_curves,
    plot_wine,
)
from .population import Population
from .studies import (
    StudyConfig,
    run_c4_study,
    run_c9_study,
    run_consistency_study,
    run_wine_study,
    study_config,
)

_OUT_ENV = "SURVEYKNN_OUT"
_CONFIG_KEYS = {f.name for f in dataclasses.fields(StudyConfig)}


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(_OUT_ENV) or "surveyknn-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out: Path, command: str, config: dict, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "outputs": sorted(outputs),
        "version": __version__,
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_study_config(args, study: str) -> StudyConfig:
    overrides: dict = {}
    if args.config:
        text = Path(args.config).read_text()
        loaded = json.loads(text)
        unknown = set(loaded) - _CONFIG_KEYS
        if unknown:
            raise SurveyKnnError(f"unknown config keys in {args.config}: {sorted(unknown)}")
        loaded.pop("study", None)
        overrides.update(loaded)
    if getattr(args, "threads", None):
        overrides["threads"] = args.threads
    for key in ("sizes", "designs"):
        if key in overrides:
            overrides[key] = tuple(overrides[key])
    # Flags beat the config file, which beats the preset defaults.
    file_preset = overrides.pop("preset", None)
    file_seed = overrides.pop("seed", None)
    preset = args.preset or file_preset or "desk"
    seed = args.seed if args.seed is not None else (file_seed if file_seed is not None else 0)
    return study_config(study, preset=preset, seed=seed, **overrides)


def _cmd_estimate(args) -> int:
    covariates, x, y, pi = read_sample_csv(args.sample)
    points = read_points_csv(args.points, covariates)
    if not 1 <= args.k <= len(y):
        raise SurveyKnnError(f"k must be in [1, {len(y)}], got {args.k}")
    pop = Population(x=x, y=y)
    sample = Sample(members=np.arange(len(y)), weights=1.0 / pi, n_pop=len(y))
    probs = InclusionProbs(pi=pi, exact=True)
    estimates = [estimate_sample_ht(pop, sample, probs, p, args.k) for p in points]

    out = _out_dir(args)
    table = np.column_stack([points, estimates])
    write_matrix_csv(out / "estimates.csv", covariates + ["estimate"], table)
    outputs = ["estimates.csv"]
    if points.shape[1] == 1:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6.5, 3.5))
        ax.scatter(x[:, 0], y, s=8, color="gray", label="sample")
        order = np.argsort(points[:, 0])
        ax.plot(points[order, 0], np.asarray(estimates)[order], color="black",
                label=f"k = {args.k} estimate")
        ax.set_xlabel(covariates[0])
        ax.set_ylabel("y")
        ax.legend()
        fig.savefig(out / "estimate.png", dpi=150, bbox_inches="tight")
        plt.close(fig)
        outputs.append("estimate.png")
    _write_manifest(out, "estimate", {"k": args.k, "sample": str(args.sample),
                                      "points": str(args.points)}, outputs)
    print(f"wrote {len(estimates)} estimates to {out / 'estimates.csv'}")
    return 0


def _run_study_command(args, study: str, runner, plotter, stem: str) -> int:
    config = _load_study_config(args, study)
    result = runner(config)
    out = _out_dir(args)
    csv_path = out / f"{stem}_results.csv"
    write_results(result, csv_path)
    fig_path = plotter(result, out / f"{stem}_{_FIGURE_NAMES[study]}.png")
    _write_manifest(out, stem, dataclasses.asdict(config), [csv_path.name, fig_path.name])
    print(f"wrote {csv_path} and {fig_path}")
    return 0


_FIGURE_NAMES = {
    "c4": "max_ratio",
    "c9": "mean_abs_rij",
    "consistency": "mse",
    "wine": "mse",
}


def _cmd_diagnose_c4(args) -> int:
    return _run_study_command(args, "c4", run_c4_study, plot_c4, "c4")


def _cmd_diagnose_c9(args) -> int:
    return _run_study_command(args, "c9", run_c9_study, plot_c9, "c9")


def _cmd_study(args) -> int:
    if args.which == "consistency":
        return _run_study_command(
            args, "consistency", run_consistency_study, plot_consistency, "consistency"
        )
    data = Path(args.data)
    if not data.exists():
        raise SurveyKnnError(
            f"wine dataset not found at {data}; place the semicolon-delimited "
            "winequality-white.csv there (see README for the download source)"
        )
    config = _load_study_config(args, "wine")
    output = run_wine_study(config, data)
    out = _out_dir(args)
    csv_path = out / "wine_results.csv"
    write_results(output.result, csv_path)
    grid_path = out / "wine_grid.csv"
    write_matrix_csv(grid_path, output.covariates, output.grid)
    fig_path = plot_wine(output.result, out / "wine_mse.png")
    _write_manifest(
        out, "wine", dataclasses.asdict(config),
        [csv_path.name, grid_path.name, fig_path.name],
    )
    print(f"wrote {csv_path}, {grid_path} and {fig_path}")
    return 0


def _cmd_bounds(args) -> int:
    d = args.d
    rows = [("unit_ball_volume", unit_ball_volume(d))]
    if d >= 2:
        rows.append(("bias_constant", knn_bias_constant(d)))
    print(f"d = {d}")
    for name, value in rows:
        print(f"  {name:>18}: {value:.6f}")
    ladder = [100, 1000, 10000, 100000]
    print(f"  {'n':>8} {'kn':>6} {'rate_shape':>12}")
    table = []
    for n in ladder:
        kn = kn_schedule(d, n)
        shape = rate_bound(d, kn, n, mode="shape")
        table.append((n, kn, shape))
        print(f"  {n:>8} {kn:>6} {shape:>12.6f}")
    if args.out or os.environ.get(_OUT_ENV):
        out = _out_dir(args)
        header = ["n", "kn", "rate_shape"]
        write_matrix_csv(out / "bounds.csv", header, np.asarray(table, dtype=float))
        plot_rate_curves(d, out / "rate_curves.png", n_values=ladder)
        _write_manifest(out, "bounds", {"d": d}, ["bounds.csv", "rate_curves.png"])
        print(f"wrote {out / 'bounds.csv'} and {out / 'rate_curves.png'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survey-knn",
        description="Design-weighted k-NN regression, design diagnostics, and Monte Carlo studies",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${_OUT_ENV} or ./surveyknn-out)")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--preset", choices=["paper", "desk"], help="scale preset (default desk)")
    common.add_argument("--config", help="JSON file with StudyConfig field overrides")
    common.add_argument("--threads", type=int, help="worker threads for replicates")

    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", parents=[common],
                           help="ad-hoc design-weighted k-NN estimates from CSVs")
    p_est.add_argument("--sample", required=True,
                       help="CSV with covariate columns plus y and optional pi")
    p_est.add_argument("--points", required=True,
                       help="CSV of evaluation points with the same covariate columns")
    p_est.add_argument("--k", type=int, required=True, help="number of neighbors")
    p_est.set_defaults(func=_cmd_estimate)

    p_c4 = sub.add_parser("diagnose-c4", parents=[common],
                          help="sampling-fraction balance scan across the ladder")
    p_c4.set_defaults(func=_cmd_diagnose_c4)

    p_c9 = sub.add_parser("diagnose-c9", parents=[common],
                          help="exhaustive partition-conditional dependence scan")
    p_c9.set_defaults(func=_cmd_diagnose_c9)

    p_study = sub.add_parser("study", parents=[common], help="run an MSE ladder study")
    p_study.add_argument("which", choices=["consistency", "wine"])
    p_study.add_argument("--data", default="winequality-white.csv",
                         help="path to the wine CSV (wine study only)")
    p_study.set_defaults(func=_cmd_study)

    p_bounds = sub.add_parser("bounds", parents=[common],
                              help="print ball volumes, bias constants, and rate shapes")
    p_bounds.add_argument("--d", type=int, required=True, help="covariate dimension")
    p_bounds.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SurveyKnnError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
