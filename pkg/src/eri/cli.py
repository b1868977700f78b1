"""Command-line front door.

Subcommands: plan, inject, mask, compute, sensitivity, report, synth,
validate. Exit codes: 0 success, 1 input/validation error, 2 success with
censoring (some adaptation delay undefined at the primary threshold).

Option precedence is flags > config file (--config, JSON) > built-in
defaults; the resolved configuration is always written to a provenance
sidecar next to the outputs. All randomness flows from explicit --seed
flags, and output files are written atomically (temp file then rename), so
interrupted runs never leave partial artifacts. Set ERI_NO_COLOR to disable
ANSI styling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

from . import __version__
from .aggregate import ad_grid_summary, summarize
from .datasetops import (
    PHASE_DATASET_KEYS,
    BenchmarkPlan,
    DatasetFormatError,
    PatchSpec,
    build_phase_datasets,
    mask_patch,
    parse_cifar100,
    plan_benchmark,
    serialize_cifar100,
)
from .logio import (
    DEFAULT_BASELINE,
    EvalSplit,
    LogFormat,
    LogSchemaError,
    RunSet,
    parse_log,
    serialize_log,
    validate_comparability,
)
from .metrics import (
    DEFAULT_TAU_GRID,
    EriResult,
    RigidityMargins,
    ThresholdConfig,
    UndefinedAd,
    ad_sensitivity,
    adaptation_delay,
    compute_eri,
    split_final_accuracies,
)
from .report import (
    SCENARIO_NAMES,
    CurveShape,
    SynthCurveSpec,
    build_panel_report,
    heatmap_export,
    panels_export,
    summary_export,
    summary_stats_export,
    synth_scenario,
)

_DEFAULT_MARGINS = RigidityMargins()


def _use_color() -> bool:
    return sys.stdout.isatty() and not os.environ.get("ERI_NO_COLOR")


def _bold(text: str) -> str:
    return f"\x1b[1m{text}\x1b[0m" if _use_color() else text


def _red(text: str) -> str:
    return f"\x1b[31m{text}\x1b[0m" if _use_color() else text


def _write_atomic(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    """flags > config file > built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _provenance(command: str, inputs: dict[str, Any], resolved: dict[str, Any]) -> str:
    doc = {"tool": "eri", "version": __version__, "command": command, "inputs": inputs, "config": resolved}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _read_log(path: str, fmt: str | None, baseline: str | None) -> RunSet:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"log file not found: {path}")
    if fmt is None:
        fmt = "json" if p.suffix.lower() == ".json" else "csv"
    return parse_log(p.read_text(encoding="utf-8"), LogFormat(fmt), baseline_method=baseline)


def _threshold_config(args, config) -> ThresholdConfig:
    tau = float(_resolve(args, config, "tau", 0.6))
    window = int(_resolve(args, config, "window", 3))
    grid = _resolve(args, config, "grid", None)
    if grid is None:
        grid_values = DEFAULT_TAU_GRID
    elif isinstance(grid, str):
        grid_values = tuple(float(x) for x in grid.split(","))
    else:
        grid_values = tuple(float(x) for x in grid)
    return ThresholdConfig(tau=tau, smoothing_width=window, tau_grid=grid_values)


def _margins(args, config) -> RigidityMargins:
    return RigidityMargins(
        delta_ad=float(_resolve(args, config, "margin_ad", _DEFAULT_MARGINS.delta_ad)),
        delta_pd=float(_resolve(args, config, "margin_pd", _DEFAULT_MARGINS.delta_pd)),
        delta_sfr=float(_resolve(args, config, "margin_sfr", _DEFAULT_MARGINS.delta_sfr)),
        near_zero_eps=float(_resolve(args, config, "near_zero_eps", _DEFAULT_MARGINS.near_zero_eps)),
    )


def _result_dict(r: EriResult) -> dict[str, Any]:
    if isinstance(r.ad, UndefinedAd):
        ad, censored, budget = None, r.ad.censored, r.ad.budget
    else:
        ad, censored, budget = r.ad, None, None
    return {
        "method": r.method,
        "seed": r.seed,
        "ad": ad,
        "ad_censored": censored,
        "ad_budget": budget,
        "pd": r.pd,
        "delta_cl": r.delta_cl,
        "delta_s": r.delta_s,
        "sfr_rel": r.sfr_rel,
        "csr_rel": r.csr_rel,
        "regime": r.regime.value,
        "note": r.note,
        "baseline_seed": r.baseline_seed,
    }


def _print_csv_as_table(csv_text: str) -> None:
    rows = [line.split(",") for line in csv_text.strip().splitlines()]
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    for j, row in enumerate(rows):
        line = "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row))
        print(_bold(line) if j == 0 else line)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_plan(args) -> int:
    config = _load_config(args.config)
    seed = int(_resolve(args, config, "seed", 0))

    def parse_labels(raw):
        if raw is None:
            return None
        if isinstance(raw, str):
            return [int(x) for x in raw.split(",")]
        return [int(x) for x in raw]

    plan = plan_benchmark(
        seed,
        t1=parse_labels(_resolve(args, config, "t1", None)),
        t2=parse_labels(_resolve(args, config, "t2", None)),
        sc=parse_labels(_resolve(args, config, "sc", None)),
    )
    out = Path(args.out)
    _write_atomic(out, plan.to_json())
    print(f"wrote plan to {out}")
    return 0


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return p


def _cmd_inject(args) -> int:
    config = _load_config(args.config)
    in_path = _require_file(args.infile, "input dataset")
    plan = BenchmarkPlan.from_json(_require_file(args.plan, "plan file").read_text(encoding="utf-8"))
    spec = PatchSpec()
    records = parse_cifar100(in_path.read_bytes())
    datasets = build_phase_datasets(records, plan, spec)
    emit = _resolve(args, config, "emit", "t2_train")

    written: list[Path] = []
    if emit == "all":
        out_dir = Path(args.out)
        for key in PHASE_DATASET_KEYS:
            target = out_dir / f"{key}.bin"
            _write_atomic(target, serialize_cifar100(datasets[key]))
            written.append(target)
        plan_path = out_dir / "plan.json"
    else:
        if emit not in PHASE_DATASET_KEYS:
            raise ValueError(f"unknown --emit '{emit}' (expected one of {', '.join(PHASE_DATASET_KEYS)} or all)")
        target = Path(args.out)
        _write_atomic(target, serialize_cifar100(datasets[emit]))
        written.append(target)
        plan_path = target.with_suffix(target.suffix + ".plan.json")
    _write_atomic(plan_path, plan.to_json())

    resolved = {"emit": emit, "patch": {"top": spec.top, "left": spec.left, "height": spec.height, "width": spec.width}}
    _write_atomic(
        plan_path.with_name(plan_path.name.replace("plan.json", "provenance.json")),
        _provenance("inject", {"infile": str(in_path), "plan": args.plan}, resolved),
    )
    for target in written:
        print(f"wrote {target}")
    return 0


def _cmd_mask(args) -> int:
    in_path = _require_file(args.infile, "input dataset")
    spec = PatchSpec()
    records = parse_cifar100(in_path.read_bytes())
    masked = [mask_patch(r, spec) for r in records]
    out = Path(args.out)
    _write_atomic(out, serialize_cifar100(masked))
    print(f"wrote {out} ({len(masked)} records, patch region blacked out)")
    return 0


def _eri_results(runset: RunSet, cfg: ThresholdConfig, margins: RigidityMargins) -> list[EriResult]:
    return [
        compute_eri(runset, method, seed, cfg, margins)
        for method in runset.cl_methods()
        for seed in runset.seeds(method)
    ]


def _cmd_compute(args) -> int:
    config = _load_config(args.config)
    cfg = _threshold_config(args, config)
    margins = _margins(args, config)
    baseline = _resolve(args, config, "baseline", None)
    runset = _read_log(args.log, args.format, baseline)
    out_dir = Path(_resolve(args, config, "out_dir", "eri_out"))

    results = _eri_results(runset, cfg, margins)
    accuracies = [
        split_final_accuracies(runset, method, seed)
        for method in runset.methods()
        for seed in runset.seeds(method)
    ]
    rows = summarize(results, accuracies)

    summary_csv = summary_export(rows)
    _write_atomic(out_dir / "summary.csv", summary_csv)
    _write_atomic(out_dir / "summary_stats.csv", summary_stats_export(rows))
    _write_atomic(
        out_dir / "eri_seeds.json",
        json.dumps([_result_dict(r) for r in results], indent=2, sort_keys=True) + "\n",
    )
    resolved = {
        "tau": cfg.tau,
        "window": cfg.smoothing_width,
        "baseline": runset.baseline_method,
        "margin_ad": margins.delta_ad,
        "margin_pd": margins.delta_pd,
        "margin_sfr": margins.delta_sfr,
        "near_zero_eps": margins.near_zero_eps,
        "out_dir": str(out_dir),
    }
    _write_atomic(out_dir / "provenance.json", _provenance("compute", {"log": args.log}, resolved))

    _print_csv_as_table(summary_csv)
    print()
    for r in results:
        ad = "undefined" if isinstance(r.ad, UndefinedAd) else f"{r.ad:g}"
        regime = r.regime.value
        line = f"{r.method} seed {r.seed}: AD={ad} PD={r.pd:.4f} SFR_rel={r.sfr_rel:.4f} regime={regime}"
        if regime == "red_flag":
            line = _red(line)
        print(line)
        if r.note:
            print(f"  note: {r.note}")

    censored = any(isinstance(r.ad, UndefinedAd) for r in results)
    if censored:
        print(f"\nwarning: AD undefined for at least one method at tau={cfg.tau:g}", file=sys.stderr)
    print(f"\nwrote summary.csv, summary_stats.csv, eri_seeds.json to {out_dir}")
    return 2 if censored else 0


def _cmd_sensitivity(args) -> int:
    config = _load_config(args.config)
    cfg = _threshold_config(args, config)
    baseline = _resolve(args, config, "baseline", None)
    runset = _read_log(args.log, args.format, baseline)
    out_dir = Path(_resolve(args, config, "out_dir", "eri_out"))

    grid_summary = {}
    per_seed_export: dict[str, dict[str, list]] = {}
    skipped: list[str] = []
    curve_pairs = []
    for method in runset.cl_methods():
        grids = []
        for seed in runset.seeds(method):
            if seed not in runset.seeds(runset.baseline_method):
                skipped.append(f"{method} seed {seed}")
                continue
            cl = runset.get(method, seed, EvalSplit.T2_SC_PATCHED)
            scratch = runset.get(runset.baseline_method, seed, EvalSplit.T2_SC_PATCHED)
            curve_pairs.append((cl, scratch))
            grid = ad_sensitivity(cl, scratch, cfg)
            grids.append(grid)
            per_seed_export.setdefault(method, {})[str(seed)] = [
                [tau, None if isinstance(ad, UndefinedAd) else ad] for tau, ad in grid
            ]
        if grids:
            grid_summary[method] = ad_grid_summary(grids)
    if not grid_summary:
        raise ValueError("no (method, seed) pair shares a seed with the baseline")

    heatmap_csv = heatmap_export(grid_summary)
    _write_atomic(out_dir / "heatmap.csv", heatmap_csv)
    resolved = {
        "tau": cfg.tau,
        "window": cfg.smoothing_width,
        "grid": list(cfg.tau_grid),
        "baseline": runset.baseline_method,
        "out_dir": str(out_dir),
        "skipped_unpaired": skipped,
    }
    _write_atomic(out_dir / "heatmap_seeds.json", json.dumps(per_seed_export, indent=2, sort_keys=True) + "\n")
    _write_atomic(out_dir / "provenance.json", _provenance("sensitivity", {"log": args.log}, resolved))

    _print_csv_as_table(heatmap_csv)
    print(f"\nwrote heatmap.csv, heatmap_seeds.json to {out_dir}")

    censored = any(
        isinstance(adaptation_delay(cl, scratch, cfg), UndefinedAd) for cl, scratch in curve_pairs
    )
    return 2 if censored else 0


def _cmd_report(args) -> int:
    config = _load_config(args.config)
    cfg = _threshold_config(args, config)
    baseline = _resolve(args, config, "baseline", None)
    runset = _read_log(args.log, args.format, baseline)
    out_dir = Path(_resolve(args, config, "out_dir", "eri_out"))

    panel_report = build_panel_report(runset, cfg)
    _write_atomic(out_dir / "panels.csv", panels_export(panel_report))
    sidecar = {
        "ad_annotations": {
            m: {str(seed): ad for seed, ad in seeds.items()}
            for m, seeds in panel_report.ad_annotations.items()
        },
        "dropped_epochs": panel_report.dropped_epochs,
        "tau": cfg.tau,
        "window": cfg.smoothing_width,
    }
    _write_atomic(out_dir / "panels_meta.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    _write_atomic(
        out_dir / "provenance.json",
        _provenance("report", {"log": args.log}, {"tau": cfg.tau, "window": cfg.smoothing_width, "out_dir": str(out_dir)}),
    )
    print(f"wrote panels.csv, panels_meta.json to {out_dir}")
    return 0


def _cmd_synth(args) -> int:
    config = _load_config(args.config)
    scenario = _resolve(args, config, "scenario", "red_flag")
    seed = int(_resolve(args, config, "seed", 0))
    budget = int(_resolve(args, config, "budget", 50))
    noise_sd = float(_resolve(args, config, "noise_sd", 0.0))

    override = None
    override_keys = ("shape", "asymptote", "midpoint", "rate")
    if any(_resolve(args, config, k, None) is not None for k in override_keys):
        override = SynthCurveSpec(
            shape=CurveShape(str(_resolve(args, config, "shape", "logistic"))),
            asymptote=float(_resolve(args, config, "asymptote", 0.8)),
            midpoint=float(_resolve(args, config, "midpoint", 10.0)),
            rate=float(_resolve(args, config, "rate", 1.0)),
        )

    runset = synth_scenario(scenario, rng_seed=seed, budget=budget, noise_sd=noise_sd, cl_patched_override=override)
    out = Path(args.out)
    fmt = LogFormat.JSON if out.suffix.lower() == ".json" else LogFormat.CSV
    _write_atomic(out, serialize_log(runset, fmt))
    _write_atomic(
        out.with_suffix(out.suffix + ".provenance.json"),
        _provenance(
            "synth",
            {},
            {
                "scenario": scenario,
                "seed": seed,
                "budget": budget,
                "noise_sd": noise_sd,
                "cl_patched_override": None if override is None else {
                    "shape": override.shape.value,
                    "asymptote": override.asymptote,
                    "midpoint": override.midpoint,
                    "rate": override.rate,
                },
            },
        ),
    )
    print(f"wrote scenario '{scenario}' log to {out}")
    return 0


def _cmd_validate(args) -> int:
    baseline = args.baseline
    runset = _read_log(args.log, args.format, baseline)
    total = 0
    for method in runset.cl_methods():
        for finding in validate_comparability(runset, method):
            total += 1
            print(f"[{finding.code}] {finding.message}")
    print(f"{args.log}: schema OK, {len(runset.methods())} methods, {total} findings")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_log_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log", required=True, help="accuracy log (CSV or JSON)")
    p.add_argument("--format", choices=["csv", "json"], help="log format (default: by file extension)")
    p.add_argument("--baseline", help=f"baseline method identifier (default: {DEFAULT_BASELINE})")
    p.add_argument("--config", help="JSON config file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eri",
        description="Rigidity diagnostics (AD, PD, SFR_rel) and shortcut-benchmark tooling "
        "for continual-learning accuracy logs.",
    )
    parser.add_argument("--version", action="version", version=f"eri {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="build the deterministic 8+4 superclass split")
    p.add_argument("--seed", type=int, help="shuffle seed (default: 0)")
    p.add_argument("--t1", help="override: 8 comma-separated coarse labels")
    p.add_argument("--t2", help="override: 4 comma-separated coarse labels")
    p.add_argument("--sc", help="override: 2 comma-separated shortcut labels (subset of --t2)")
    p.add_argument("--out", required=True, help="output plan JSON path")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("inject", help="apply the shortcut patch per a benchmark plan")
    p.add_argument("--in", dest="infile", required=True, help="CIFAR-100 binary input")
    p.add_argument("--plan", required=True, help="plan JSON from `eri plan`")
    p.add_argument("--out", required=True, help="output file, or directory with --emit all")
    p.add_argument(
        "--emit",
        help=f"which dataset to write: one of {', '.join(PHASE_DATASET_KEYS)}, or all (default: t2_train)",
    )
    p.add_argument("--config", help="JSON config file; flags override it")
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("mask", help="black out the patch region of every record")
    p.add_argument("--in", dest="infile", required=True, help="CIFAR-100 binary input")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("compute", help="compute per-seed diagnostics and the summary table")
    _add_log_options(p)
    p.add_argument("--tau", type=float, help="accuracy threshold (default: 0.6)")
    p.add_argument("--window", type=int, help="moving-average width (default: 3)")
    p.add_argument("--margin-ad", dest="margin_ad", type=float, help="red-flag AD margin (default: 1.0)")
    p.add_argument("--margin-pd", dest="margin_pd", type=float, help="red-flag PD margin (default: 0.01)")
    p.add_argument("--margin-sfr", dest="margin_sfr", type=float, help="red-flag SFR margin (default: 0.05)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default: eri_out)")
    p.set_defaults(func=_cmd_compute)

    p = sub.add_parser("sensitivity", help="AD(tau) heatmap over a threshold grid")
    _add_log_options(p)
    p.add_argument("--tau", type=float, help="primary threshold for the exit-2 censoring check (default: 0.6)")
    p.add_argument("--window", type=int, help="moving-average width (default: 3)")
    p.add_argument("--grid", help="comma-separated thresholds (default: 0.30,0.35,0.40,0.45,0.50,0.55,0.60)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default: eri_out)")
    p.set_defaults(func=_cmd_sensitivity)

    p = sub.add_parser("report", help="export Panels A/B/C time series")
    _add_log_options(p)
    p.add_argument("--tau", type=float, help="threshold for AD annotations (default: 0.6)")
    p.add_argument("--window", type=int, help="moving-average width (default: 3)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default: eri_out)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic scenario log ready for `eri compute`")
    p.add_argument("--scenario", choices=list(SCENARIO_NAMES), help="scenario preset (default: red_flag)")
    p.add_argument("--seed", type=int, help="noise RNG seed (default: 0)")
    p.add_argument("--budget", type=int, help="epoch budget (default: 50)")
    p.add_argument("--noise-sd", dest="noise_sd", type=float, help="gaussian noise SD (default: 0)")
    p.add_argument("--shape", choices=[s.value for s in CurveShape], help="override continual patched-curve shape")
    p.add_argument("--asymptote", type=float, help="override continual patched-curve asymptote")
    p.add_argument("--midpoint", type=float, help="override continual patched-curve midpoint")
    p.add_argument("--rate", type=float, help="override continual patched-curve rate")
    p.add_argument("--out", required=True, help="output log path (.csv or .json)")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("validate", help="parse a log and report comparability findings")
    _add_log_options(p)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; 2 is reserved
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (LogSchemaError, DatasetFormatError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
