"""Report artifacts: summary table, time-series panels, AD(tau) heatmap,
and a synthetic-curve generator for demos and end-to-end tests.

All exports are plain CSV text, deterministic byte-for-byte for identical
inputs; figure rendering is left to external plotting tools. Display cells
round half-up to 3 decimals; the machine-readable exports keep full float
precision.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum

import numpy as np

from .aggregate import AdGridCell, SummaryRow
from .logio import AccuracyCurve, CurveSample, EvalSplit, RunSet
from .metrics import ThresholdConfig, UndefinedAd, adaptation_delay, smooth

#: Cell sentinel for thresholds no seed ever crossed.
HATCHED = "HATCHED"

SUMMARY_COLUMNS = ["strategy", "PD", "SFR_rel", "acc_SC_patch", "acc_SC_mask", "acc_T1", "acc_NSC_patch"]
PANEL_COLUMNS = ["panel", "method", "epoch_eff", "value"]


class Panel(Enum):
    A_ACCURACY = "A_ACCURACY"
    B_PD_TIMESERIES = "B_PD_TIMESERIES"
    C_SFR_TIMESERIES = "C_SFR_TIMESERIES"


@dataclass(frozen=True)
class PanelSeries:
    """One rendered time series: smoothed accuracy (A), per-epoch performance
    deficit (B), or per-epoch relative cue reliance (C)."""

    panel: Panel
    method: str
    points: tuple[tuple[float, float], ...]


class ReportError(ValueError):
    """Raised when a report cannot be built (e.g. empty epoch intersection)."""


def round3(value: float) -> str:
    """Half-up rounding to 3 decimals, for display cells."""
    return str(Decimal(repr(value)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def _fmt_mean_sd(mean: float | None, sd: float | None) -> str:
    if mean is None:
        return "--"
    if sd is None:
        return round3(mean)
    return f"{round3(mean)} ± {round3(sd)}"


def summary_export(rows: list[SummaryRow]) -> str:
    """Summary table as CSV: one row per method, cells formatted mean±sd to
    3 decimals, "--" for absent values (the baseline's PD/SFR, optional
    accuracy columns, single-seed SDs are simply omitted)."""
    if not rows:
        raise ReportError("no summary rows to export")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.method,
                _fmt_mean_sd(row.pd_mean, row.pd_sd),
                _fmt_mean_sd(row.sfr_mean, row.sfr_sd),
                _fmt_mean_sd(row.acc_sc_patch_mean, row.acc_sc_patch_sd),
                _fmt_mean_sd(row.acc_sc_mask_mean, row.acc_sc_mask_sd),
                _fmt_mean_sd(row.acc_t1_mean, row.acc_t1_sd),
                _fmt_mean_sd(row.acc_nsc_patch_mean, row.acc_nsc_patch_sd),
            ]
        )
    return out.getvalue()


def summary_stats_export(rows: list[SummaryRow]) -> str:
    """Full-precision numeric companion to the formatted summary table."""
    if not rows:
        raise ReportError("no summary rows to export")
    fields = [
        "method",
        "n_seeds",
        "pd_mean",
        "pd_sd",
        "sfr_mean",
        "sfr_sd",
        "acc_sc_patch_mean",
        "acc_sc_patch_sd",
        "acc_sc_mask_mean",
        "acc_sc_mask_sd",
        "acc_t1_mean",
        "acc_t1_sd",
        "acc_nsc_patch_mean",
        "acc_nsc_patch_sd",
    ]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        cells = [row.method, row.n_seeds]
        for name in fields[2:]:
            value = getattr(row, name)
            cells.append("" if value is None else repr(value))
        writer.writerow(cells)
    return out.getvalue()


def heatmap_export(grid_summary: dict[str, list[AdGridCell]]) -> str:
    """AD(tau) heatmap as CSV: methods alphabetical down the rows, thresholds
    ascending across the columns, cells carrying the seed-mean AD or the
    HATCHED sentinel where no seed crossed."""
    if not grid_summary:
        raise ReportError("no heatmap rows to export")
    methods = sorted(grid_summary)
    taus = [cell.tau for cell in grid_summary[methods[0]]]
    for method in methods[1:]:
        if [cell.tau for cell in grid_summary[method]] != taus:
            raise ReportError("mismatched tau grids across methods")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["method"] + [f"{tau:g}" for tau in taus])
    for method in methods:
        cells = [HATCHED if cell.hatched else repr(cell.mean_ad) for cell in grid_summary[method]]
        writer.writerow([method] + cells)
    return out.getvalue()


def _epoch_map(curve: AccuracyCurve) -> dict[float, float]:
    return {s.effective_epoch: s.accuracy for s in curve.samples}


def _mean_series(per_seed: list[dict[float, float]]) -> tuple[tuple[float, float], ...]:
    """Average per-seed epoch->value maps over the epochs all seeds share."""
    common = set(per_seed[0])
    for series in per_seed[1:]:
        common &= set(series)
    if not common:
        raise ReportError("empty epoch intersection across seeds")
    return tuple((e, sum(s[e] for s in per_seed) / len(per_seed)) for e in sorted(common))


def _dropped_epochs(per_seed: list[dict[float, float]], kept: set[float]) -> list[float]:
    dropped: set[float] = set()
    for series in per_seed:
        dropped |= set(series) - kept
    return sorted(dropped)


@dataclass(frozen=True)
class PanelReport:
    """Panel series plus the bookkeeping the figure layer needs: AD values
    for annotations and any epochs dropped by grid intersection."""

    series: list[PanelSeries]
    ad_annotations: dict[str, dict[int, float | None]]
    dropped_epochs: dict[str, list[float]]


def build_panel_report(runset: RunSet, cfg: ThresholdConfig | None = None) -> PanelReport:
    """Compute Panels A/B/C for every method in the runset.

    Panel A shows the smoothed patched-accuracy trajectory (baseline
    included). Panels B and C compare each continual method against the
    baseline on identically-numbered seeds, on the intersection of their
    epoch grids; no value is ever interpolated, and dropped epochs are
    reported instead. Multi-seed methods are averaged per epoch.
    """
    cfg = cfg or ThresholdConfig()
    baseline = runset.baseline_method
    series: list[PanelSeries] = []
    ad_annotations: dict[str, dict[int, float | None]] = {}
    dropped: dict[str, list[float]] = {}

    for method in runset.methods():
        per_seed = [
            _epoch_map(smooth(runset.get(method, seed, EvalSplit.T2_SC_PATCHED), cfg.smoothing_width))
            for seed in runset.seeds(method)
            if runset.has(method, seed, EvalSplit.T2_SC_PATCHED)
        ]
        if not per_seed:
            continue
        points = _mean_series(per_seed)
        series.append(PanelSeries(Panel.A_ACCURACY, method, points))
        gone = _dropped_epochs(per_seed, {e for e, _ in points})
        if gone:
            dropped[f"A:{method}"] = gone

    for method in runset.cl_methods():
        paired = [s for s in runset.seeds(method) if s in runset.seeds(baseline)]
        annotations: dict[int, float | None] = {}
        b_per_seed: list[dict[float, float]] = []
        c_per_seed: list[dict[float, float]] = []
        for seed in paired:
            cl_p = runset.get(method, seed, EvalSplit.T2_SC_PATCHED)
            s_p = runset.get(baseline, seed, EvalSplit.T2_SC_PATCHED)
            ad = adaptation_delay(cl_p, s_p, cfg)
            annotations[seed] = None if isinstance(ad, UndefinedAd) else ad

            cl_map, s_map = _epoch_map(cl_p), _epoch_map(s_p)
            common = set(cl_map) & set(s_map)
            if not common:
                raise ReportError(
                    f"empty epoch intersection between '{method}' and baseline, seed {seed}"
                )
            b_per_seed.append({e: s_map[e] - cl_map[e] for e in common})

            if all(
                runset.has(m, seed, EvalSplit.T2_SC_MASKED) for m in (method, baseline)
            ):
                cl_m = _epoch_map(runset.get(method, seed, EvalSplit.T2_SC_MASKED))
                s_m = _epoch_map(runset.get(baseline, seed, EvalSplit.T2_SC_MASKED))
                c_common = common & set(cl_m) & set(s_m)
                if not c_common:
                    raise ReportError(
                        f"empty masked-epoch intersection for '{method}', seed {seed}"
                    )
                c_per_seed.append(
                    {e: (cl_map[e] - cl_m[e]) - (s_map[e] - s_m[e]) for e in c_common}
                )
        if not paired:
            continue
        ad_annotations[method] = annotations

        b_points = _mean_series(b_per_seed)
        series.append(PanelSeries(Panel.B_PD_TIMESERIES, method, b_points))
        gone = _dropped_epochs(b_per_seed, {e for e, _ in b_points})
        if gone:
            dropped[f"B:{method}"] = gone

        if c_per_seed:
            c_points = _mean_series(c_per_seed)
            series.append(PanelSeries(Panel.C_SFR_TIMESERIES, method, c_points))
            gone = _dropped_epochs(c_per_seed, {e for e, _ in c_points})
            if gone:
                dropped[f"C:{method}"] = gone

    return PanelReport(series=series, ad_annotations=ad_annotations, dropped_epochs=dropped)


def panel_series(runset: RunSet, cfg: ThresholdConfig | None = None) -> list[PanelSeries]:
    """Panels A/B/C as plain series; see build_panel_report for semantics."""
    return build_panel_report(runset, cfg).series


def panels_export(report: PanelReport) -> str:
    """Panel series as CSV, one point per row, deterministic order."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PANEL_COLUMNS)
    for s in sorted(report.series, key=lambda s: (s.panel.value, s.method)):
        for epoch, value in s.points:
            writer.writerow([s.panel.value, s.method, repr(epoch), repr(value)])
    return out.getvalue()


class CurveShape(Enum):
    LOGISTIC = "logistic"
    STEP = "step"
    PLATEAU = "plateau"


@dataclass(frozen=True)
class SynthCurveSpec:
    """Parameters of one synthetic accuracy curve.

    LOGISTIC rises to ``asymptote`` with inflection at ``midpoint``; STEP
    jumps from 0 to ``asymptote`` at ``midpoint``; PLATEAU saturates toward
    ``asymptote`` from below and never exceeds it, so any threshold above the
    asymptote is censored. Gaussian noise (sd ``noise_sd``) is added per
    sample and the result clipped back to the valid range.
    """

    shape: CurveShape = CurveShape.LOGISTIC
    asymptote: float = 0.8
    midpoint: float = 10.0
    rate: float = 1.0
    noise_sd: float = 0.0
    rng_seed: int = 0
    budget: int = 50

    def __post_init__(self):
        if not 0.0 <= self.asymptote <= 1.0:
            raise ValueError(f"asymptote must lie in [0, 1], got {self.asymptote}")
        if self.midpoint <= 0:
            raise ValueError("midpoint must be positive")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.budget < 1:
            raise ValueError("budget must be a positive number of epochs")


def synth_curves(
    spec: SynthCurveSpec,
    method: str = "synth",
    seed: int = 0,
    split: EvalSplit = EvalSplit.T2_SC_PATCHED,
) -> AccuracyCurve:
    """Deterministic synthetic curve on the integer epoch grid 1..budget."""
    epochs = np.arange(1, spec.budget + 1, dtype=float)
    if spec.shape is CurveShape.LOGISTIC:
        values = spec.asymptote / (1.0 + np.exp(-spec.rate * (epochs - spec.midpoint)))
    elif spec.shape is CurveShape.STEP:
        values = np.where(epochs >= spec.midpoint, spec.asymptote, 0.0)
    elif spec.shape is CurveShape.PLATEAU:
        values = spec.asymptote * (1.0 - np.exp(-spec.rate * epochs / spec.midpoint))
    else:
        raise ValueError(f"unknown curve shape {spec.shape!r}")
    if spec.noise_sd > 0:
        values = values + np.random.default_rng(spec.rng_seed).normal(0.0, spec.noise_sd, len(values))
    # The plateau guarantee (never exceeding the asymptote) survives noise.
    ceiling = spec.asymptote if spec.shape is CurveShape.PLATEAU else 1.0
    values = np.clip(values, 0.0, ceiling)
    samples = tuple(CurveSample(float(e), float(v)) for e, v in zip(epochs, values))
    return AccuracyCurve(method, seed, split, samples)


#: Scenario presets: curve parameters per (model, split). Each scenario pits
#: one continual method against the scratch baseline over the same budget.
_SCENARIOS: dict[str, dict[str, dict[EvalSplit, SynthCurveSpec]]] = {
    # Early crossing, higher final accuracy, cue helpful to both but far more
    # load-bearing for the continual model: the high-rigidity pattern.
    "red_flag": {
        "scratch_t2": {
            EvalSplit.T2_SC_PATCHED: SynthCurveSpec(asymptote=0.75, midpoint=20.0, rate=0.5),
            EvalSplit.T2_SC_MASKED: SynthCurveSpec(asymptote=0.70, midpoint=20.0, rate=0.5),
            EvalSplit.T2_VAL: SynthCurveSpec(asymptote=0.75, midpoint=20.0, rate=0.5),
        },
        "shortcut_learner": {
            EvalSplit.T2_SC_PATCHED: SynthCurveSpec(asymptote=0.85, midpoint=5.0, rate=1.0),
            EvalSplit.T2_SC_MASKED: SynthCurveSpec(asymptote=0.70, midpoint=5.0, rate=1.0),
            EvalSplit.T2_VAL: SynthCurveSpec(asymptote=0.85, midpoint=5.0, rate=1.0),
        },
    },
    # Faster adaptation but slightly lower patched accuracy, and masking
    # helps the continual model: the cue acts as a distractor.
    "benign_avoidance": {
        "scratch_t2": {
            EvalSplit.T2_SC_PATCHED: SynthCurveSpec(asymptote=0.65, midpoint=20.0, rate=0.5),
            EvalSplit.T2_SC_MASKED: SynthCurveSpec(asymptote=0.63, midpoint=20.0, rate=0.5),
            EvalSplit.T2_VAL: SynthCurveSpec(asymptote=0.65, midpoint=20.0, rate=0.5),
        },
        "distractor_avoider": {
            EvalSplit.T2_SC_PATCHED: SynthCurveSpec(asymptote=0.62, midpoint=8.0, rate=1.0),
            EvalSplit.T2_SC_MASKED: SynthCurveSpec(asymptote=0.70, midpoint=8.0, rate=1.0),
            EvalSplit.T2_VAL: SynthCurveSpec(asymptote=0.62, midpoint=8.0, rate=1.0),
        },
    },
    # The continual learner saturates below moderate thresholds: censored
    # AD and hatched heatmap cells at high tau.
    "censored": {
        "scratch_t2": {
            EvalSplit.T2_SC_PATCHED: SynthCurveSpec(asymptote=0.75, midpoint=15.0, rate=0.5),
            EvalSplit.T2_SC_MASKED: SynthCurveSpec(asymptote=0.72, midpoint=15.0, rate=0.5),
            EvalSplit.T2_VAL: SynthCurveSpec(asymptote=0.75, midpoint=15.0, rate=0.5),
        },
        "plateau_learner": {
            EvalSplit.T2_SC_PATCHED: SynthCurveSpec(
                shape=CurveShape.PLATEAU, asymptote=0.45, midpoint=5.0, rate=1.0
            ),
            EvalSplit.T2_SC_MASKED: SynthCurveSpec(
                shape=CurveShape.PLATEAU, asymptote=0.50, midpoint=5.0, rate=1.0
            ),
            EvalSplit.T2_VAL: SynthCurveSpec(
                shape=CurveShape.PLATEAU, asymptote=0.45, midpoint=5.0, rate=1.0
            ),
        },
    },
}

SCENARIO_NAMES = tuple(sorted(_SCENARIOS))


def synth_scenario(
    name: str,
    rng_seed: int = 0,
    budget: int = 50,
    noise_sd: float = 0.0,
    cl_patched_override: SynthCurveSpec | None = None,
) -> RunSet:
    """Build a complete two-model study for one scenario preset.

    The resulting runset feeds the whole pipeline end to end (it carries the
    mandatory baseline splits). ``cl_patched_override`` swaps in a custom
    spec for the continual model's patched curve; budget/noise/rng apply to
    every curve. Deterministic for fixed arguments.
    """
    try:
        preset = _SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario '{name}' (expected one of {', '.join(SCENARIO_NAMES)})") from None
    split_index = {s: i for i, s in enumerate(sorted(EvalSplit, key=lambda s: s.value))}
    curves = {}
    for offset, (method, split_specs) in enumerate(sorted(preset.items())):
        for split, spec in sorted(split_specs.items(), key=lambda kv: kv[0].value):
            if cl_patched_override is not None and method != "scratch_t2" and split is EvalSplit.T2_SC_PATCHED:
                spec = cl_patched_override
            # one RNG stream per curve so noise draws stay independent
            stream = rng_seed * 1009 + offset * 101 + split_index[split]
            spec = replace(spec, budget=budget, noise_sd=noise_sd, rng_seed=stream)
            curve = synth_curves(spec, method=method, seed=0, split=split)
            curves[(method, 0, split)] = curve
    return RunSet(
        baseline_method="scratch_t2",
        curves=curves,
        metadata={"scenario": name, "rng_seed": str(rng_seed), "budget": str(budget), "noise_sd": repr(noise_sd)},
    )
