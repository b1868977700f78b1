"""Seed aggregation into per-method summary rows and heatmap cells.

Means are arithmetic; dispersion is the sample standard deviation (n-1
denominator), reported only when a method has at least two seeds. Censored
seeds are excluded from AD means rather than imputed at the budget; the
defined/censored counts keep the exclusion visible.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .metrics import EriResult, FinalAccuracies, UndefinedAd


@dataclass(frozen=True)
class SummaryRow:
    """One summary-table row: mean and SD per metric, None where absent.

    SD fields are None (not zero) for single-seed methods; PD/SFR fields are
    None for rows without diagnostics (the baseline reports accuracies only).
    """

    method: str
    n_seeds: int
    pd_mean: float | None = None
    pd_sd: float | None = None
    sfr_mean: float | None = None
    sfr_sd: float | None = None
    acc_sc_patch_mean: float | None = None
    acc_sc_patch_sd: float | None = None
    acc_sc_mask_mean: float | None = None
    acc_sc_mask_sd: float | None = None
    acc_t1_mean: float | None = None
    acc_t1_sd: float | None = None
    acc_nsc_patch_mean: float | None = None
    acc_nsc_patch_sd: float | None = None

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        for name in ("pd_sd", "sfr_sd", "acc_sc_patch_sd", "acc_sc_mask_sd", "acc_t1_sd", "acc_nsc_patch_sd"):
            sd = getattr(self, name)
            if sd is not None and sd < 0:
                raise ValueError(f"{name} must be >= 0")


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = statistics.mean(values)
    sd = statistics.stdev(values) if len(values) > 1 else None
    return mean, sd


def summarize(results: list[EriResult], accuracies: list[FinalAccuracies]) -> list[SummaryRow]:
    """Collapse per-seed results into one row per method, sorted by method.

    ``accuracies`` defines the row set (it includes the baseline, which has
    no diagnostics and therefore renders blank PD/SFR cells). Optional
    accuracy columns contribute only when every seed of a method logged them.
    """
    if not results and not accuracies:
        raise ValueError("nothing to summarize: no results and no accuracies")

    by_method_res: dict[str, list[EriResult]] = {}
    for r in results:
        by_method_res.setdefault(r.method, []).append(r)
    by_method_acc: dict[str, list[FinalAccuracies]] = {}
    for a in accuracies:
        by_method_acc.setdefault(a.method, []).append(a)

    rows = []
    for method in sorted(set(by_method_res) | set(by_method_acc)):
        res = sorted(by_method_res.get(method, []), key=lambda r: r.seed)
        acc = sorted(by_method_acc.get(method, []), key=lambda a: a.seed)
        n_seeds = max(len(res), len(acc))
        pd_mean, pd_sd = _mean_sd([r.pd for r in res])
        sfr_mean, sfr_sd = _mean_sd([r.sfr_rel for r in res])
        patch_mean, patch_sd = _mean_sd([a.sc_patched for a in acc])
        mask_mean, mask_sd = _mean_sd([a.sc_masked for a in acc])
        t1_vals = [a.t1 for a in acc]
        t1_mean, t1_sd = _mean_sd(t1_vals) if acc and all(v is not None for v in t1_vals) else (None, None)
        nsc_vals = [a.nsc_patched for a in acc]
        nsc_mean, nsc_sd = (
            _mean_sd(nsc_vals) if acc and all(v is not None for v in nsc_vals) else (None, None)
        )
        rows.append(
            SummaryRow(
                method=method,
                n_seeds=n_seeds,
                pd_mean=pd_mean,
                pd_sd=pd_sd,
                sfr_mean=sfr_mean,
                sfr_sd=sfr_sd,
                acc_sc_patch_mean=patch_mean,
                acc_sc_patch_sd=patch_sd,
                acc_sc_mask_mean=mask_mean,
                acc_sc_mask_sd=mask_sd,
                acc_t1_mean=t1_mean,
                acc_t1_sd=t1_sd,
                acc_nsc_patch_mean=nsc_mean,
                acc_nsc_patch_sd=nsc_sd,
            )
        )
    return rows


@dataclass(frozen=True)
class AdGridCell:
    """Seed aggregate of AD at one threshold.

    ``mean_ad`` averages the seeds whose AD is defined and is None when every
    seed is censored (a hatched heatmap cell).
    """

    tau: float
    mean_ad: float | None
    defined_count: int
    censored_count: int

    @property
    def hatched(self) -> bool:
        return self.mean_ad is None


def ad_grid_summary(
    per_seed_grids: list[list[tuple[float, float | UndefinedAd]]],
) -> list[AdGridCell]:
    """Aggregate per-seed AD(tau) grids into per-threshold cells.

    All grids must share the same threshold list. Censored seeds are counted,
    not averaged; a threshold with no defined seed at all is hatched.
    """
    if not per_seed_grids:
        raise ValueError("no grids to summarize")
    taus = [tau for tau, _ in per_seed_grids[0]]
    for grid in per_seed_grids[1:]:
        if [tau for tau, _ in grid] != taus:
            raise ValueError("mismatched tau grids across seeds")

    cells = []
    for i, tau in enumerate(taus):
        values = [grid[i][1] for grid in per_seed_grids]
        defined = [v for v in values if not isinstance(v, UndefinedAd)]
        censored = len(values) - len(defined)
        mean_ad = statistics.mean(defined) if defined else None
        cells.append(AdGridCell(tau=tau, mean_ad=mean_ad, defined_count=len(defined), censored_count=censored))
    return cells
