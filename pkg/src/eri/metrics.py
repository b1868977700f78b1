"""ERI facet computations.

All quantities derive from accuracy curves on the shortcut superclasses:

* adaptation delay (AD): difference in effective epochs to reach a target
  accuracy threshold, continual learner minus from-scratch baseline, after
  centered moving-average smoothing; right-censored curves make AD undefined;
* performance deficit (PD): final baseline accuracy minus final continual
  accuracy on the patched split, at each model's best-validation checkpoint;
* masking delta / SFR_rel / CSR_rel: patched-minus-masked accuracy per model
  and the continual model's excess (or, by magnitude, excess sensitivity)
  relative to the baseline;
* a regime classifier mapping the triplet plus the baseline's cue sign onto
  one of five decision labels.

Every function is pure and deterministic; identical inputs give bit-identical
outputs regardless of evaluation order.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from enum import Enum

from .logio import AccuracyCurve, CurveSample, EvalSplit, RunSet

#: Threshold grid used for the AD sensitivity sweep.
DEFAULT_TAU_GRID = (0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60)


@dataclass(frozen=True)
class ThresholdConfig:
    """Threshold and smoothing parameters for time-to-threshold analysis."""

    tau: float = 0.6
    smoothing_width: int = 3
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.smoothing_width < 1:
            raise ValueError(f"smoothing width must be >= 1, got {self.smoothing_width}")
        if not self.tau_grid:
            raise ValueError("tau_grid must be non-empty")
        prev = 0.0
        for t in self.tau_grid:
            if not 0.0 < t < 1.0:
                raise ValueError(f"tau_grid entry {t} out of (0, 1)")
            if t <= prev:
                raise ValueError("tau_grid must be strictly increasing")
            prev = t


@dataclass(frozen=True)
class RigidityMargins:
    """Decision margins for the high-rigidity (red-flag) rule.

    Defaults follow the toolkit's reference configuration; all three margins
    are user-chosen by design. ``near_zero_eps`` bounds how negative AD may
    be while still counting as "approximately zero" in the benign rule.
    """

    delta_ad: float = 1.0
    delta_pd: float = 0.01
    delta_sfr: float = 0.05
    near_zero_eps: float = 1e-9

    def __post_init__(self):
        for name in ("delta_ad", "delta_pd", "delta_sfr", "near_zero_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class TimeToThreshold:
    """Outcome of a threshold scan: crossed at an epoch, or censored.

    ``epoch`` is the crossing epoch when ``crossed`` is true, otherwise the
    maximum logged epoch (the budget within which no crossing occurred).
    """

    crossed: bool
    epoch: float

    @classmethod
    def crossed_at(cls, epoch: float) -> "TimeToThreshold":
        return cls(True, epoch)

    @classmethod
    def censored_at(cls, budget: float) -> "TimeToThreshold":
        return cls(False, budget)


@dataclass(frozen=True)
class UndefinedAd:
    """AD is undefined because at least one curve never reached tau.

    ``censored`` records which side failed to cross ("cl", "scratch" or
    "both"); ``budget`` is the largest epoch budget among the censored
    curves. This bookkeeping drives hatched heatmap cells downstream.
    """

    censored: str
    budget: float

    def __post_init__(self):
        if self.censored not in ("cl", "scratch", "both"):
            raise ValueError(f"bad censored side '{self.censored}'")


class RegimeLabel(Enum):
    RED_FLAG = "red_flag"
    BENIGN_TRANSFER = "benign_transfer"
    CUE_HARMFUL = "cue_harmful"
    AMBIGUOUS = "ambiguous"
    AD_UNDEFINED = "ad_undefined"


@dataclass(frozen=True)
class EriResult:
    """Per-(method, seed) rigidity diagnostics.

    ``ad`` is a float or :class:`UndefinedAd`. ``baseline_seed`` is the seed
    the baseline side was paired with, or None when baseline quantities fell
    back to the seed-mean (no matching baseline seed existed). ``note``
    carries a human-readable qualifier for patterns the label alone does not
    convey (e.g. benign avoidance).
    """

    method: str
    seed: int
    ad: float | UndefinedAd
    pd: float
    delta_cl: float
    delta_s: float
    sfr_rel: float
    csr_rel: float
    regime: RegimeLabel
    note: str | None = None
    baseline_seed: int | None = None


@dataclass(frozen=True)
class FinalAccuracies:
    """Raw accuracies per split at one model's selected checkpoint.

    ``t1`` / ``nsc_patched`` are None when the split was not logged (the
    baseline, for instance, has no first-phase task to retain).
    """

    method: str
    seed: int
    checkpoint: float
    sc_patched: float
    sc_masked: float
    t1: float | None = None
    nsc_patched: float | None = None


class CheckpointNotEvaluated(ValueError):
    """The selected checkpoint epoch is absent from a split's grid."""


def smooth(curve: AccuracyCurve, w: int) -> AccuracyCurve:
    """Centered moving average of width ``w``, truncated at the boundaries.

    Window at index i spans indices [i - (w-1)//2, i + w//2], clipped to the
    curve (even widths extend one sample further to the right). No padding is
    used, so early samples are never diluted by fictitious zeros. ``w = 1``
    returns the input unchanged.
    """
    if w < 1:
        raise ValueError(f"smoothing width must be >= 1, got {w}")
    if w == 1:
        return curve
    accs = curve.accuracies
    n = len(accs)
    left, right = (w - 1) // 2, w // 2
    smoothed = []
    for i in range(n):
        lo, hi = max(0, i - left), min(n, i + right + 1)
        mean = sum(accs[lo:hi]) / (hi - lo)
        smoothed.append(min(1.0, max(0.0, mean)))
    samples = tuple(
        CurveSample(s.effective_epoch, a) for s, a in zip(curve.samples, smoothed)
    )
    return replace(curve, samples=samples)


def time_to_threshold(curve: AccuracyCurve, cfg: ThresholdConfig) -> TimeToThreshold:
    """Earliest logged epoch whose smoothed accuracy reaches ``cfg.tau``.

    The curve is smoothed with ``cfg.smoothing_width`` first; if no sample
    qualifies the result is censored at the curve's maximum epoch.
    """
    sm = smooth(curve, cfg.smoothing_width)
    for s in sm.samples:
        if s.accuracy >= cfg.tau:
            return TimeToThreshold.crossed_at(s.effective_epoch)
    return TimeToThreshold.censored_at(sm.max_epoch)


def adaptation_delay(
    cl: AccuracyCurve, scratch: AccuracyCurve, cfg: ThresholdConfig
) -> float | UndefinedAd:
    """Epochs-to-threshold difference, continual minus scratch.

    Negative values mean the continual learner reached the threshold first.
    If either curve is censored the delay is undefined and the censored side
    is recorded.
    """
    t_cl = time_to_threshold(cl, cfg)
    t_s = time_to_threshold(scratch, cfg)
    if t_cl.crossed and t_s.crossed:
        return t_cl.epoch - t_s.epoch
    if not t_cl.crossed and not t_s.crossed:
        return UndefinedAd("both", max(t_cl.epoch, t_s.epoch))
    if not t_cl.crossed:
        return UndefinedAd("cl", t_cl.epoch)
    return UndefinedAd("scratch", t_s.epoch)


def ad_sensitivity(
    cl: AccuracyCurve, scratch: AccuracyCurve, cfg: ThresholdConfig
) -> list[tuple[float, float | UndefinedAd]]:
    """Adaptation delay evaluated at every threshold in ``cfg.tau_grid``."""
    return [
        (tau, adaptation_delay(cl, scratch, replace(cfg, tau=tau)))
        for tau in cfg.tau_grid
    ]


def select_final_checkpoint(val_curve: AccuracyCurve) -> float:
    """Epoch of the best raw validation accuracy; earliest epoch wins ties."""
    best = val_curve.samples[0]
    for s in val_curve.samples[1:]:
        if s.accuracy > best.accuracy:
            best = s
    return best.effective_epoch


def final_accuracy(curve: AccuracyCurve, checkpoint: float) -> float:
    """Raw accuracy at ``checkpoint``; the epoch must be on the curve's grid.

    There is no interpolation: evaluating a checkpoint the split was never
    scored at is an error.
    """
    acc = curve.accuracy_at(checkpoint)
    if acc is None:
        raise CheckpointNotEvaluated(
            f"checkpoint {checkpoint:g} not evaluated on split "
            f"'{curve.split.value}' of method '{curve.method}' seed {curve.seed}"
        )
    return acc


def performance_deficit(a_scratch_final: float, a_cl_final: float) -> float:
    """Final-accuracy gap, scratch minus continual; positive means the
    continual model underperforms."""
    return a_scratch_final - a_cl_final


def masking_delta(acc_patched: float, acc_masked: float) -> float:
    """Patched minus masked accuracy for one model; positive indicates cue
    reliance, negative that the cue is ignored or harmful."""
    return acc_patched - acc_masked


def sfr_rel(delta_cl: float, delta_s: float) -> float:
    """Excess cue reliance of the continual model over the baseline."""
    return delta_cl - delta_s


def csr_rel(delta_cl: float, delta_s: float) -> float:
    """Magnitude-based cue sensitivity difference (for cue-harmful regimes)."""
    return abs(delta_cl) - abs(delta_s)


def classify_regime(
    ad: float | UndefinedAd,
    pd: float,
    sfr: float,
    delta_s: float,
    margins: RigidityMargins,
) -> RegimeLabel:
    """Map a diagnostic triplet plus the baseline cue sign onto a label.

    Precedence: undefined AD short-circuits everything; a non-positive
    baseline delta means the cue is not helpful and the reliance sign flips
    interpretation (cue-harmful regime); otherwise the red-flag and benign
    rules apply with the configured margins, and anything that satisfies
    neither is ambiguous and warrants additional probes.
    """
    if isinstance(ad, UndefinedAd):
        return RegimeLabel.AD_UNDEFINED
    if delta_s <= 0:
        return RegimeLabel.CUE_HARMFUL
    if ad <= -margins.delta_ad and pd <= -margins.delta_pd and sfr >= margins.delta_sfr:
        return RegimeLabel.RED_FLAG
    if ad >= -margins.near_zero_eps and pd >= 0 and sfr <= 0:
        return RegimeLabel.BENIGN_TRANSFER
    return RegimeLabel.AMBIGUOUS


#: Attached to results showing fast adaptation with the cue acting as a
#: distractor: not a red flag, but not the benign bullet either.
BENIGN_AVOIDANCE_NOTE = (
    "benign-avoidance pattern: adapts faster than the baseline without cue "
    "reliance (AD<0, PD>0, SFR_rel<0 while the cue helps the baseline); the "
    "cue behaves as a distractor for the continual learner"
)


def benign_avoidance_note(
    ad: float | UndefinedAd, pd: float, sfr: float, delta_s: float
) -> str | None:
    """Descriptive note for the faster-but-cue-avoiding pattern, else None."""
    if isinstance(ad, UndefinedAd):
        return None
    if ad < 0 and pd > 0 and sfr < 0 and delta_s > 0:
        return BENIGN_AVOIDANCE_NOTE
    return None


def split_final_accuracies(runset: RunSet, method: str, seed: int) -> FinalAccuracies:
    """Raw per-split accuracies at the method's own best-validation checkpoint.

    Optional splits (first-task retention, non-shortcut classes) yield None
    when absent from the log.
    """
    val = runset.get(method, seed, EvalSplit.T2_VAL)
    checkpoint = select_final_checkpoint(val)
    sc_patched = final_accuracy(runset.get(method, seed, EvalSplit.T2_SC_PATCHED), checkpoint)
    sc_masked = final_accuracy(runset.get(method, seed, EvalSplit.T2_SC_MASKED), checkpoint)
    t1 = None
    if runset.has(method, seed, EvalSplit.T1_ALL):
        t1 = final_accuracy(runset.get(method, seed, EvalSplit.T1_ALL), checkpoint)
    nsc = None
    if runset.has(method, seed, EvalSplit.T2_NSC_PATCHED):
        nsc = final_accuracy(runset.get(method, seed, EvalSplit.T2_NSC_PATCHED), checkpoint)
    return FinalAccuracies(method, seed, checkpoint, sc_patched, sc_masked, t1, nsc)


@dataclass(frozen=True)
class _BaselineSide:
    """Baseline quantities entering one ERI comparison."""

    tts: TimeToThreshold
    a_star: float
    delta: float
    seed: int | None  # None when averaged across baseline seeds


def _baseline_side(runset: RunSet, seed: int, cfg: ThresholdConfig) -> _BaselineSide:
    baseline = runset.baseline_method
    baseline_seeds = runset.seeds(baseline)
    if seed in baseline_seeds:
        patched = runset.get(baseline, seed, EvalSplit.T2_SC_PATCHED)
        finals = split_final_accuracies(runset, baseline, seed)
        return _BaselineSide(
            tts=time_to_threshold(patched, cfg),
            a_star=finals.sc_patched,
            delta=masking_delta(finals.sc_patched, finals.sc_masked),
            seed=seed,
        )
    # No identically-numbered baseline seed: fall back to the mean over the
    # baseline's own seeds, flagged via seed=None. AD stays undefined if any
    # baseline seed is censored (a mean crossing epoch would hide censoring).
    sides = [_baseline_side(runset, s, cfg) for s in baseline_seeds]
    if all(b.tts.crossed for b in sides):
        tts = TimeToThreshold.crossed_at(statistics.mean(b.tts.epoch for b in sides))
    else:
        tts = TimeToThreshold.censored_at(max(b.tts.epoch for b in sides if not b.tts.crossed))
    return _BaselineSide(
        tts=tts,
        a_star=statistics.mean(b.a_star for b in sides),
        delta=statistics.mean(b.delta for b in sides),
        seed=None,
    )


def compute_eri(
    runset: RunSet,
    method: str,
    seed: int,
    cfg: ThresholdConfig | None = None,
    margins: RigidityMargins | None = None,
) -> EriResult:
    """Full diagnostic triplet for one (method, seed) against the baseline.

    The continual seed pairs with the identically-numbered baseline seed when
    available; otherwise baseline quantities fall back to the baseline's
    seed-mean and the result is flagged (``baseline_seed=None``).
    """
    cfg = cfg or ThresholdConfig()
    margins = margins or RigidityMargins()
    if method == runset.baseline_method:
        raise ValueError(f"method '{method}' is the baseline; compare a continual method against it")

    cl_patched = runset.get(method, seed, EvalSplit.T2_SC_PATCHED)
    cl_finals = split_final_accuracies(runset, method, seed)
    base = _baseline_side(runset, seed, cfg)

    t_cl = time_to_threshold(cl_patched, cfg)
    ad: float | UndefinedAd
    if t_cl.crossed and base.tts.crossed:
        ad = t_cl.epoch - base.tts.epoch
    elif not t_cl.crossed and not base.tts.crossed:
        ad = UndefinedAd("both", max(t_cl.epoch, base.tts.epoch))
    elif not t_cl.crossed:
        ad = UndefinedAd("cl", t_cl.epoch)
    else:
        ad = UndefinedAd("scratch", base.tts.epoch)

    delta_cl = masking_delta(cl_finals.sc_patched, cl_finals.sc_masked)
    pd = performance_deficit(base.a_star, cl_finals.sc_patched)
    sfr = sfr_rel(delta_cl, base.delta)
    csr = csr_rel(delta_cl, base.delta)
    regime = classify_regime(ad, pd, sfr, base.delta, margins)
    note = benign_avoidance_note(ad, pd, sfr, base.delta)

    return EriResult(
        method=method,
        seed=seed,
        ad=ad,
        pd=pd,
        delta_cl=delta_cl,
        delta_s=base.delta,
        sfr_rel=sfr,
        csr_rel=csr,
        regime=regime,
        note=note,
        baseline_seed=base.seed,
    )
