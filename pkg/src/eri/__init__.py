"""Einstellung Rigidity Index toolkit.

Deterministic diagnostics for shortcut-induced rigidity in continual
learning: parse accuracy logs, compute the (AD, PD, SFR_rel) triplet with
censoring-aware time-to-threshold analysis, classify rigidity regimes,
construct the patched/masked benchmark datasets, and export summary tables,
panels, and the AD(tau) sensitivity heatmap.
"""

__version__ = "0.1.0"

from .aggregate import AdGridCell, SummaryRow, ad_grid_summary, summarize
from .datasetops import (
    BenchmarkPlan,
    DatasetFormatError,
    ImageRecord,
    PatchSpec,
    build_phase_datasets,
    inject_patch,
    mask_patch,
    parse_cifar100,
    plan_benchmark,
    serialize_cifar100,
)
from .logio import (
    AccuracyCurve,
    CurveSample,
    EvalSplit,
    Finding,
    LogFormat,
    LogSchemaError,
    MissingSplitError,
    RunSet,
    curve,
    parse_log,
    serialize_log,
    validate_comparability,
)
from .metrics import (
    EriResult,
    FinalAccuracies,
    RegimeLabel,
    RigidityMargins,
    ThresholdConfig,
    TimeToThreshold,
    UndefinedAd,
    ad_sensitivity,
    adaptation_delay,
    classify_regime,
    compute_eri,
    csr_rel,
    final_accuracy,
    masking_delta,
    performance_deficit,
    select_final_checkpoint,
    sfr_rel,
    smooth,
    split_final_accuracies,
    time_to_threshold,
)
from .report import (
    CurveShape,
    Panel,
    PanelSeries,
    SynthCurveSpec,
    heatmap_export,
    panel_series,
    summary_export,
    synth_curves,
    synth_scenario,
)
