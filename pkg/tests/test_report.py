import math

import numpy as np
import pytest

from conftest import TABLE1_EXPECTED_PD, make_curve, make_model_curves
from eri.aggregate import ad_grid_summary, summarize
from eri.logio import EvalSplit, RunSet
from eri.metrics import (
    ThresholdConfig,
    ad_sensitivity,
    compute_eri,
    smooth,
    split_final_accuracies,
    time_to_threshold,
)
from eri.report import (
    HATCHED,
    CurveShape,
    Panel,
    ReportError,
    SynthCurveSpec,
    build_panel_report,
    heatmap_export,
    panel_series,
    round3,
    summary_export,
    summary_stats_export,
    synth_curves,
    synth_scenario,
)

# --- formatting ---------------------------------------------------------------


def test_round3_half_up():
    assert round3(0.0265) == "0.027"  # ties away from zero, not banker's
    assert round3(-0.0265) == "-0.027"
    assert round3(0.6284) == "0.628"
    assert round3(0.75) == "0.750"


def test_summary_export_table1(table1_runset):
    results = [compute_eri(table1_runset, m, 0) for m in table1_runset.cl_methods()]
    accs = [split_final_accuracies(table1_runset, m, 0) for m in table1_runset.methods()]
    text = summary_export(summarize(results, accs))
    lines = text.strip().splitlines()
    assert lines[0] == "strategy,PD,SFR_rel,acc_SC_patch,acc_SC_mask,acc_T1,acc_NSC_patch"
    cells = {row.split(",")[0]: row.split(",") for row in lines[1:]}
    # baseline: accuracies only, no diagnostics, no first-phase column
    assert cells["scratch_t2"][1:3] == ["--", "--"]
    assert cells["scratch_t2"][3:] == ["0.628", "0.608", "--", "0.706"]
    assert cells["derpp"][1] == "0.027"
    assert cells["dgr"][1] == "0.247"
    assert cells["dgr"][2] == "-0.141"
    assert cells["sgd"][2] == "-0.115"
    # single pseudo-seed: no +/- sd suffix anywhere
    assert "±" not in text


def test_summary_export_formats_sd():
    from eri.aggregate import SummaryRow

    rows = [
        SummaryRow(
            method="cl",
            n_seeds=2,
            pd_mean=0.0265,
            pd_sd=0.0005,
            sfr_mean=-0.1,
            sfr_sd=0.02,
            acc_sc_patch_mean=0.6,
            acc_sc_patch_sd=0.01,
            acc_sc_mask_mean=0.7,
            acc_sc_mask_sd=0.01,
        )
    ]
    text = summary_export(rows)
    assert "0.027 ± 0.001" in text
    assert "--" in text  # absent optional columns


def test_summary_stats_export_full_precision(table1_runset):
    results = [compute_eri(table1_runset, m, 0) for m in table1_runset.cl_methods()]
    accs = [split_final_accuracies(table1_runset, m, 0) for m in table1_runset.methods()]
    rows = summarize(results, accs)
    text = summary_stats_export(rows)
    derpp = next(line for line in text.splitlines() if line.startswith("derpp"))
    pd_cell = derpp.split(",")[2]
    assert float(pd_cell) == next(r.pd_mean for r in rows if r.method == "derpp")


# --- heatmap -------------------------------------------------------------------


def grid_summary_for(runset, method, cfg=None):
    cfg = cfg or ThresholdConfig()
    baseline = runset.baseline_method
    grids = [
        ad_sensitivity(
            runset.get(method, seed, EvalSplit.T2_SC_PATCHED),
            runset.get(baseline, seed, EvalSplit.T2_SC_PATCHED),
            cfg,
        )
        for seed in runset.seeds(method)
    ]
    return ad_grid_summary(grids)


def test_heatmap_single_method_all_defined():
    rs = synth_scenario("red_flag")
    text = heatmap_export({"shortcut_learner": grid_summary_for(rs, "shortcut_learner")})
    lines = text.strip().splitlines()
    assert lines[0] == "method,0.3,0.35,0.4,0.45,0.5,0.55,0.6"
    cells = lines[1].split(",")[1:]
    assert len(cells) == 7
    assert all(cell != HATCHED for cell in cells)
    assert all(float(cell) < 0 for cell in cells)


def test_heatmap_plateau_hatched_at_high_tau():
    rs = synth_scenario("censored")
    text = heatmap_export({"plateau_learner": grid_summary_for(rs, "plateau_learner")})
    row = text.strip().splitlines()[1].split(",")
    by_tau = dict(zip((0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60), row[1:]))
    for tau in (0.50, 0.55, 0.60):
        assert by_tau[tau] == HATCHED
    for tau in (0.30, 0.35, 0.40):
        assert by_tau[tau] != HATCHED


def test_heatmap_monotone_censoring_from_scratch_side():
    # once the baseline stops crossing, every larger threshold is hatched too
    budget = 50
    scratch = make_curve(
        [(e, 0.45 * (1 - math.exp(-e / 5))) for e in range(1, budget + 1)],
        method="scratch_t2",
    )
    cl = make_curve([(e, 0.9) for e in range(1, budget + 1)], method="cl")
    grid = ad_sensitivity(cl, scratch, ThresholdConfig())
    cells = ad_grid_summary([grid])
    hatched_started = False
    for cell in cells:
        if cell.hatched:
            hatched_started = True
        else:
            assert not hatched_started


def test_heatmap_deterministic_bytes():
    rs = synth_scenario("censored", rng_seed=5, noise_sd=0.02)
    summary = {"plateau_learner": grid_summary_for(rs, "plateau_learner")}
    assert heatmap_export(summary) == heatmap_export(
        {"plateau_learner": grid_summary_for(rs, "plateau_learner")}
    )


def test_heatmap_rejects_mismatched_grids():
    rs = synth_scenario("red_flag")
    a = grid_summary_for(rs, "shortcut_learner")
    b = grid_summary_for(rs, "shortcut_learner", ThresholdConfig(tau_grid=(0.4, 0.5)))
    with pytest.raises(ReportError, match="mismatched"):
        heatmap_export({"a": a, "b": b})


# --- panels --------------------------------------------------------------------


def test_panel_b_zero_for_identical_curves():
    points = [(e, 0.05 * e) for e in range(1, 15)]
    curves = {}
    for method in ("scratch_t2", "clone"):
        for split in (EvalSplit.T2_SC_PATCHED, EvalSplit.T2_SC_MASKED, EvalSplit.T2_VAL):
            curves[(method, 0, split)] = make_curve(points, method=method, split=split)
    rs = RunSet("scratch_t2", curves)
    series = [s for s in panel_series(rs) if s.panel is Panel.B_PD_TIMESERIES]
    assert len(series) == 1
    assert all(v == 0 for _, v in series[0].points)


def test_panel_b_table1_equals_pd(table1_runset):
    report = build_panel_report(table1_runset)
    for s in report.series:
        if s.panel is Panel.B_PD_TIMESERIES:
            expected = TABLE1_EXPECTED_PD[s.method]
            assert abs(s.points[-1][1] - expected) < 1e-9


def test_panel_a_is_smoothed_accuracy(table1_runset):
    cfg = ThresholdConfig()
    report = build_panel_report(table1_runset, cfg)
    for s in report.series:
        if s.panel is Panel.A_ACCURACY and s.method == "dgr":
            reference = smooth(
                table1_runset.get("dgr", 0, EvalSplit.T2_SC_PATCHED), cfg.smoothing_width
            )
            assert s.points == tuple(zip(reference.epochs, reference.accuracies))


def test_panel_c_pointwise_oracle_random_curves():
    rng = np.random.default_rng(77)
    for _ in range(20):
        curves = {}
        n = int(rng.integers(4, 12))
        curves.update(make_model_curves(rng, "scratch_t2", 0, n))
        curves.update(make_model_curves(rng, "cl", 0, n))
        rs = RunSet("scratch_t2", curves)
        series = [s for s in panel_series(rs) if s.panel is Panel.C_SFR_TIMESERIES]
        assert len(series) == 1
        for epoch, value in series[0].points:
            cl_p = rs.get("cl", 0, EvalSplit.T2_SC_PATCHED).accuracy_at(epoch)
            cl_m = rs.get("cl", 0, EvalSplit.T2_SC_MASKED).accuracy_at(epoch)
            s_p = rs.get("scratch_t2", 0, EvalSplit.T2_SC_PATCHED).accuracy_at(epoch)
            s_m = rs.get("scratch_t2", 0, EvalSplit.T2_SC_MASKED).accuracy_at(epoch)
            assert value == (cl_p - cl_m) - (s_p - s_m)


def test_panel_ad_annotations_present():
    rs = synth_scenario("red_flag")
    report = build_panel_report(rs)
    assert report.ad_annotations["shortcut_learner"][0] < 0
    rs = synth_scenario("censored")
    report = build_panel_report(rs)
    assert report.ad_annotations["plateau_learner"][0] is None


def test_panel_empty_intersection_raises():
    curves = {}
    for split in (EvalSplit.T2_SC_PATCHED, EvalSplit.T2_SC_MASKED, EvalSplit.T2_VAL):
        curves[("scratch_t2", 0, split)] = make_curve(
            [(e, 0.5) for e in (1, 2, 3)], method="scratch_t2", split=split
        )
        curves[("cl", 0, split)] = make_curve(
            [(e, 0.5) for e in (4, 5, 6)], method="cl", split=split
        )
    rs = RunSet("scratch_t2", curves)
    with pytest.raises(ReportError, match="empty epoch intersection"):
        panel_series(rs)


# --- synthetic curves --------------------------------------------------------------


def test_logistic_midpoint_is_half_asymptote():
    spec = SynthCurveSpec(shape=CurveShape.LOGISTIC, asymptote=0.8, midpoint=10, rate=1.0)
    c = synth_curves(spec)
    assert c.accuracy_at(10.0) == pytest.approx(0.4, abs=1e-12)


def test_step_jumps_at_midpoint():
    spec = SynthCurveSpec(shape=CurveShape.STEP, asymptote=0.7, midpoint=10, rate=1.0, budget=20)
    c = synth_curves(spec)
    assert c.accuracy_at(9.0) == 0.0
    assert c.accuracy_at(10.0) == 0.7


def test_plateau_censored_above_asymptote():
    spec = SynthCurveSpec(shape=CurveShape.PLATEAU, asymptote=0.45, midpoint=5, rate=1.0)
    c = synth_curves(spec)
    t = time_to_threshold(c, ThresholdConfig(tau=0.6))
    assert not t.crossed
    assert max(c.accuracies) < 0.45


def test_plateau_noise_never_exceeds_asymptote():
    spec = SynthCurveSpec(shape=CurveShape.PLATEAU, asymptote=0.45, midpoint=5, noise_sd=0.2, rng_seed=3)
    assert max(synth_curves(spec).accuracies) <= 0.45


def test_synth_deterministic_per_seed():
    spec = SynthCurveSpec(noise_sd=0.05, rng_seed=9)
    assert synth_curves(spec) == synth_curves(spec)
    assert synth_curves(SynthCurveSpec(noise_sd=0.05, rng_seed=10)) != synth_curves(spec)


def test_synth_spec_bounds():
    with pytest.raises(ValueError, match="asymptote"):
        SynthCurveSpec(asymptote=1.2)
    with pytest.raises(ValueError):
        SynthCurveSpec(midpoint=0)
    with pytest.raises(ValueError):
        SynthCurveSpec(budget=0)


def test_scenario_unknown_name():
    with pytest.raises(ValueError, match="unknown scenario"):
        synth_scenario("nope")


def test_scenario_runsets_are_complete_and_deterministic():
    for name in ("red_flag", "benign_avoidance", "censored"):
        a = synth_scenario(name, rng_seed=4, noise_sd=0.01)
        b = synth_scenario(name, rng_seed=4, noise_sd=0.01)
        assert a == b
        assert len(a.cl_methods()) == 1
