import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eri.logio import (
    EvalSplit,
    LogFormat,
    LogSchemaError,
    MissingSplitError,
    RunSet,
    parse_log,
    serialize_log,
    validate_comparability,
)

BASE_ROWS = [
    ("scratch_t2", 0, "t2_sc_patched", 1, 0.30),
    ("scratch_t2", 0, "t2_sc_patched", 2, 0.55),
    ("scratch_t2", 0, "t2_sc_masked", 1, 0.28),
    ("scratch_t2", 0, "t2_sc_masked", 2, 0.52),
    ("scratch_t2", 0, "t2_val", 1, 0.31),
    ("scratch_t2", 0, "t2_val", 2, 0.56),
]


def to_csv(rows):
    lines = ["method,seed,split,epoch_eff,acc"]
    lines += [",".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def test_parse_minimal_csv():
    rs = parse_log(to_csv(BASE_ROWS))
    assert rs.baseline_method == "scratch_t2"
    curve = rs.get("scratch_t2", 0, EvalSplit.T2_SC_PATCHED)
    assert curve.epochs == (1.0, 2.0)
    assert curve.accuracies == (0.30, 0.55)


def test_parse_accepts_bytes_and_streams(tmp_path):
    text = to_csv(BASE_ROWS)
    assert parse_log(text.encode()) == parse_log(text)
    p = tmp_path / "log.csv"
    p.write_text(text)
    with open(p) as fh:
        assert parse_log(fh) == parse_log(text)


def test_accuracy_out_of_range_reports_line():
    rows = BASE_ROWS + [("cl", 0, "t2_sc_patched", 1, 1.2)]
    with pytest.raises(LogSchemaError, match=r"line 8.*accuracy out of range"):
        parse_log(to_csv(rows))


def test_duplicate_key_rejected():
    rows = BASE_ROWS + [("scratch_t2", 0, "t2_sc_patched", 1, 0.4)]
    with pytest.raises(LogSchemaError, match="duplicate"):
        parse_log(to_csv(rows))


def test_unknown_split_rejected():
    rows = BASE_ROWS + [("cl", 0, "t2_bogus", 1, 0.4)]
    with pytest.raises(LogSchemaError, match="unknown split 't2_bogus'"):
        parse_log(to_csv(rows))


def test_malformed_row_reports_line():
    text = to_csv(BASE_ROWS) + "cl,0,t2_sc_patched,1\n"
    with pytest.raises(LogSchemaError, match="line 8"):
        parse_log(text)


def test_bad_header_rejected():
    with pytest.raises(LogSchemaError, match="bad header"):
        parse_log("method,seed,split,epoch,acc\n")


def test_missing_baseline_split_rejected():
    rows = [r for r in BASE_ROWS if r[2] != "t2_val"]
    with pytest.raises(LogSchemaError, match="missing mandatory split 't2_val'"):
        parse_log(to_csv(rows))


def test_missing_baseline_method_rejected():
    rows = [("cl",) + r[1:] for r in BASE_ROWS]
    with pytest.raises(LogSchemaError, match="baseline method 'scratch_t2' not present"):
        parse_log(to_csv(rows))


def test_baseline_override():
    rows = [("mybase",) + r[1:] for r in BASE_ROWS]
    rs = parse_log(to_csv(rows), baseline_method="mybase")
    assert rs.baseline_method == "mybase"


def test_negative_epoch_rejected():
    rows = BASE_ROWS + [("cl", 0, "t2_sc_patched", -1, 0.4)]
    with pytest.raises(LogSchemaError, match="negative epoch_eff"):
        parse_log(to_csv(rows))


def test_fractional_epochs_allowed():
    rows = BASE_ROWS + [
        ("cl", 0, "t2_sc_patched", 0.5, 0.1),
        ("cl", 0, "t2_sc_patched", 1.25, 0.2),
    ]
    rs = parse_log(to_csv(rows))
    assert rs.get("cl", 0, EvalSplit.T2_SC_PATCHED).epochs == (0.5, 1.25)


def test_epoch_zero_permitted_not_required():
    # pre-training checkpoints may be logged at e=0
    rows = [("scratch_t2", 0, "t2_sc_patched", 0, 0.02)] + BASE_ROWS
    rs = parse_log(to_csv(rows))
    assert rs.get("scratch_t2", 0, EvalSplit.T2_SC_PATCHED).epochs == (0.0, 1.0, 2.0)
    for fmt in (LogFormat.CSV, LogFormat.JSON):
        assert parse_log(serialize_log(rs, fmt), fmt) == rs


def test_row_permutation_invariance():
    # 20-row fixture: shuffled input parses to the identical runset
    rows = list(BASE_ROWS)
    for e in range(3, 10):
        rows.append(("cl", 1, "t2_sc_patched", e, round(0.05 * e, 3)))
        rows.append(("cl", 1, "t1_all", e, 0.5))
    assert len(rows) == 20
    reference = parse_log(to_csv(rows))
    rng = random.Random(7)
    for _ in range(10):
        shuffled = list(rows)
        rng.shuffle(shuffled)
        assert parse_log(to_csv(shuffled)) == reference


def test_csv_round_trip():
    rs = parse_log(to_csv(BASE_ROWS))
    assert parse_log(serialize_log(rs, LogFormat.CSV)) == rs


def test_json_round_trip_preserves_metadata_and_baseline():
    doc = {
        "metadata": {"dataset": "synthetic", "baseline_method": "mybase"},
        "rows": [
            {"method": "mybase", "seed": 0, "split": s, "epoch_eff": e, "acc": a}
            for (_, _, s, e, a) in BASE_ROWS
        ],
    }
    rs = parse_log(json.dumps(doc), LogFormat.JSON)
    assert rs.baseline_method == "mybase"
    assert rs.metadata["dataset"] == "synthetic"
    assert parse_log(serialize_log(rs, LogFormat.JSON), LogFormat.JSON) == rs


def test_json_row_error_reports_index():
    doc = {"rows": [{"method": "m", "seed": 0, "split": "t2_val", "epoch_eff": 1, "acc": 2.0}]}
    with pytest.raises(LogSchemaError, match="row 0"):
        parse_log(json.dumps(doc), LogFormat.JSON)


def test_json_extra_key_rejected():
    doc = {
        "rows": [
            {"method": "m", "seed": 0, "split": "t2_val", "epoch_eff": 1, "acc": 0.5, "oops": 1}
        ]
    }
    with pytest.raises(LogSchemaError, match="unexpected"):
        parse_log(json.dumps(doc), LogFormat.JSON)


def test_per_class_counts_macro_averaged():
    lines = ["method,seed,split,epoch_eff,class,correct,total"]
    for split in ("t2_sc_patched", "t2_sc_masked", "t2_val"):
        lines.append(f"scratch_t2,0,{split},1,c1,8,10")
        lines.append(f"scratch_t2,0,{split},1,c2,6,10")
    rs = parse_log("\n".join(lines) + "\n")
    # macro average of 0.8 and 0.6
    assert rs.get("scratch_t2", 0, EvalSplit.T2_SC_PATCHED).accuracies == (0.7,)


def test_per_class_bad_counts_rejected():
    text = "method,seed,split,epoch_eff,class,correct,total\nscratch_t2,0,t2_val,1,c1,11,10\n"
    with pytest.raises(LogSchemaError, match="bad class counts"):
        parse_log(text)


def test_empty_log_rejected():
    with pytest.raises(LogSchemaError, match="no rows"):
        parse_log("method,seed,split,epoch_eff,acc\n")


def test_missing_split_error_message():
    rs = parse_log(to_csv(BASE_ROWS))
    with pytest.raises(MissingSplitError, match="t2_nsc_patched"):
        rs.get("scratch_t2", 0, EvalSplit.T2_NSC_PATCHED)


# --- validate_comparability -------------------------------------------------


def cl_rows(seed, max_epoch, step=1):
    rows = []
    e = step
    while e <= max_epoch:
        rows.append(("cl", seed, "t2_sc_patched", e, 0.5))
        e += step
    rows += [("cl", seed, "t2_sc_masked", step, 0.5), ("cl", seed, "t2_val", step, 0.5)]
    return rows


def baseline_rows(seed, max_epoch):
    rows = []
    for e in range(1, max_epoch + 1):
        rows.append(("scratch_t2", seed, "t2_sc_patched", e, 0.5))
    rows += [
        ("scratch_t2", seed, "t2_sc_masked", 1, 0.5),
        ("scratch_t2", seed, "t2_val", 1, 0.5),
    ]
    return rows


def test_fully_comparable_method_has_no_findings():
    rows = baseline_rows(0, 5) + [("cl",) + r[1:] for r in baseline_rows(0, 5)]
    rs = parse_log(to_csv(rows))
    assert validate_comparability(rs, "cl") == []


def test_missing_seed_finding():
    rows = []
    for seed in (0, 1, 2, 3):
        rows += baseline_rows(seed, 3)
    for seed in (0, 1, 2):
        rows += cl_rows(seed, 3)
    rs = parse_log(to_csv(rows))
    findings = validate_comparability(rs, "cl")
    missing = [f for f in findings if f.code == "missing_seed"]
    assert len(missing) == 1
    assert "seed 3" in missing[0].message


def test_epoch_budget_mismatch_finding():
    # method logged to e=25 vs baseline e=50: one mismatch on the shared split
    rows = baseline_rows(0, 50)
    rows += [("cl", 0, "t2_sc_patched", e, 0.5) for e in range(1, 26)]
    rows += [("cl", 0, "t2_sc_masked", 1, 0.5), ("cl", 0, "t2_val", 1, 0.5)]
    rs = parse_log(to_csv(rows))
    findings = validate_comparability(rs, "cl")
    mismatches = [f for f in findings if f.code == "epoch_budget_mismatch"]
    assert len(mismatches) == 1
    assert "epoch 25 vs baseline 50" in mismatches[0].message


def test_within_tolerance_budget_is_fine():
    rows = baseline_rows(0, 50)
    rows += [("cl", 0, "t2_sc_patched", e, 0.5) for e in range(1, 47)]  # 46 vs 50: 8% off
    rows += [("cl", 0, "t2_sc_masked", 1, 0.5), ("cl", 0, "t2_val", 1, 0.5)]
    rs = parse_log(to_csv(rows))
    assert [f for f in validate_comparability(rs, "cl") if f.code == "epoch_budget_mismatch"] == []


def test_unknown_method_raises():
    rs = parse_log(to_csv(BASE_ROWS))
    with pytest.raises(KeyError, match="nope"):
        validate_comparability(rs, "nope")


# --- properties ---------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(
    accs=st.lists(st.floats(0, 1, allow_nan=False).map(lambda x: round(x, 6)), min_size=1, max_size=12),
    seed=st.integers(0, 3),
)
def test_round_trip_random_curves(accs, seed):
    rows = list(BASE_ROWS)
    rows += [("cl", seed, "t2_sc_patched", i + 1, a) for i, a in enumerate(accs)]
    rs = parse_log(to_csv(rows))
    for fmt in (LogFormat.CSV, LogFormat.JSON):
        assert parse_log(serialize_log(rs, fmt), fmt) == rs


@settings(max_examples=30, deadline=None)
@given(permutation=st.permutations(list(range(len(BASE_ROWS)))))
def test_parse_permutation_invariance_property(permutation):
    reference = parse_log(to_csv(BASE_ROWS))
    shuffled = [BASE_ROWS[i] for i in permutation]
    assert parse_log(to_csv(shuffled)) == reference
