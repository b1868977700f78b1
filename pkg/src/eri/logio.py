"""Accuracy-log data model and parsing.

A study log holds one accuracy curve per (method, seed, evaluation split).
The on-disk schema is a flat CSV (header ``method,seed,split,epoch_eff,acc``)
or the JSON equivalent ``{"metadata": {...}, "rows": [...]}``. Parsing is
strict: every schema violation raises :class:`LogSchemaError` with the
offending line/row; nothing is silently repaired.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, NamedTuple


class EvalSplit(Enum):
    """Closed set of evaluation splits a checkpoint can be scored on."""

    T2_SC_PATCHED = "t2_sc_patched"
    T2_SC_MASKED = "t2_sc_masked"
    T2_NSC_PATCHED = "t2_nsc_patched"
    T2_NSC_MASKED = "t2_nsc_masked"
    T1_ALL = "t1_all"
    T2_VAL = "t2_val"


#: Splits every baseline seed must provide (threshold curve, masking pair,
#: and the validation curve used for checkpoint selection).
MANDATORY_BASELINE_SPLITS = frozenset(
    {EvalSplit.T2_SC_PATCHED, EvalSplit.T2_SC_MASKED, EvalSplit.T2_VAL}
)

DEFAULT_BASELINE = "scratch_t2"

CSV_HEADER = ["method", "seed", "split", "epoch_eff", "acc"]
#: Alternative per-class header; rows carry raw counts and are macro-averaged
#: into a single accuracy per (method, seed, split, epoch) at parse time.
CSV_HEADER_PER_CLASS = ["method", "seed", "split", "epoch_eff", "class", "correct", "total"]

_METHOD_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


class LogFormat(Enum):
    CSV = "csv"
    JSON = "json"


class LogSchemaError(ValueError):
    """Raised for any malformed or invariant-violating log input.

    ``location`` is a human-readable pointer (CSV line or JSON row index).
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class MissingSplitError(LogSchemaError):
    """A required (method, seed, split) curve is absent from the log."""


class CurveSample(NamedTuple):
    effective_epoch: float
    accuracy: float


@dataclass(frozen=True)
class AccuracyCurve:
    """Ordered accuracy samples for one (method, seed, split).

    Samples are strictly increasing in effective epoch; accuracies lie in
    [0, 1]. Instances are immutable and safe to share.
    """

    method: str
    seed: int
    split: EvalSplit
    samples: tuple[CurveSample, ...]

    def __post_init__(self):
        if not self.samples:
            raise ValueError(f"curve {self.key()} has no samples")
        prev = None
        for s in self.samples:
            if s.effective_epoch < 0:
                raise ValueError(f"curve {self.key()}: negative effective epoch {s.effective_epoch}")
            if not 0.0 <= s.accuracy <= 1.0:
                raise ValueError(f"curve {self.key()}: accuracy {s.accuracy} out of [0, 1]")
            if prev is not None and s.effective_epoch <= prev:
                raise ValueError(
                    f"curve {self.key()}: epochs not strictly increasing at {s.effective_epoch}"
                )
            prev = s.effective_epoch

    def key(self) -> tuple[str, int, str]:
        return (self.method, self.seed, self.split.value)

    @property
    def epochs(self) -> tuple[float, ...]:
        return tuple(s.effective_epoch for s in self.samples)

    @property
    def accuracies(self) -> tuple[float, ...]:
        return tuple(s.accuracy for s in self.samples)

    @property
    def max_epoch(self) -> float:
        return self.samples[-1].effective_epoch

    def accuracy_at(self, epoch: float) -> float | None:
        for s in self.samples:
            if s.effective_epoch == epoch:
                return s.accuracy
        return None


def curve(method: str, seed: int, split: EvalSplit, points: Iterable[tuple[float, float]]) -> AccuracyCurve:
    """Convenience constructor from (epoch, accuracy) pairs."""
    return AccuracyCurve(method, seed, split, tuple(CurveSample(float(e), float(a)) for e, a in points))


@dataclass(frozen=True)
class RunSet:
    """All curves of a study, keyed by (method, seed, split).

    ``baseline_method`` names the from-scratch reference run; every one of
    its seeds must carry the mandatory splits. Immutable after construction.
    """

    baseline_method: str
    curves: dict[tuple[str, int, EvalSplit], AccuracyCurve]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for key, c in self.curves.items():
            if key != (c.method, c.seed, c.split):
                raise ValueError(f"curve stored under wrong key {key}")
        baseline_seeds = self.seeds(self.baseline_method)
        if not baseline_seeds:
            raise LogSchemaError(f"baseline method '{self.baseline_method}' not present in log")
        for seed in baseline_seeds:
            for split in sorted(MANDATORY_BASELINE_SPLITS, key=lambda s: s.value):
                if (self.baseline_method, seed, split) not in self.curves:
                    raise LogSchemaError(
                        f"baseline '{self.baseline_method}' seed {seed} is missing "
                        f"mandatory split '{split.value}'"
                    )

    def methods(self) -> list[str]:
        return sorted({m for m, _, _ in self.curves})

    def cl_methods(self) -> list[str]:
        return [m for m in self.methods() if m != self.baseline_method]

    def seeds(self, method: str) -> list[int]:
        return sorted({s for m, s, _ in self.curves if m == method})

    def has(self, method: str, seed: int, split: EvalSplit) -> bool:
        return (method, seed, split) in self.curves

    def get(self, method: str, seed: int, split: EvalSplit) -> AccuracyCurve:
        try:
            return self.curves[(method, seed, split)]
        except KeyError:
            raise MissingSplitError(
                f"missing split '{split.value}' for method '{method}' seed {seed}"
            ) from None

    def splits(self, method: str, seed: int) -> list[EvalSplit]:
        return sorted(
            (sp for m, s, sp in self.curves if m == method and s == seed),
            key=lambda sp: sp.value,
        )


@dataclass(frozen=True)
class Finding:
    """One comparability warning from :func:`validate_comparability`."""

    code: str  # "missing_seed" | "epoch_budget_mismatch"
    method: str
    message: str


def _as_text(source: str | bytes | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _parse_int(raw: str, what: str, loc: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise LogSchemaError(f"invalid {what} '{raw}'", loc) from None


def _parse_float(raw: str, what: str, loc: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise LogSchemaError(f"invalid {what} '{raw}'", loc) from None
    if value != value or value in (float("inf"), float("-inf")):
        raise LogSchemaError(f"non-finite {what} '{raw}'", loc)
    return value


def _validate_row_fields(method: str, seed_raw, split_raw, epoch_raw, acc_raw, loc: str):
    if not _METHOD_RE.match(method or ""):
        raise LogSchemaError(f"invalid method identifier '{method}'", loc)
    seed = seed_raw if isinstance(seed_raw, int) else _parse_int(str(seed_raw), "seed", loc)
    try:
        split = EvalSplit(split_raw)
    except ValueError:
        known = ", ".join(s.value for s in EvalSplit)
        raise LogSchemaError(f"unknown split '{split_raw}' (expected one of: {known})", loc) from None
    epoch = _parse_float(str(epoch_raw), "epoch_eff", loc)
    if epoch < 0:
        raise LogSchemaError(f"negative epoch_eff {epoch}", loc)
    acc = _parse_float(str(acc_raw), "acc", loc)
    if not 0.0 <= acc <= 1.0:
        raise LogSchemaError(f"accuracy out of range: {acc}", loc)
    return method, seed, split, epoch, acc


def _build_runset(
    rows: Iterable[tuple[str, int, EvalSplit, float, float, str]],
    baseline_method: str,
    metadata: dict[str, str],
) -> RunSet:
    samples: dict[tuple[str, int, EvalSplit], dict[float, float]] = {}
    for method, seed, split, epoch, acc, loc in rows:
        per_curve = samples.setdefault((method, seed, split), {})
        if epoch in per_curve:
            raise LogSchemaError(
                f"duplicate (method,seed,split,epoch) key "
                f"({method},{seed},{split.value},{epoch})",
                loc,
            )
        per_curve[epoch] = acc
    if not samples:
        raise LogSchemaError("log contains no rows")
    curves = {}
    for (method, seed, split), by_epoch in samples.items():
        pts = tuple(CurveSample(e, by_epoch[e]) for e in sorted(by_epoch))
        curves[(method, seed, split)] = AccuracyCurve(method, seed, split, pts)
    return RunSet(baseline_method=baseline_method, curves=curves, metadata=metadata)


def _parse_csv(text: str, baseline_method: str | None) -> RunSet:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise LogSchemaError("empty file (no header)") from None
    header = [h.strip() for h in header]
    if header == CSV_HEADER:
        per_class = False
    elif header == CSV_HEADER_PER_CLASS:
        per_class = True
    else:
        raise LogSchemaError(
            f"bad header {header!r}; expected {CSV_HEADER!r} or {CSV_HEADER_PER_CLASS!r}",
            "line 1",
        )

    rows: list[tuple[str, int, EvalSplit, float, float, str]] = []
    if not per_class:
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            loc = f"line {lineno}"
            if len(raw) != 5:
                raise LogSchemaError(f"malformed row ({len(raw)} fields, expected 5)", loc)
            rows.append(_validate_row_fields(*[c.strip() for c in raw], loc=loc) + (loc,))
    else:
        # Per-class counts: reduce to macro-averaged accuracy per checkpoint.
        counts: dict[tuple[str, int, EvalSplit, float], dict[str, tuple[int, int]]] = {}
        locs: dict[tuple[str, int, EvalSplit, float], str] = {}
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            loc = f"line {lineno}"
            if len(raw) != 7:
                raise LogSchemaError(f"malformed row ({len(raw)} fields, expected 7)", loc)
            method, seed_s, split_s, epoch_s, cls, correct_s, total_s = [c.strip() for c in raw]
            method, seed, split, epoch, _ = _validate_row_fields(
                method, seed_s, split_s, epoch_s, "0", loc
            )
            correct = _parse_int(correct_s, "correct", loc)
            total = _parse_int(total_s, "total", loc)
            if total < 1 or correct < 0 or correct > total:
                raise LogSchemaError(f"bad class counts {correct}/{total}", loc)
            key = (method, seed, split, epoch)
            per_cls = counts.setdefault(key, {})
            if cls in per_cls:
                raise LogSchemaError(f"duplicate class '{cls}' for {key}", loc)
            per_cls[cls] = (correct, total)
            locs.setdefault(key, loc)
        for (method, seed, split, epoch), per_cls in counts.items():
            acc = sum(c / t for c, t in per_cls.values()) / len(per_cls)
            rows.append((method, seed, split, epoch, acc, locs[(method, seed, split, epoch)]))

    return _build_runset(rows, baseline_method or DEFAULT_BASELINE, {})


def _parse_json(text: str, baseline_method: str | None) -> RunSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LogSchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "rows" not in doc:
        raise LogSchemaError('top-level object must contain a "rows" list')
    meta_raw = doc.get("metadata", {})
    if not isinstance(meta_raw, dict):
        raise LogSchemaError('"metadata" must be an object')
    metadata = {str(k): str(v) for k, v in meta_raw.items()}
    # The baseline is a RunSet field, not free-form metadata; popping it here
    # keeps serialize/parse round-trips exact.
    metadata_baseline = metadata.pop("baseline_method", None)
    raw_rows = doc["rows"]
    if not isinstance(raw_rows, list):
        raise LogSchemaError('"rows" must be a list')

    rows = []
    for i, row in enumerate(raw_rows):
        loc = f"row {i}"
        if not isinstance(row, dict):
            raise LogSchemaError("row is not an object", loc)
        extra = set(row) - set(CSV_HEADER)
        missing = set(CSV_HEADER) - set(row)
        if extra or missing:
            raise LogSchemaError(
                f"row keys mismatch (missing {sorted(missing)}, unexpected {sorted(extra)})", loc
            )
        rows.append(
            _validate_row_fields(
                str(row["method"]), row["seed"], row["split"], row["epoch_eff"], row["acc"], loc
            )
            + (loc,)
        )

    baseline = baseline_method or metadata_baseline or DEFAULT_BASELINE
    return _build_runset(rows, baseline, metadata)


def parse_log(
    source: str | bytes | IO,
    format: LogFormat = LogFormat.CSV,
    baseline_method: str | None = None,
) -> RunSet:
    """Parse a study log into a validated, immutable :class:`RunSet`.

    Row order in the input never affects the result: samples are sorted by
    effective epoch per curve. ``baseline_method`` defaults to the JSON
    metadata entry when present, else ``"scratch_t2"``.

    Raises :class:`LogSchemaError` on any malformed row, out-of-range
    accuracy, duplicate (method, seed, split, epoch) key, or missing
    mandatory baseline splits.
    """
    text = _as_text(source)
    if format is LogFormat.CSV:
        return _parse_csv(text, baseline_method)
    if format is LogFormat.JSON:
        return _parse_json(text, baseline_method)
    raise ValueError(f"unknown log format {format!r}")


def serialize_log(runset: RunSet, format: LogFormat = LogFormat.CSV) -> str:
    """Serialize a RunSet back to the log schema (deterministic row order)."""
    keys = sorted(runset.curves, key=lambda k: (k[0], k[1], k[2].value))
    if format is LogFormat.CSV:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for key in keys:
            c = runset.curves[key]
            for s in c.samples:
                writer.writerow([c.method, c.seed, c.split.value, repr(s.effective_epoch), repr(s.accuracy)])
        return out.getvalue()
    if format is LogFormat.JSON:
        metadata = dict(runset.metadata)
        metadata["baseline_method"] = runset.baseline_method
        rows = [
            {
                "method": c.method,
                "seed": c.seed,
                "split": c.split.value,
                "epoch_eff": s.effective_epoch,
                "acc": s.accuracy,
            }
            for key in keys
            for c in [runset.curves[key]]
            for s in c.samples
        ]
        return json.dumps({"metadata": metadata, "rows": rows}, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown log format {format!r}")


#: Relative tolerance on per-curve epoch budgets before flagging a mismatch.
EPOCH_BUDGET_RTOL = 0.10


def validate_comparability(runset: RunSet, method: str) -> list[Finding]:
    """Check that ``method`` is comparable against the baseline.

    Returns warnings (not errors) for seed-set mismatches between the method
    and the baseline, and for curves whose maximum effective epoch differs
    from the baseline's by more than 10%. An empty list means the pairing is
    fully comparable.
    """
    if method not in runset.methods():
        raise KeyError(f"unknown method '{method}'")
    baseline = runset.baseline_method
    findings: list[Finding] = []

    method_seeds = set(runset.seeds(method))
    baseline_seeds = set(runset.seeds(baseline))
    for seed in sorted(baseline_seeds - method_seeds):
        findings.append(
            Finding("missing_seed", method, f"seed {seed} present in baseline but missing in '{method}'")
        )
    for seed in sorted(method_seeds - baseline_seeds):
        findings.append(
            Finding("missing_seed", method, f"seed {seed} present in '{method}' but missing in baseline")
        )

    for seed in sorted(method_seeds & baseline_seeds):
        for split in runset.splits(method, seed):
            if not runset.has(baseline, seed, split):
                continue
            m_max = runset.get(method, seed, split).max_epoch
            b_max = runset.get(baseline, seed, split).max_epoch
            limit = EPOCH_BUDGET_RTOL * b_max
            if abs(m_max - b_max) > limit:
                findings.append(
                    Finding(
                        "epoch_budget_mismatch",
                        method,
                        f"'{method}' seed {seed} split {split.value} logged to "
                        f"epoch {m_max:g} vs baseline {b_max:g}",
                    )
                )
    return findings
