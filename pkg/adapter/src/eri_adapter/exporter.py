"""Log exporter: effective-epoch counting and schema-conforming CSV output.

The adapter deliberately does not import the diagnostics package; the CSV
schema is the contract. Plain callables (`on_batch`, `on_checkpoint`) keep it
usable from any training framework; wrap them in the framework's own callback
API as needed. One logger instance per (method, seed) run; instances are not
safe for concurrent writers to one file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

#: Closed split vocabulary of the log schema.
VALID_SPLITS = (
    "t2_sc_patched",
    "t2_sc_masked",
    "t2_nsc_patched",
    "t2_nsc_masked",
    "t1_all",
    "t2_val",
)

CSV_HEADER = ("method", "seed", "split", "epoch_eff", "acc")


def macro_accuracy(per_class: Mapping[str, tuple[int, int]]) -> float:
    """Mean of per-class accuracies from (correct, total) counts."""
    if not per_class:
        raise ValueError("per-class counts are empty")
    fractions = []
    for cls, (correct, total) in per_class.items():
        if total < 1 or correct < 0 or correct > total:
            raise ValueError(f"bad counts for class '{cls}': {correct}/{total}")
        fractions.append(correct / total)
    return sum(fractions) / len(fractions)


@dataclass
class EffectiveEpochCounter:
    """Tracks effective second-phase epochs: real samples / training-set size.

    Only the real second-phase portion of a batch advances the counter;
    replayed or generated samples never do. Counting is additive, so batch
    order within an epoch does not matter.
    """

    t2_train_size: int
    real_t2_samples_seen: int = 0

    def __post_init__(self):
        if self.t2_train_size < 1:
            raise ValueError("t2_train_size must be a positive sample count")
        if self.real_t2_samples_seen < 0:
            raise ValueError("real_t2_samples_seen must be non-negative")

    def on_batch(self, real_t2_count: int) -> "EffectiveEpochCounter":
        """Advance by the real second-phase portion of one optimizer step."""
        if real_t2_count < 0:
            raise ValueError(f"real_t2_count must be non-negative, got {real_t2_count}")
        self.real_t2_samples_seen += real_t2_count
        return self

    @property
    def effective_epoch(self) -> float:
        return self.real_t2_samples_seen / self.t2_train_size


class RunLogger:
    """Appends checkpoint evaluations for one (method, seed) run.

    Writes ``{method}_{seed}.csv`` under ``out_dir`` plus a small
    ``{method}_{seed}.meta.json`` sidecar (training-set size, evaluation
    cadence). Every append is flushed, keeping the file schema-valid at all
    times.
    """

    def __init__(
        self,
        out_dir: str | Path,
        method: str,
        seed: int,
        t2_train_size: int,
        eval_cadence: str = "every_effective_epoch",
    ):
        if not method:
            raise ValueError("method identifier must be non-empty")
        self.method = method
        self.seed = seed
        self.counter = EffectiveEpochCounter(t2_train_size)
        self.path = Path(out_dir) / f"{method}_{seed}.csv"
        self.path.parent.mkdir(parents=True, exist_ok=True)

        new_file = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        if new_file:
            self._writer.writerow(CSV_HEADER)
            self._fh.flush()

        meta = {
            "method": method,
            "seed": seed,
            "t2_train_size": t2_train_size,
            "eval_cadence": eval_cadence,
            "effective_epoch_rule": "real_t2_samples_seen / t2_train_size; replay excluded",
        }
        self.path.with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def on_batch(self, real_t2_count: int) -> None:
        self.counter.on_batch(real_t2_count)

    def on_checkpoint(
        self, evals: Mapping[str, float | Mapping[str, tuple[int, int]]]
    ) -> list[tuple[str, int, str, float, float]]:
        """Append one row per evaluated split at the current effective epoch.

        Values may be plain accuracies in [0, 1] or per-class (correct,
        total) counts, which are macro-averaged before logging. Returns the
        rows written.
        """
        epoch = self.counter.effective_epoch
        rows = []
        for split in sorted(evals):
            if split not in VALID_SPLITS:
                raise ValueError(
                    f"unknown split '{split}' (expected one of: {', '.join(VALID_SPLITS)})"
                )
            value = evals[split]
            acc = macro_accuracy(value) if isinstance(value, Mapping) else float(value)
            if not 0.0 <= acc <= 1.0:
                raise ValueError(f"accuracy {acc} out of [0, 1] for split '{split}'")
            rows.append((self.method, self.seed, split, epoch, acc))
        for row in rows:
            self._writer.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4])])
        self._fh.flush()
        return rows

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RunLogger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def merge_logs(run_files: list[str | Path], out_path: str | Path) -> Path:
    """Concatenate per-run CSVs into one study log (single shared header)."""
    if not run_files:
        raise ValueError("no run files to merge")
    out_path = Path(out_path)
    lines: list[str] = []
    for i, path in enumerate(sorted(str(p) for p in run_files)):
        content = Path(path).read_text(encoding="utf-8").splitlines()
        if not content or content[0] != ",".join(CSV_HEADER):
            raise ValueError(f"{path} does not carry the expected log header")
        lines.extend(content if i == 0 else content[1:])
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_path
