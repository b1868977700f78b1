"""Training-loop export adapter.

Framework-agnostic callbacks that write accuracy logs in the diagnostics
toolkit's CSV schema, enforcing its two logging conventions:

* effective epochs count only real second-phase samples (replayed or
  generated samples never advance the clock);
* one row per (split, checkpoint), appended and flushed as soon as the
  checkpoint is evaluated, so a crash loses at most the current epoch.
"""

__version__ = "0.1.0"

from .exporter import (
    VALID_SPLITS,
    EffectiveEpochCounter,
    RunLogger,
    macro_accuracy,
    merge_logs,
)
