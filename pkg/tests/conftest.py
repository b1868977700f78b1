from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from eri.logio import AccuracyCurve, CurveSample, EvalSplit, RunSet, parse_log

DATA_DIR = Path(__file__).parent / "data"

#: Summary-table means the fixture log encodes (single pseudo-seed 0).
TABLE1_EXPECTED_PD = {"derpp": 0.027, "dgr": 0.247, "ewc_on": 0.022, "gpm": 0.026, "sgd": 0.028}
TABLE1_EXPECTED_SFR = {"derpp": -0.095, "dgr": -0.141, "ewc_on": -0.105, "gpm": -0.112, "sgd": -0.115}


def make_curve(points, method="m", seed=0, split=EvalSplit.T2_SC_PATCHED) -> AccuracyCurve:
    return AccuracyCurve(method, seed, split, tuple(CurveSample(float(e), float(a)) for e, a in points))


def random_curve(rng: np.random.Generator, n_min=1, n_max=30, **kwargs) -> AccuracyCurve:
    n = int(rng.integers(n_min, n_max + 1))
    accs = np.round(rng.uniform(0.0, 1.0, n), 6)
    return make_curve([(i + 1, a) for i, a in enumerate(accs)], **kwargs)


def make_model_curves(rng: np.random.Generator, method: str, seed: int, n_epochs: int) -> dict:
    """Random patched/masked/val curves sharing one epoch grid."""
    curves = {}
    for split in (EvalSplit.T2_SC_PATCHED, EvalSplit.T2_SC_MASKED, EvalSplit.T2_VAL):
        accs = np.round(rng.uniform(0.0, 1.0, n_epochs), 6)
        curves[(method, seed, split)] = make_curve(
            [(i + 1, a) for i, a in enumerate(accs)], method=method, seed=seed, split=split
        )
    return curves


def random_runset(rng: np.random.Generator, method="cl") -> RunSet:
    curves = {}
    curves.update(make_model_curves(rng, "scratch_t2", 0, int(rng.integers(3, 16))))
    curves.update(make_model_curves(rng, method, 0, int(rng.integers(3, 16))))
    return RunSet(baseline_method="scratch_t2", curves=curves)


@pytest.fixture(scope="session")
def table1_log_path() -> Path:
    return DATA_DIR / "table1_means.csv"


@pytest.fixture(scope="session")
def table1_runset(table1_log_path) -> RunSet:
    return parse_log(table1_log_path.read_text())
