#!/usr/bin/env python3
"""Emit a synthetic dataset file in the CIFAR-100 binary layout (random
pixels, all 20 superclasses) so the plan/inject/mask pipeline can be tried
without downloading the real dataset.

Usage:
    python3 scripts/make_synthetic_cifar.py --out train.bin [--per-class 25] [--seed 0]
    eri plan --seed 0 --out plan.json
    eri inject --in train.bin --plan plan.json --out datasets --emit all
"""

import argparse

import numpy as np

from eri.datasetops import ImageRecord, serialize_cifar100


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--per-class", type=int, default=25, help="records per superclass")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    records = []
    for coarse in range(20):
        for _ in range(args.per_class):
            records.append(
                ImageRecord(
                    coarse_label=coarse,
                    fine_label=int(rng.integers(coarse * 5, coarse * 5 + 5)),
                    pixels=rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8),
                )
            )
    with open(args.out, "wb") as fh:
        fh.write(serialize_cifar100(records))
    print(f"wrote {len(records)} records to {args.out}")


if __name__ == "__main__":
    main()
