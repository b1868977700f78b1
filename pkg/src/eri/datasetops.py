"""Benchmark construction: CIFAR-100 binary I/O, split planning, and the
deterministic shortcut-patch / masking interventions.

Images stay in raw 8-bit space throughout; the patch is meant to be applied
after any spatial train-time augmentation (random crop/flip, which live in
the training loop) and before normalization, so its location is stable in
the final image. Transformed datasets are written back in the same binary
layout so standard loaders work unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

IMAGE_SIDE = 32
PIXEL_BYTES = IMAGE_SIDE * IMAGE_SIDE * 3  # 3072
RECORD_BYTES = PIXEL_BYTES + 2  # coarse byte + fine byte + planar pixels
N_SUPERCLASSES = 20
N_FINE_CLASSES = 100

#: Output keys of build_phase_datasets, in emission order.
PHASE_DATASET_KEYS = ("t1_train", "t2_train", "t2_test_patched", "t2_test_masked", "t2_test_nsc")


class DatasetFormatError(ValueError):
    """Malformed binary dataset input (truncation, out-of-range labels)."""


@dataclass(eq=False)
class ImageRecord:
    """One 32x32 RGB image with its coarse/fine labels.

    Pixels are stored interleaved (H, W, 3) uint8, row-major, channel order
    R,G,B. Treated as immutable by convention: every transform returns a new
    record and never touches the input buffer.
    """

    coarse_label: int
    fine_label: int
    pixels: np.ndarray

    def __post_init__(self):
        if not 0 <= self.coarse_label < N_SUPERCLASSES:
            raise DatasetFormatError(f"coarse label {self.coarse_label} out of range 0-19")
        if not 0 <= self.fine_label < N_FINE_CLASSES:
            raise DatasetFormatError(f"fine label {self.fine_label} out of range 0-99")
        if self.pixels.shape != (IMAGE_SIDE, IMAGE_SIDE, 3) or self.pixels.dtype != np.uint8:
            raise DatasetFormatError(
                f"pixels must be uint8 of shape ({IMAGE_SIDE}, {IMAGE_SIDE}, 3), "
                f"got {self.pixels.dtype} {self.pixels.shape}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageRecord):
            return NotImplemented
        return (
            self.coarse_label == other.coarse_label
            and self.fine_label == other.fine_label
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class PatchSpec:
    """Geometry and colors of the shortcut patch and its mask.

    Defaults: a 4x4 square in the top-left corner (rows 0-3, columns 0-3 in
    the unflipped canonical orientation), magenta when injected, black when
    masked.
    """

    top: int = 0
    left: int = 0
    height: int = 4
    width: int = 4
    inject_color: tuple[int, int, int] = (255, 0, 255)
    mask_color: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("patch must have positive size")
        if self.top < 0 or self.left < 0 or self.top + self.height > IMAGE_SIDE or self.left + self.width > IMAGE_SIDE:
            raise ValueError("patch must lie fully inside the image")
        for color in (self.inject_color, self.mask_color):
            if len(color) != 3 or not all(isinstance(c, int) and 0 <= c <= 255 for c in color):
                raise ValueError(f"color {color} is not an 8-bit RGB triple")


@dataclass(frozen=True)
class BenchmarkPlan:
    """Deterministic 8+4 superclass split with shortcut designation.

    8 first-phase superclasses, 4 disjoint second-phase superclasses of which
    exactly 2 are shortcut (patched) and 2 non-shortcut.
    """

    t1_superclasses: frozenset[int]
    t2_superclasses: frozenset[int]
    sc_superclasses: frozenset[int]
    nsc_superclasses: frozenset[int]
    rng_seed: int

    def __post_init__(self):
        t1, t2, sc, nsc = (
            self.t1_superclasses,
            self.t2_superclasses,
            self.sc_superclasses,
            self.nsc_superclasses,
        )
        for label in t1 | t2:
            if not 0 <= label < N_SUPERCLASSES:
                raise ValueError(f"superclass {label} out of range 0-19")
        if len(t1) != 8:
            raise ValueError(f"first phase needs exactly 8 superclasses, got {len(t1)}")
        if len(t2) != 4:
            raise ValueError(f"second phase needs exactly 4 superclasses, got {len(t2)}")
        if t1 & t2:
            raise ValueError(f"phases overlap on {sorted(t1 & t2)}")
        if len(sc) != 2 or len(nsc) != 2 or (sc | nsc) != t2 or (sc & nsc):
            raise ValueError("shortcut/non-shortcut sets must partition the second phase 2+2")

    def to_json(self) -> str:
        doc = {
            "t1": sorted(self.t1_superclasses),
            "t2": sorted(self.t2_superclasses),
            "sc": sorted(self.sc_superclasses),
            "nsc": sorted(self.nsc_superclasses),
            "rng_seed": self.rng_seed,
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkPlan":
        doc = json.loads(text)
        try:
            return cls(
                t1_superclasses=frozenset(doc["t1"]),
                t2_superclasses=frozenset(doc["t2"]),
                sc_superclasses=frozenset(doc["sc"]),
                nsc_superclasses=frozenset(doc["nsc"]),
                rng_seed=int(doc["rng_seed"]),
            )
        except KeyError as exc:
            raise ValueError(f"plan JSON missing key {exc}") from None


def plan_benchmark(
    rng_seed: int,
    t1: Iterable[int] | None = None,
    t2: Iterable[int] | None = None,
    sc: Iterable[int] | None = None,
) -> BenchmarkPlan:
    """Build the superclass split, either seeded or from explicit overrides.

    Without overrides, the 12 superclasses are the first 12 entries of
    ``numpy.random.default_rng(rng_seed).permutation(20)``: 8 first-phase,
    then 4 second-phase of which the first 2 are shortcut classes. Same seed,
    same plan. Overrides must be given together (t1, t2 and sc; nsc is
    derived) and are validated against the plan invariants.
    """
    given = [x is not None for x in (t1, t2, sc)]
    if any(given) and not all(given):
        raise ValueError("overrides require t1, t2 and sc together")
    if t1 is None:
        perm = np.random.default_rng(rng_seed).permutation(N_SUPERCLASSES)
        t1 = [int(x) for x in perm[:8]]
        t2 = [int(x) for x in perm[8:12]]
        sc = [int(x) for x in perm[8:10]]
    t1_set, t2_set, sc_set = frozenset(t1), frozenset(t2), frozenset(sc)
    return BenchmarkPlan(
        t1_superclasses=t1_set,
        t2_superclasses=t2_set,
        sc_superclasses=sc_set,
        nsc_superclasses=t2_set - sc_set,
        rng_seed=rng_seed,
    )


def parse_cifar100(source: bytes | IO) -> list[ImageRecord]:
    """Decode CIFAR-100 binary records (coarse byte, fine byte, 3072 planar
    pixel bytes each) into interleaved-RGB image records, in file order."""
    buf = source.read() if hasattr(source, "read") else bytes(source)
    if len(buf) == 0 or len(buf) % RECORD_BYTES != 0:
        raise DatasetFormatError(
            f"truncated file: {len(buf)} bytes is not a positive multiple of {RECORD_BYTES}"
        )
    n = len(buf) // RECORD_BYTES
    raw = np.frombuffer(buf, dtype=np.uint8).reshape(n, RECORD_BYTES)
    records = []
    for i in range(n):
        coarse, fine = int(raw[i, 0]), int(raw[i, 1])
        if coarse >= N_SUPERCLASSES:
            raise DatasetFormatError(f"record {i}: coarse label {coarse} out of range 0-19")
        if fine >= N_FINE_CLASSES:
            raise DatasetFormatError(f"record {i}: fine label {fine} out of range 0-99")
        planes = raw[i, 2:].reshape(3, IMAGE_SIDE, IMAGE_SIDE)
        pixels = np.ascontiguousarray(planes.transpose(1, 2, 0))
        records.append(ImageRecord(coarse, fine, pixels))
    return records


def serialize_cifar100(records: Iterable[ImageRecord]) -> bytes:
    """Encode records back to the binary layout; inverse of parse_cifar100."""
    chunks = []
    for r in records:
        chunks.append(bytes([r.coarse_label, r.fine_label]))
        chunks.append(r.pixels.transpose(2, 0, 1).tobytes())
    return b"".join(chunks)


def _paint(image: ImageRecord, spec: PatchSpec, color: tuple[int, int, int]) -> ImageRecord:
    pixels = image.pixels.copy()
    pixels[spec.top : spec.top + spec.height, spec.left : spec.left + spec.width] = color
    return ImageRecord(image.coarse_label, image.fine_label, pixels)


def inject_patch(image: ImageRecord, spec: PatchSpec = PatchSpec()) -> ImageRecord:
    """Overwrite the patch region with the shortcut color.

    Touches exactly the spec'd region, leaves every other pixel bit-identical,
    keeps labels, and is idempotent.
    """
    return _paint(image, spec, spec.inject_color)


def mask_patch(image: ImageRecord, spec: PatchSpec = PatchSpec()) -> ImageRecord:
    """Overwrite the patch region with the mask color.

    The masked set is a deterministic transform of the patched set:
    mask(inject(x)) == mask(x) for every image x.
    """
    return _paint(image, spec, spec.mask_color)


def build_phase_datasets(
    records: list[ImageRecord],
    plan: BenchmarkPlan,
    spec: PatchSpec = PatchSpec(),
) -> dict[str, list[ImageRecord]]:
    """Slice records into the two-phase datasets with interventions applied.

    Returns (in input order within each list):
      t1_train          first-phase superclasses, unpatched
      t2_train          all second-phase superclasses, shortcut classes patched
      t2_test_patched   shortcut classes only, patched
      t2_test_masked    the same underlying images, masked, pairwise aligned
                        with t2_test_patched by index
      t2_test_nsc       non-shortcut classes, untouched

    Raises if the plan references coarse labels absent from ``records``.
    """
    present = {r.coarse_label for r in records}
    missing = sorted((plan.t1_superclasses | plan.t2_superclasses) - present)
    if missing:
        raise ValueError(f"plan references coarse labels absent from records: {missing}")

    sc, nsc = plan.sc_superclasses, plan.nsc_superclasses
    sc_records = [r for r in records if r.coarse_label in sc]
    return {
        "t1_train": [r for r in records if r.coarse_label in plan.t1_superclasses],
        "t2_train": [
            inject_patch(r, spec) if r.coarse_label in sc else r
            for r in records
            if r.coarse_label in plan.t2_superclasses
        ],
        "t2_test_patched": [inject_patch(r, spec) for r in sc_records],
        "t2_test_masked": [mask_patch(r, spec) for r in sc_records],
        "t2_test_nsc": [r for r in records if r.coarse_label in nsc],
    }
