"""Dataset manifests and the seeded 80/20 evaluation protocol.

Splits shuffle record indices with a seeded Fisher-Yates pass; the first
``round(0.8 * n)`` shuffled indices form the training set. Reduced
training fractions keep a prefix of that order, so for one seed the test
set never changes and smaller training sets nest inside larger ones.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .metrics import MetricReport
from .rng import derive_seed, make_rng

TRAIN_SHARE = 0.8
MANIFEST_HEADER = ["path", "mos"]


class ManifestError(ValueError):
    pass


class RepeatError(RuntimeError):
    """An evaluation failed inside ``repeat_protocol``; ``repeat`` is its index."""

    def __init__(self, repeat: int, cause: BaseException):
        super().__init__(f"repeat {repeat} failed: {cause}")
        self.repeat = repeat


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class Record:
    path: str
    mos: float


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[Record, ...]
    name: str = "dataset"

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        if len(records) < 2:
            raise ManifestError(f"manifest {self.name!r} needs at least 2 records")
        seen = set()
        for rec in records:
            if rec.path in seen:
                raise ManifestError(f"duplicate path in manifest {self.name!r}: {rec.path}")
            if not math.isfinite(rec.mos):
                raise ManifestError(f"non-finite mos for {rec.path}")
            seen.add(rec.path)

    def __len__(self):
        return len(self.records)

    @property
    def paths(self) -> list[str]:
        return [r.path for r in self.records]

    @property
    def labels(self) -> list[float]:
        return [r.mos for r in self.records]


@dataclass(frozen=True)
class Split:
    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    train_fraction: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))
        if set(self.train) & set(self.test):
            raise ValueError("train and test indices overlap")


def load_manifest(path, name: str | None = None) -> DatasetManifest:
    """Read a ``path,mos`` CSV into a manifest, keeping file order."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ManifestError(f"{path}: expected header 'path,mos', got {header!r}")
        records = []
        seen = set()
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ManifestError(f"{path}: row {row_no} has {len(row)} fields, expected 2")
            rec_path, raw_mos = row
            try:
                mos = float(raw_mos)
            except ValueError:
                raise ManifestError(f"{path}: row {row_no}: cannot parse mos {raw_mos!r}") from None
            if not math.isfinite(mos):
                raise ManifestError(f"{path}: row {row_no}: mos must be finite, got {raw_mos!r}")
            if rec_path in seen:
                raise ManifestError(f"{path}: row {row_no}: duplicate path {rec_path}")
            seen.add(rec_path)
            records.append(Record(rec_path, mos))
    return DatasetManifest(tuple(records), name or path.stem)


def write_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for rec in manifest.records:
            writer.writerow([rec.path, repr(rec.mos)])


def make_split(manifest: DatasetManifest, seed: int) -> Split:
    n = len(manifest)
    rng = make_rng(seed)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    n_train = round_half_away(TRAIN_SHARE * n)
    return Split(order[:n_train], order[n_train:], seed, 1.0)


def subsample_train(split: Split, fraction: float) -> Split:
    """Keep the first ``round(fraction * |train|)`` training indices."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n_keep = round_half_away(fraction * len(split.train))
    if n_keep == 0:
        raise ValueError(
            f"fraction {fraction} of {len(split.train)} training records leaves none"
        )
    return replace(split, train=split.train[:n_keep], train_fraction=fraction)


def repeat_seeds(base_seed: int, repeats: int) -> list[int]:
    return [derive_seed(base_seed, k) for k in range(repeats)]


def repeat_protocol(
    manifest: DatasetManifest,
    repeats: int,
    fraction: float,
    evaluate: Callable[[Split], MetricReport],
    base_seed: int = 0,
) -> MetricReport:
    """Average SRCC and PLCC of ``evaluate`` over ``repeats`` seeded splits."""
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    reports = []
    for k, seed in enumerate(repeat_seeds(base_seed, repeats)):
        split = subsample_train(make_split(manifest, seed), fraction)
        try:
            reports.append(evaluate(split))
        except Exception as exc:
            raise RepeatError(k, exc) from exc
    if repeats == 1:
        return reports[0]
    return MetricReport(
        srcc=math.fsum(r.srcc for r in reports) / repeats,
        plcc=math.fsum(r.plcc for r in reports) / repeats,
        n=reports[0].n,
        split_seed=base_seed,
        train_fraction=fraction,
    )
