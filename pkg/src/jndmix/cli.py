"""Command line entry point: ``jndmix <command> [options]``.

Commands
    estimate-jnd  write one ``<stem>.jndm`` map per manifest record
    augment       write augmented PNGs, an output manifest and an audit log
    verify        count pixels whose change exceeds the rounded JND bound
    split         write seeded train/test index files
    metrics       print ``srcc,plcc,n`` for a prediction and a ground-truth file

Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import augment as aug
from .image_io import (
    FormatError,
    Image,
    JndMap,
    atomic_write,
    load_image,
    load_jnd_map,
    save_image,
    save_jnd_map,
)
from .jnd_estimator import estimate_jnd, scale_map
from .metrics import evaluate
from .protocol import (
    DatasetManifest,
    ManifestError,
    Record,
    load_manifest,
    make_split,
    repeat_seeds,
    subsample_train,
    write_manifest,
)
from .rng import MASK64, derive_seed

log = logging.getLogger("jndmix")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

MODES = ("jndmix", "full-jnd", "gaussian")
ESTIMATORS = ("chou-li", "import")
AUDIT_HEADER = ["path", "seed", "lambda", "mode"]
OUT_MANIFEST = "manifest.csv"
AUDIT_LOG = "audit.csv"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, ValueError):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


@dataclass(frozen=True)
class RunConfig:
    command: str
    manifest: Path | None = None
    maps: Path | None = None
    out: Path | None = None
    seed: int = 0
    mode: str = "jndmix"
    sigma: float | None = None
    gain: float | None = None
    fraction: float = 1.0
    repeats: int = 1
    estimator: str = "chou-li"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise CliError(f"unknown mode {self.mode!r}")
        if self.estimator not in ESTIMATORS:
            raise CliError(f"unknown estimator {self.estimator!r}")
        if self.mode == "gaussian" and self.command == "augment" and self.sigma is None:
            raise CliError("--mode gaussian requires --sigma")
        for name in ("sigma", "gain"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise CliError(f"--{name} must be positive and finite, got {value}")
        if not 0.0 < self.fraction <= 1.0:
            raise CliError(f"--fraction must lie in (0, 1], got {self.fraction}")
        if self.repeats < 1:
            raise CliError(f"--repeats must be >= 1, got {self.repeats}")
        if self.workers < 1:
            raise CliError(f"--workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed <= MASK64:
            raise CliError(f"--seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.estimator == "import" and self.command in ("augment", "verify") and self.maps is None:
            raise CliError("--estimator import requires --maps")


def _resolve(manifest_path: Path, record_path: str) -> Path:
    p = Path(record_path)
    return p if p.is_absolute() else manifest_path.parent / p


def _stems(manifest: DatasetManifest) -> list[str]:
    stems = [Path(r.path).stem for r in manifest.records]
    if len(set(stems)) != len(stems):
        dupes = sorted({s for s in stems if stems.count(s) > 1})
        raise CliError(f"manifest records share file stems: {', '.join(dupes)}")
    return stems


def _require_dir(path: Path | None, flag: str) -> Path:
    if path is None:
        raise CliError(f"{flag} is required")
    return path


def _map_for(config: RunConfig, image: Image, stem: str) -> JndMap:
    if config.estimator == "import":
        jnd = load_jnd_map(config.maps / f"{stem}.jndm")
    else:
        jnd = estimate_jnd(image)
    if config.gain is not None:
        jnd = scale_map(jnd, config.gain)
    if jnd.shape != image.shape:
        raise CliError(f"{stem}: JND map shape {jnd.shape} does not match image shape {image.shape}")
    return jnd


def _run_records(func, items, workers: int):
    """Apply ``func`` to every item; results come back in item order.

    Each result is ``(value, None)`` or ``(None, exception)``.
    """

    def guarded(item):
        try:
            return func(item), None
        except (ValueError, OSError, CliError) as exc:
            return None, exc

    if workers == 1:
        return [guarded(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, items))


def _report_failures(failures) -> int:
    code = EXIT_OK
    for label, exc in failures:
        log.error("%s: %s", label, exc)
        code = max(code, _exit_code(exc))
    return code


def cmd_estimate_jnd(config: RunConfig) -> int:
    manifest = load_manifest(config.manifest)
    out = _require_dir(config.out, "--out")
    out.mkdir(parents=True, exist_ok=True)
    stems = _stems(manifest)

    def work(i):
        jnd = estimate_jnd(load_image(_resolve(config.manifest, manifest.records[i].path)))
        if config.gain is not None:
            jnd = scale_map(jnd, config.gain)
        save_jnd_map(jnd, out / f"{stems[i]}.jndm")

    results = _run_records(work, range(len(manifest)), config.workers)
    failures = [(manifest.records[i].path, err) for i, (_, err) in enumerate(results) if err]
    log.info("wrote %d of %d JND maps to %s", len(manifest) - len(failures), len(manifest), out)
    return _report_failures(failures)


def _augment_one(config: RunConfig, manifest: DatasetManifest, stems, out: Path, i: int):
    rec = manifest.records[i]
    image = load_image(_resolve(config.manifest, rec.path))
    seed = derive_seed(config.seed, i)
    lam = None
    if config.mode == "jndmix":
        sample = aug.jndmix(image, rec.mos, _map_for(config, image, stems[i]), seed)
        result, lam = sample.image, sample.lam
    elif config.mode == "full-jnd":
        result = aug.full_jnd_inject(image, _map_for(config, image, stems[i]))
    else:
        result = aug.gaussian_inject(image, config.sigma, seed)
    name = f"{stems[i]}.png"
    save_image(result, out / name)
    return Record(name, rec.mos), [name, str(seed), "" if lam is None else repr(lam), config.mode]


def cmd_augment(config: RunConfig) -> int:
    manifest = load_manifest(config.manifest)
    out = _require_dir(config.out, "--out")
    out.mkdir(parents=True, exist_ok=True)
    stems = _stems(manifest)

    results = _run_records(
        lambda i: _augment_one(config, manifest, stems, out, i),
        range(len(manifest)),
        config.workers,
    )
    # results are already in index order, which fixes the audit order
    done = [value for value, err in results if err is None]
    failures = [(manifest.records[i].path, err) for i, (_, err) in enumerate(results) if err]

    if done:
        write_manifest(DatasetManifest(tuple(r for r, _ in done), manifest.name), out / OUT_MANIFEST)
    else:
        log.error("no records augmented; output manifest not written")

    def write_audit(fh):
        text = io.StringIO()
        writer = csv.writer(text, lineterminator="\n")
        writer.writerow(AUDIT_HEADER)
        writer.writerows(line for _, line in done)
        fh.write(text.getvalue().encode("utf-8"))

    atomic_write(out / AUDIT_LOG, write_audit)
    log.info("augmented %d of %d records into %s", len(done), len(manifest), out)
    return _report_failures(failures)


@dataclass(frozen=True)
class Violation:
    path: str
    x: int
    y: int
    c: int
    original: int
    augmented: int
    bound: int


def find_violations(original: Image, augmented: Image, jnd: JndMap, path: str = "") -> list[Violation]:
    """Positions where an unclamped output moved further than ``round(jnd)``."""
    if not original.shape == augmented.shape == jnd.shape:
        raise CliError(
            f"{path}: shape mismatch original={original.shape} "
            f"augmented={augmented.shape} map={jnd.shape}"
        )
    x0 = original.data.astype(np.int32)
    x1 = augmented.data.astype(np.int32)
    bound = aug.round_half_away(jnd.data).astype(np.int64)
    clamped = (x1 == 0) | (x1 == 255)
    bad = ~clamped & (np.abs(x1 - x0) > bound)
    return [
        Violation(path, int(x), int(y), int(c), int(x0[y, x, c]), int(x1[y, x, c]), int(bound[y, x, c]))
        for y, x, c in zip(*np.nonzero(bad))
    ]


def verify_corpus(config: RunConfig, augmented_manifest: Path) -> list[list[Violation]]:
    """Per-record violation lists for an original/augmented manifest pair."""
    original = load_manifest(config.manifest)
    augmented = load_manifest(augmented_manifest)
    if len(original) != len(augmented):
        raise CliError(
            f"mismatched file sets: {len(original)} original records, "
            f"{len(augmented)} augmented records"
        )
    stems = _stems(original)

    def check(i):
        rec_o, rec_a = original.records[i], augmented.records[i]
        if Path(rec_a.path).stem != stems[i]:
            raise CliError(f"mismatched file sets: record {i} is {rec_o.path} vs {rec_a.path}")
        image = load_image(_resolve(config.manifest, rec_o.path))
        result = load_image(_resolve(augmented_manifest, rec_a.path))
        return find_violations(image, result, _map_for(config, image, stems[i]), rec_a.path)

    results = _run_records(check, range(len(original)), config.workers)
    for _, err in results:
        if err is not None:
            raise err
    return [value for value, _ in results]


def cmd_verify(config: RunConfig, augmented_manifest: Path, max_report: int = 100) -> int:
    per_record = verify_corpus(config, augmented_manifest)
    total = sum(len(v) for v in per_record)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["path", "x", "y", "c", "original", "augmented", "bound"])
    shown = 0
    for violations in per_record:
        for v in violations:
            if shown >= max_report:
                break
            writer.writerow([v.path, v.x, v.y, v.c, v.original, v.augmented, v.bound])
            shown += 1
    affected = sum(1 for v in per_record if v)
    print(
        f"violations: {total} in {affected} of {len(per_record)} images",
        file=sys.stderr,
    )
    return EXIT_OK if total == 0 else EXIT_VALIDATION


def format_split(train, test) -> str:
    return "".join(f"{i}\n" for i in train) + "---\n" + "".join(f"{i}\n" for i in test)


def cmd_split(config: RunConfig) -> int:
    manifest = load_manifest(config.manifest)
    out = _require_dir(config.out, "--out")
    out.mkdir(parents=True, exist_ok=True)
    width = max(2, len(str(config.repeats - 1)))
    for k, seed in enumerate(repeat_seeds(config.seed, config.repeats)):
        split = subsample_train(make_split(manifest, seed), config.fraction)
        text = format_split(split.train, split.test).encode("ascii")
        atomic_write(out / f"split_{k:0{width}d}.txt", lambda fh, t=text: fh.write(t))
    log.info("wrote %d splits to %s", config.repeats, out)
    return EXIT_OK


def read_scores(path: Path) -> tuple[list[str] | None, list[float]]:
    """Read a score file: one number per line, or CSV whose last column is the score.

    A non-numeric first row is treated as a header. When rows have more than
    one column, the first column is returned as keys for alignment checks.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if rows:
        try:
            float(rows[0][-1])
        except ValueError:
            rows = rows[1:]
    keys = [row[0] for row in rows] if rows and len(rows[0]) > 1 else None
    scores = []
    for n, row in enumerate(rows, start=1):
        try:
            scores.append(float(row[-1]))
        except ValueError:
            raise CliError(f"{path}: data row {n}: cannot parse score {row[-1]!r}") from None
    return keys, scores


def cmd_metrics(pred_path: Path, gt_path: Path) -> int:
    pred_keys, pred = read_scores(pred_path)
    gt_keys, gt = read_scores(gt_path)
    if len(pred) != len(gt):
        raise CliError(f"length mismatch: {pred_path} has {len(pred)} scores, {gt_path} has {len(gt)}")
    if pred_keys is not None and gt_keys is not None and pred_keys != gt_keys:
        first = next(i for i, (a, b) in enumerate(zip(pred_keys, gt_keys)) if a != b)
        raise CliError(f"misaligned files at data row {first + 1}: {pred_keys[first]} vs {gt_keys[first]}")
    report = evaluate(pred, gt)
    print(f"{report.srcc:.6f},{report.plcc:.6f},{report.n}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jndmix", description="JND-bounded noise augmentation for IQA datasets")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, maps=False, out=False, seed=False, workers=True):
        p.add_argument("--manifest", type=Path, required=True, help="CSV with header path,mos")
        if maps:
            p.add_argument("--maps", type=Path, help="directory of <stem>.jndm maps")
            p.add_argument("--estimator", choices=ESTIMATORS, default=None,
                           help="import maps from --maps or estimate them (default: import if --maps given)")
            p.add_argument("--gain", type=float, help="scale every JND threshold by this factor")
        if out:
            p.add_argument("--out", type=Path, required=True)
        if seed:
            p.add_argument("--seed", type=int, default=0, help="master seed (64-bit unsigned)")
        if workers:
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("estimate-jnd", help="estimate JND maps for every record")
    common(p, out=True)
    p.add_argument("--gain", type=float)

    p = sub.add_parser("augment", help="write augmented images, manifest and audit log")
    common(p, maps=True, out=True, seed=True)
    p.add_argument("--mode", choices=MODES, default="jndmix")
    p.add_argument("--sigma", type=float, help="noise std-dev for --mode gaussian")

    p = sub.add_parser("verify", help="check augmented images against the JND bound")
    common(p, maps=True)
    p.add_argument("--augmented", type=Path, required=True, help="manifest written by augment")
    p.add_argument("--max-report", type=int, default=100, help="violation rows to print")

    p = sub.add_parser("split", help="write seeded train/test splits")
    common(p, out=True, seed=True, workers=False)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--fraction", type=float, default=1.0)

    p = sub.add_parser("metrics", help="print srcc,plcc,n")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    maps = getattr(args, "maps", None)
    estimator = getattr(args, "estimator", None) or ("import" if maps is not None else "chou-li")
    return RunConfig(
        command=args.command,
        manifest=getattr(args, "manifest", None),
        maps=maps,
        out=getattr(args, "out", None),
        seed=getattr(args, "seed", 0),
        mode=getattr(args, "mode", "jndmix"),
        sigma=getattr(args, "sigma", None),
        gain=getattr(args, "gain", None),
        fraction=getattr(args, "fraction", 1.0),
        repeats=getattr(args, "repeats", 1),
        estimator=estimator,
        workers=getattr(args, "workers", 1),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        if args.command == "metrics":
            return cmd_metrics(args.pred, args.gt)
        config = config_from_args(args)
        if args.command == "estimate-jnd":
            return cmd_estimate_jnd(config)
        if args.command == "augment":
            return cmd_augment(config)
        if args.command == "verify":
            return cmd_verify(config, args.augmented, args.max_report)
        return cmd_split(config)
    except (CliError, ManifestError, FormatError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
