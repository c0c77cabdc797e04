"""Sweep orchestration: transcode per quality, train per grid cell, aggregate.

Grid cells are (quality, architecture, seed) triples. Featurized datasets
are computed once per quality and cached as tensor files; finished cells
leave JSON done-markers carrying their record (including the original wall
time), so a rerun on the same output directory retrains nothing and
reproduces the results CSV byte for byte. A diverged training run yields a
flagged record instead of aborting the sweep.
"""

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bitbudget import DEFAULT_MODEL, BitBudgetModel
from .datasets import Dataset, DatasetRef, load_dataset
from .errors import ConfigError, DivergenceError
from .fileformats import load_tensor, save_tensor
from .helmholtz import detect_knee, fit_curve, noise_bits_estimate
from .nn import ModelSpec, TrainConfig, build_model, get_architecture, train

CSV_HEADER = ("quality,Q,bits_per_pixel,arch,params,seed,"
              "test_accuracy,epochs_to_converge,wall_seconds,status")


@dataclass(frozen=True)
class SweepConfig:
    dataset: DatasetRef
    qualities: tuple
    architectures: tuple
    seeds: tuple
    train: TrainConfig
    output_dir: str
    workers: int = 1
    tau: float = 0.05
    custom_architectures: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "qualities", tuple(self.qualities))
        object.__setattr__(self, "architectures", tuple(self.architectures))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.qualities or not self.architectures or not self.seeds:
            raise ConfigError("qualities, architectures, and seeds must be non-empty")
        diffs = np.diff(np.asarray(self.qualities, dtype=np.float64))
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("quality grid must be strictly ordered")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        try:
            dataset = DatasetRef.from_dict(doc["dataset"])
            train_cfg = TrainConfig(**doc.get("train", {}))
            return cls(
                dataset=dataset,
                qualities=tuple(doc["qualities"]),
                architectures=tuple(doc["architectures"]),
                seeds=tuple(doc.get("seeds", [0])),
                train=train_cfg,
                output_dir=doc["output_dir"],
                workers=int(doc.get("workers", 1)),
                tau=float(doc.get("tau", 0.05)),
                custom_architectures=dict(doc.get("custom_architectures", {})),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid sweep config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "SweepConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse sweep config {path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class SweepRecord:
    """One (quality, architecture, seed) measurement."""

    quality: float
    normalized_q: float
    bits_per_pixel: float
    arch: str
    params: int
    seed: int
    test_accuracy: float
    epochs_to_converge: int
    wall_seconds: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def csv_row(self) -> str:
        quality = f"{self.quality:g}"
        return (f"{quality},{self.normalized_q:.4f},{self.bits_per_pixel:.6f},"
                f"{self.arch},{self.params},{self.seed},{self.test_accuracy:.6f},"
                f"{self.epochs_to_converge},{self.wall_seconds:.3f},{self.status}")

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepRecord":
        doc = dict(doc)
        if doc.get("test_accuracy") is None:
            doc["test_accuracy"] = float("nan")
        return cls(**doc)


def normalized_quality(kind: str, quality) -> float:
    """Images map q to Q=(100-q)/100; audio qualities are already ratios."""
    if kind == "cifar10":
        return (100.0 - float(quality)) / 100.0
    return float(quality)


def bits_metric(kind: str, quality, budget: BitBudgetModel = DEFAULT_MODEL) -> float:
    """Images: remaining bits per pixel. Audio: relative bitrate ratio 1-Q."""
    if kind == "cifar10":
        return budget.bits_remaining(quality)
    return 1.0 - float(quality)


def _quality_tag(quality) -> str:
    return f"{float(quality):g}".replace(".", "p").replace("-", "m")


def _cache_paths(cache_dir: Path, quality):
    tag = _quality_tag(quality)
    names = ["x_train", "y_train", "x_test", "y_test"]
    return {n: cache_dir / f"q{tag}_{n}.tens" for n in names}, cache_dir / f"q{tag}_meta.json"


def load_quality_dataset(cfg: SweepConfig, quality) -> Dataset:
    """Featurize the dataset at one quality, using the on-disk cache."""
    cache_dir = Path(cfg.output_dir) / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    tensors, meta_path = _cache_paths(cache_dir, quality)
    if meta_path.exists() and all(p.exists() for p in tensors.values()):
        meta = json.loads(meta_path.read_text())
        return Dataset(
            kind=cfg.dataset.kind,
            x_train=load_tensor(tensors["x_train"]),
            y_train=load_tensor(tensors["y_train"]).astype(np.int64),
            x_test=load_tensor(tensors["x_test"]),
            y_test=load_tensor(tensors["y_test"]).astype(np.int64),
            num_classes=meta["num_classes"],
            class_names=meta["class_names"],
        )
    data = load_dataset(cfg.dataset, quality)
    save_tensor(tensors["x_train"], data.x_train)
    save_tensor(tensors["y_train"], data.y_train.astype(np.float32))
    save_tensor(tensors["x_test"], data.x_test)
    save_tensor(tensors["y_test"], data.y_test.astype(np.float32))
    meta_path.write_text(json.dumps({"num_classes": data.num_classes,
                                     "class_names": data.class_names}))
    return data


def _resolve_spec(cfg: SweepConfig, arch: str, num_classes: int) -> ModelSpec:
    if arch in cfg.custom_architectures:
        return ModelSpec(name=arch, layers=tuple(
            tuple(e) for e in cfg.custom_architectures[arch]))
    return get_architecture(arch, num_classes=num_classes)


def _run_cell(cfg: SweepConfig, data: Dataset, quality, arch: str, seed: int):
    """Train one grid cell; returns (record, per-epoch accuracy curves)."""
    spec = _resolve_spec(cfg, arch, data.num_classes)
    model = build_model(spec, data.x_train.shape[1:], dtype=np.float32, seed=seed)
    if model.output_shape != (data.num_classes,):
        raise ConfigError(
            f"architecture {arch} outputs {model.output_shape}, dataset has "
            f"{data.num_classes} classes")
    base = dict(
        quality=float(quality),
        normalized_q=normalized_quality(cfg.dataset.kind, quality),
        bits_per_pixel=bits_metric(cfg.dataset.kind, quality),
        arch=arch, params=model.param_count, seed=seed,
    )
    start = time.perf_counter()
    try:
        result = train(model, data, replace(cfg.train, seed=seed))
    except DivergenceError as exc:
        record = SweepRecord(**base, test_accuracy=float("nan"),
                             epochs_to_converge=0,
                             wall_seconds=time.perf_counter() - start,
                             status=f"diverged@{exc.epoch}")
        return record, {}
    record = SweepRecord(**base, test_accuracy=result.final_test_accuracy,
                         epochs_to_converge=result.epochs_to_converge,
                         wall_seconds=time.perf_counter() - start, status="ok")
    curves = {"train_accuracy": result.train_accuracy,
              "test_accuracy": result.test_accuracy}
    return record, curves


@dataclass
class SweepResult:
    config: SweepConfig
    records: list
    csv_path: Path


def write_records_csv(path, records) -> None:
    lines = [CSV_HEADER] + [r.csv_row() for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_records_csv(path) -> list:
    """Parse a results CSV back into records."""
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        required = CSV_HEADER.split(",")
        if reader.fieldnames != required:
            missing = set(required) - set(reader.fieldnames or [])
            raise ConfigError(f"{path}: results CSV missing columns {sorted(missing)}")
        records = []
        for row in reader:
            records.append(SweepRecord(
                quality=float(row["quality"]),
                normalized_q=float(row["Q"]),
                bits_per_pixel=float(row["bits_per_pixel"]),
                arch=row["arch"],
                params=int(row["params"]),
                seed=int(row["seed"]),
                test_accuracy=float(row["test_accuracy"]),
                epochs_to_converge=int(row["epochs_to_converge"]),
                wall_seconds=float(row["wall_seconds"]),
                status=row["status"],
            ))
    return records


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute every grid cell, resuming from done-markers when present.

    PN_WORKERS overrides the configured worker count. Cells are trained
    (possibly concurrently) but records are always emitted in grid order,
    so outputs are byte-identical regardless of scheduling.
    """
    out_dir = Path(cfg.output_dir)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)

    cells = [(q, arch, seed) for q in cfg.qualities
             for arch in cfg.architectures for seed in cfg.seeds]
    markers = {cell: cells_dir / f"q{_quality_tag(cell[0])}_{cell[1]}_s{cell[2]}.json"
               for cell in cells}
    pending = [cell for cell in cells if not markers[cell].exists()]

    workers = int(os.environ.get("PN_WORKERS", cfg.workers))
    results = {}
    for quality in cfg.qualities:
        quality_cells = [c for c in pending if c[0] == quality]
        if not quality_cells:
            continue
        data = load_quality_dataset(cfg, quality)
        if workers > 1 and len(quality_cells) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {cell: pool.submit(_run_cell, cfg, data, *cell)
                           for cell in quality_cells}
            for cell, future in futures.items():
                results[cell] = future.result()
        else:
            for cell in quality_cells:
                results[cell] = _run_cell(cfg, data, *cell)
        for cell in quality_cells:
            record, curves = results[cell]
            markers[cell].write_text(json.dumps(
                {"record": record.to_dict(), "curves": curves}))

    records = []
    for cell in cells:
        if cell in results:
            records.append(results[cell][0])
        else:
            doc = json.loads(markers[cell].read_text())
            records.append(SweepRecord.from_dict(doc["record"]))

    csv_path = out_dir / "results.csv"
    write_records_csv(csv_path, records)
    return SweepResult(config=cfg, records=records, csv_path=csv_path)


def mean_accuracy_points(records, arch: str) -> list:
    """Per-quality mean accuracy for one architecture, ascending in Q.

    Failed cells are excluded; a quality with no successful cell is dropped.
    """
    by_q = {}
    for rec in records:
        if rec.arch == arch and rec.ok:
            by_q.setdefault(rec.normalized_q, []).append(rec.test_accuracy)
    return [(q, float(np.mean(by_q[q]))) for q in sorted(by_q)]


def summarize(records, kind: str, tau: float = 0.05,
              budget: BitBudgetModel = DEFAULT_MODEL, strict: bool = True) -> dict:
    """Per-architecture curve fit, knee, bit split, and epoch means.

    Needs at least 4 quality points per architecture; with strict=False a
    too-small grid yields null knee/fit fields instead of an error. The
    curve scale is fitted on the plateau region (points at or before the
    knee); if the knee leaves fewer than two points, the fit uses all
    points.
    """
    archs = sorted({r.arch for r in records})
    per_arch = {}
    for arch in archs:
        points = mean_accuracy_points(records, arch)
        if len(points) < 4 and strict:
            raise ConfigError(
                f"summary needs >= 4 quality points for {arch}, got {len(points)}")
        if len(points) >= 4:
            q_knee = detect_knee(points, tau)
            plateau = [p for p in points if p[0] <= q_knee]
            c = fit_curve(plateau if len(plateau) >= 2 else points)
            # Audio knees use the same q = 100*(1-Q) convention as images so
            # the bit split stays defined for both kinds.
            knee_quality = 100.0 * (1.0 - q_knee)
            content_bits, noise_bits = noise_bits_estimate(max(knee_quality, 1.0), budget)
        else:
            q_knee = c = knee_quality = content_bits = noise_bits = None

        epochs_by_quality = {}
        for rec in records:
            if rec.arch == arch and rec.ok:
                epochs_by_quality.setdefault(rec.quality, []).append(
                    rec.epochs_to_converge)
        per_arch[arch] = {
            "c": c,
            "q_knee": q_knee,
            "knee_quality": knee_quality,
            "content_bits": content_bits,
            "noise_bits": noise_bits,
            "points": [[q, a] for q, a in points],
            "mean_epochs_by_quality": {f"{q:g}": float(np.mean(v))
                                       for q, v in sorted(epochs_by_quality.items())},
        }
    return {"kind": kind, "tau": tau, "per_arch": per_arch}


def write_summary(summary: dict, out_dir) -> tuple[Path, Path]:
    """Persist the summary as JSON plus a per-architecture CSV."""
    out_dir = Path(out_dir)
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    csv_path = out_dir / "summary.csv"
    lines = ["arch,c,Q_knee,knee_quality,content_bits,noise_bits"]

    def _cell(value, fmt):
        return "" if value is None else format(value, fmt)

    for arch in sorted(summary["per_arch"]):
        entry = summary["per_arch"][arch]
        lines.append(",".join([
            arch,
            _cell(entry["c"], ".6f"),
            _cell(entry["q_knee"], ".4f"),
            _cell(entry["knee_quality"], "g"),
            _cell(entry["content_bits"], ".6f"),
            _cell(entry["noise_bits"], ".6f"),
        ]))
    csv_path.write_text("\n".join(lines) + "\n")
    return json_path, csv_path
