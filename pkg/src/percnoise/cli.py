"""Command-line surface.

Exit codes: 0 success, 2 usage errors, 3 unreadable/invalid inputs and
configs, 4 when every sweep cell failed. All randomness flows through
explicit --seed flags or config seeds; PN_WORKERS overrides the sweep
worker count.
"""

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .audiocodec import mel_spectrogram, read_wav
from .bitbudget import (BitBudgetModel, quality_table, recomputed_component_sum)
from .datasets import DatasetRef, load_dataset
from .errors import (ConfigError, DatasetError, DegenerateFitError,
                     InvalidImageError, InvalidQualityError, PercnoiseError,
                     PlotError)
from .fileformats import read_rgb_raw, save_tensor, write_rgb_raw
from .helmholtz import (ContentSource, SensorModel, detect_knee,
                        estimate_noise_scalar, fit_curve, synthesize_readings)
from .imagecodec import transcode_image
from .nn import ModelSpec, TrainConfig, build_model, get_architecture, save_checkpoint, train
from .plotting import PLOT_KINDS, PlotSpec, render_plot
from .sweep import (SweepConfig, mean_accuracy_points, read_records_csv,
                    run_sweep, summarize, write_summary)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _echo_json(doc):
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


@click.group()
@click.version_option(version=__version__, prog_name="percnoise")
def main():
    """Measure the noise content of images and audio in bits."""


@main.command()
@click.option("--quality", type=click.IntRange(1, 100), default=None,
              help="Report bits lost/remaining at one quality level.")
@click.option("--target", type=float, default=None,
              help="Report the smallest quality reaching this many bits.")
@click.option("--table", "show_table", is_flag=True,
              help="Emit the full quality/bits table as CSV.")
@click.option("--baseline", type=click.Choice(["16", "24"]), default="16",
              help="Bits per pixel before quantization.")
@click.option("--recomputed-sum", is_flag=True,
              help="Use the table-derived component sum (14698) instead of 12487.")
@click.option("--json", "as_json", is_flag=True)
def bits(quality, target, show_table, baseline, recomputed_sum, as_json):
    """Quality-to-bits arithmetic and its inverse."""
    chosen = [v is not None and v is not False for v in (quality, target, show_table)]
    if sum(chosen) != 1:
        raise click.UsageError("choose exactly one of --quality, --target, --table")
    model = BitBudgetModel(
        component_sum=recomputed_component_sum() if recomputed_sum else 12487.0,
        baseline=float(baseline))
    if show_table:
        rows = quality_table(model)
        if as_json:
            _echo_json([{"quality": q, "bits_lost": lost, "bits_remaining": rem}
                        for q, lost, rem in rows])
        else:
            click.echo("quality,bits_lost,bits_remaining")
            for q, lost, rem in rows:
                click.echo(f"{q},{lost:.2f},{rem:.2f}")
        return
    if quality is not None:
        lost, rem = model.bits_lost(quality), model.bits_remaining(quality)
        if as_json:
            _echo_json({"quality": quality, "bits_lost": lost, "bits_remaining": rem})
        else:
            click.echo("quality,bits_lost,bits_remaining")
            click.echo(f"{quality},{lost:.2f},{rem:.2f}")
        return
    try:
        q = model.quality_for_bits(target)
    except InvalidQualityError as exc:
        raise click.UsageError(str(exc)) from exc
    if as_json:
        _echo_json({"target": target, "quality": q})
    else:
        click.echo(str(q))


def _read_image(path: Path) -> np.ndarray:
    if path.suffix.lower() in (".rgb", ".raw"):
        return read_rgb_raw(path)
    from PIL import Image

    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except OSError as exc:
        raise InvalidImageError(f"{path}: cannot read image ({exc})") from exc


def _write_image(path: Path, img: np.ndarray) -> None:
    if path.suffix.lower() in (".rgb", ".raw"):
        write_rgb_raw(path, img)
        return
    from PIL import Image

    Image.fromarray(img).save(path)


@main.command()
@click.argument("src", type=click.Path(exists=True, path_type=Path))
@click.argument("dst", type=click.Path(path_type=Path))
@click.option("--quality", type=click.IntRange(1, 100), required=True)
@click.option("--json", "as_json", is_flag=True)
def transcode(src, dst, quality, as_json):
    """Transcode an image (.rgb raw or anything Pillow reads) at a quality."""
    try:
        img = _read_image(src)
        out, stats = transcode_image(img, quality)
        _write_image(dst, out)
    except (InvalidImageError, OSError) as exc:
        _fail(3, str(exc))
    doc = {"input": str(src), "output": str(dst), "quality": stats.quality,
           "psnr_db": stats.psnr, "mean_coeff_entropy": stats.mean_coeff_entropy,
           "nonzero_fraction": stats.nonzero_fraction}
    if as_json:
        _echo_json(doc)
    else:
        click.echo(f"wrote {dst}: psnr={stats.psnr:.2f} dB, "
                   f"entropy={stats.mean_coeff_entropy:.3f} bits/coeff, "
                   f"nonzero={stats.nonzero_fraction:.4f}")


@main.command()
@click.argument("src", type=click.Path(exists=True, path_type=Path))
@click.argument("dst", type=click.Path(path_type=Path))
@click.option("--mels", type=int, default=96, show_default=True)
@click.option("--frame", type=int, default=1024, show_default=True)
@click.option("--hop", type=int, default=512, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def melspec(src, dst, mels, frame, hop, as_json):
    """Extract a log-mel spectrogram from a WAV file into a tensor file."""
    try:
        mel = mel_spectrogram(read_wav(src), n_mels=mels, frame=frame, hop=hop)
    except PercnoiseError as exc:
        _fail(3, str(exc))
    save_tensor(dst, mel.values)
    if as_json:
        _echo_json({"input": str(src), "output": str(dst),
                    "bands": mel.bands, "frames": mel.frames})
    else:
        click.echo(f"wrote {dst}: {mel.bands} bands x {mel.frames} frames")


@main.command()
@click.option("--noise", type=float, required=True, help="True noise scalar n.")
@click.option("--r-max", type=float, default=100.0, show_default=True)
@click.option("--jitter", type=float, default=0.0, show_default=True,
              help="Gaussian jitter sigma as a fraction of r-max.")
@click.option("--count", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dist", default="0.25,0.25,0.25,0.25", show_default=True,
              help="Comma-separated symbol probabilities (must sum to 1).")
@click.option("--json", "as_json", is_flag=True)
def synth(noise, r_max, jitter, count, seed, dist, as_json):
    """Synthesize sensor readings and re-estimate the noise scalar."""
    try:
        probs = [float(tok) for tok in dist.split(",") if tok.strip()]
        source = ContentSource(np.array(probs))
        model = SensorModel(r_max=r_max, n=noise, jitter=jitter)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    readings = synthesize_readings(model, source, count, seed)
    estimate = estimate_noise_scalar(readings, r_max, source.entropy)
    rel_err = abs(estimate - noise) / noise if noise > 0 else None
    doc = {"true_noise": noise, "estimate": estimate, "relative_error": rel_err,
           "entropy_bits": source.entropy, "count": count, "seed": seed}
    if as_json:
        _echo_json(doc)
    else:
        click.echo(f"entropy: {source.entropy:.4f} bits/symbol")
        click.echo(f"true noise:      {noise:.6f}")
        click.echo(f"estimated noise: {estimate:.6f}")
        click.echo("relative error:  "
                   + (f"{rel_err:.4%}" if rel_err is not None else "n/a"))


@main.command(name="train")
@click.argument("config", type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def train_cmd(config, as_json):
    """Train one model per a JSON config; writes result JSON and checkpoint."""
    try:
        doc = json.loads(config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail(3, f"cannot parse {config}: {exc}")
    try:
        ref = DatasetRef.from_dict(doc["dataset"])
        train_cfg = TrainConfig(**doc.get("train", {}))
        arch = doc["architecture"]
        out_dir = Path(doc["output_dir"])
        quality = doc.get("quality")
        data = load_dataset(ref, quality)
        custom = doc.get("custom_architectures", {})
        if arch in custom:
            spec = ModelSpec(name=arch, layers=tuple(tuple(e) for e in custom[arch]))
        else:
            spec = get_architecture(arch, num_classes=data.num_classes)
        model = build_model(spec, data.x_train.shape[1:], dtype=np.float32,
                            seed=train_cfg.seed)
        result = train(model, data, train_cfg)
    except (KeyError, TypeError, ValueError, PercnoiseError) as exc:
        _fail(3, f"invalid train config: {exc}")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train_result.json").write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    save_checkpoint(out_dir / "model.ckpt", model)
    doc = result.to_dict() | {"checkpoint": str(out_dir / "model.ckpt")}
    if as_json:
        _echo_json(doc)
    else:
        click.echo(f"final test accuracy: {result.final_test_accuracy:.4f} "
                   f"(converged at epoch {result.epochs_to_converge}, "
                   f"{result.param_count} params)")


@main.command(name="sweep")
@click.argument("config", type=click.Path(path_type=Path))
@click.option("--no-plots", is_flag=True, help="Skip SVG rendering.")
@click.option("--json", "as_json", is_flag=True)
def sweep_cmd(config, no_plots, as_json):
    """Run a full quality/architecture/seed sweep from a JSON config.

    Writes results.csv, summary.json, summary.csv, and SVG charts under the
    configured output directory. Finished cells are skipped on rerun.
    """
    try:
        cfg = SweepConfig.from_json_file(config)
    except ConfigError as exc:
        _fail(3, str(exc))
    try:
        result = run_sweep(cfg)
    except (ConfigError, DatasetError) as exc:
        _fail(3, str(exc))
    failed = sum(1 for r in result.records if not r.ok)
    if failed == len(result.records):
        _fail(4, f"all {failed} sweep cells failed")

    out_dir = Path(cfg.output_dir)
    summary = summarize(result.records, cfg.dataset.kind, cfg.tau, strict=False)
    write_summary(summary, out_dir)
    svgs = []
    if not no_plots:
        for kind in ("accuracy-vs-q", "epochs-vs-q"):
            spec = PlotSpec(kind=kind, input_csv=str(result.csv_path),
                            output_svg=str(out_dir / f"{kind}.svg"),
                            overlay_theoretical=(kind == "accuracy-vs-q"))
            svgs.append(str(render_plot(spec)))
    doc = {"results_csv": str(result.csv_path),
           "summary_json": str(out_dir / "summary.json"),
           "svgs": svgs, "cells": len(result.records), "failed": failed}
    if as_json:
        _echo_json(doc)
    else:
        click.echo(f"{len(result.records)} cells ({failed} failed) -> {result.csv_path}")
        for path in svgs:
            click.echo(f"wrote {path}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, path_type=Path))
@click.option("--arch", default=None, help="Architecture to fit (default: all).")
@click.option("--tau", type=float, default=0.05, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def fit(csv_path, arch, tau, as_json):
    """Fit the accuracy curve scale and locate the knee from a results CSV."""
    try:
        records = read_records_csv(csv_path)
    except ConfigError as exc:
        _fail(3, str(exc))
    archs = [arch] if arch else sorted({r.arch for r in records})
    rows = []
    for name in archs:
        points = mean_accuracy_points(records, name)
        try:
            c = fit_curve(points)
        except (DegenerateFitError, ValueError) as exc:
            _fail(3, f"{name}: {exc}")
        knee = detect_knee(points, tau) if len(points) >= 4 else None
        rows.append({"arch": name, "c": c, "q_knee": knee})
    if as_json:
        _echo_json(rows)
    else:
        click.echo("arch,c,Q_knee")
        for row in rows:
            knee = f"{row['q_knee']:.4f}" if row["q_knee"] is not None else ""
            click.echo(f"{row['arch']},{row['c']:.6f},{knee}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, path_type=Path))
@click.option("--kind", type=click.Choice(PLOT_KINDS), default="accuracy-vs-q",
              show_default=True)
@click.option("--out", "out_svg", type=click.Path(path_type=Path), required=True)
@click.option("--overlay", is_flag=True, help="Overlay the fitted theoretical curve.")
@click.option("--title", default="")
@click.option("--tau", type=float, default=0.05, show_default=True)
def plot(csv_path, kind, out_svg, overlay, title, tau):
    """Render a deterministic SVG chart from a results CSV."""
    spec = PlotSpec(kind=kind, input_csv=str(csv_path), output_svg=str(out_svg),
                    title=title, overlay_theoretical=overlay, tau=tau)
    try:
        path = render_plot(spec)
    except PlotError as exc:
        _fail(3, str(exc))
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
