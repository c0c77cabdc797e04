"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Criterion 6 uses real CIFAR-10 binary batches when PN_CIFAR10 points at
them; otherwise it runs the identical protocol and assertions on a seeded
synthetic 10-class texture dataset written through the same binary format.
The printed line says which dataset ran.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

import conftest
from percnoise.audiocodec import mdct_forward, mdct_inverse, read_wav, write_wav
from percnoise.bitbudget import BitBudgetModel
from percnoise.cli import main as cli_main
from percnoise.datasets import read_cifar_batches, write_cifar_batch
from percnoise.errors import (DatasetError, InvalidImageError,
                              UnsupportedWavError)
from percnoise.fileformats import load_tensor, read_rgb_raw
from percnoise.helmholtz import (ContentSource, SensorModel, curve_value,
                                 detect_knee, estimate_noise_scalar, fit_curve,
                                 synthesize_readings, theoretical_curve)
from percnoise.imagecodec import forward_dct, inverse_dct
from percnoise.nn import (audio_zoo, build_model, count_params,
                          get_architecture, grad_check, image_zoo)
from percnoise.sweep import SweepConfig, run_sweep, summarize
from percnoise.synthdata import (knee_boundary_quality, make_highfreq_pair_images,
                                 make_texture_images, surviving_coefficient)
from conftest import synth_tone


def _report(criterion: str, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok


def test_c1_bit_budget_fidelity():
    start = time.perf_counter()
    model = BitBudgetModel()
    checks = {
        "bits_lost(50)": (model.bits_lost(50), 13.61, 0.01),
        "bits_lost(80)": (model.bits_lost(80), 12.29, 0.02),
        "bits_remaining(25)": (model.bits_remaining(25), 1.39, 0.05),
    }
    ok = all(abs(got - want) <= tol for got, want, tol in checks.values())
    q19 = model.quality_for_bits(1.0)
    ok = ok and q19 == 19
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1.0
    detail = (", ".join(f"{name}={got:.4f}" for name, (got, _, _) in checks.items())
              + f", quality_for_bits(1.0)={q19}, {elapsed:.3f}s")
    assert _report("1 bit-budget fidelity", ok, detail)


def test_c2_transform_round_trips():
    start = time.perf_counter()
    rng = np.random.default_rng(0)

    dct_worst = parseval_worst = 0.0
    for _ in range(1000):
        block = rng.uniform(0, 255, (8, 8))
        coeffs = forward_dct(block)
        dct_worst = max(dct_worst, np.abs(inverse_dct(coeffs) - block).max())
        spatial = ((block - 128.0) ** 2).sum()
        parseval_worst = max(parseval_worst,
                             abs((coeffs ** 2).sum() - spatial) / spatial)

    mdct_worst = 0.0
    for _ in range(1000):
        x = rng.normal(0, 1000, 1200)
        recon = mdct_inverse(mdct_forward(x), x.size)
        mdct_worst = max(mdct_worst, np.abs(recon - x).max() / np.abs(x).max())

    elapsed = time.perf_counter() - start
    ok = dct_worst <= 1e-9 and parseval_worst <= 1e-9 and mdct_worst <= 1e-9
    ok = ok and elapsed < 10.0
    assert _report(
        "2 transform correctness", ok,
        f"dct={dct_worst:.2e}, parseval={parseval_worst:.2e}, "
        f"mdct={mdct_worst:.2e}, {elapsed:.1f}s")


def test_c3_learner_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(0)

    from percnoise.nn.model import ModelSpec

    two_conv = ModelSpec("two-conv-one-dense", (
        ("conv", 4, 3), ("relu",), ("conv", 6, 3), ("relu",),
        ("gap",), ("fc", 3), ("softmax",)))
    model = build_model(two_conv, (3, 8, 8), dtype=np.float64, seed=0)
    x = rng.normal(size=(3, 3, 8, 8))
    y = np.array([0, 1, 2])
    worst = grad_check(model, x, y, max_samples=400)
    details = [f"two-conv={worst:.2e}"]

    counts_ok = True
    for arch in sorted(image_zoo()) + sorted(audio_zoo()):
        channels = 1 if arch.startswith("audio") else 3
        spec = get_architecture(arch)
        built = build_model(spec, (channels, 8, 8), dtype=np.float64, seed=0)
        counts_ok &= count_params(spec, (channels, 8, 8)) == built.param_count
        xa = rng.normal(size=(2, channels, 8, 8))
        ya = np.array([0, 1])
        err = grad_check(built, xa, ya, max_samples=100, seed=1)
        worst = max(worst, err)
    details.append(f"zoo-worst={worst:.2e}")

    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and counts_ok and elapsed < 120.0
    assert _report("3 learner correctness", ok,
                   ", ".join(details) + f", counts-match={counts_ok}, {elapsed:.0f}s")


def test_c4_noise_estimator_consistency():
    start = time.perf_counter()
    source = ContentSource(np.full(4, 0.25))
    hits = trials = 0
    for n in (0.5, 1.0, 2.0, 4.0):
        model = SensorModel(r_max=100.0, n=n, jitter=0.01)
        for seed in range(25):
            readings = synthesize_readings(model, source, 10_000,
                                           seed=1000 * int(n * 10) + seed)
            estimate = estimate_noise_scalar(readings, 100.0, source.entropy)
            hits += abs(estimate - n) / n < 0.05
            trials += 1
    elapsed = time.perf_counter() - start
    ok = trials == 100 and hits >= 95 and elapsed < 30.0
    assert _report("4 helmholtz estimator", ok,
                   f"{hits}/{trials} trials within 5%, {elapsed:.1f}s")


def test_c5_curve_machinery():
    start = time.perf_counter()
    rng = np.random.default_rng(3)

    grid = np.linspace(0.0, 0.9, 8)
    exact_err = abs(fit_curve(theoretical_curve(0.19, grid)) - 0.19)

    noisy_ok = True
    for seed in range(20):
        noise = 1.0 + np.random.default_rng(seed).uniform(-0.02, 0.02, 20)
        dense = np.linspace(0.0, 0.9, 20)
        fitted = fit_curve(np.column_stack([dense, curve_value(0.21, dense) * noise]))
        noisy_ok &= abs(fitted - 0.21) / 0.21 < 0.05

    knee_ok = True
    for step_at in (0.3, 0.5, 0.75):
        qs = np.linspace(0.0, 0.9, 10)
        accs = np.where(qs <= step_at, 0.9, 0.35)
        knee_ok &= detect_knee(np.column_stack([qs, accs])) == pytest.approx(
            qs[qs <= step_at].max())

    elapsed = time.perf_counter() - start
    ok = exact_err <= 1e-12 and noisy_ok and knee_ok and elapsed < 5.0
    assert _report("5 curve machinery", ok,
                   f"exact-fit-err={exact_err:.1e}, noisy-ok={noisy_ok}, "
                   f"knee-ok={knee_ok}, {elapsed:.1f}s")


@pytest.fixture(scope="module")
def desk_cifar_dir(tmp_path_factory):
    """Real CIFAR-10 batches if PN_CIFAR10 is set, else synthetic textures."""
    env = os.environ.get("PN_CIFAR10")
    if env and Path(env).exists():
        return Path(env), "cifar-10"
    root = tmp_path_factory.mktemp("texds")
    images, labels = make_texture_images(250, seed=11)
    write_cifar_batch(root / "batch0.bin", images, labels)
    return root, "synthetic-textures"


def test_c6_desk_scale_sweep_trend(desk_cifar_dir, tmp_path):
    start = time.perf_counter()
    root, dataset_name = desk_cifar_dir
    cfg = SweepConfig.from_dict({
        "dataset": {"kind": "cifar10", "root": str(root), "per_class_cap": 250,
                    "train_fraction": 0.8, "seed": 0},
        "qualities": [95, 80, 50, 25, 10, 3],
        "architectures": ["small-conv"],
        "seeds": [0],
        "train": {"learning_rate": 0.05, "batch_size": 64, "max_epochs": 15,
                  "seed": 0},
        "output_dir": str(tmp_path / "desk-sweep"),
    })
    result = run_sweep(cfg)
    acc = {rec.quality: rec.test_accuracy for rec in result.records}
    n_train = 2000  # per_class_cap 250 * 10 classes * 0.8

    summary = summarize(result.records, "cifar10", tau=0.05)
    q_knee = summary["per_arch"]["small-conv"]["q_knee"]

    cond_a = acc[80] >= acc[95] - 0.03
    cond_b = acc[3] <= acc[95] - 0.10
    cond_c = 0.05 < q_knee <= 0.97
    elapsed = time.perf_counter() - start
    ok = cond_a and cond_b and cond_c and elapsed < 1800.0
    assert _report(
        "6 desk-scale sweep trend", ok,
        f"dataset={dataset_name}, n_train={n_train}, acc95={acc[95]:.3f}, "
        f"acc80={acc[80]:.3f}, acc3={acc[3]:.3f}, knee-Q={q_knee}, "
        f"(a)={cond_a} (b)={cond_b} (c)={cond_c}, {elapsed:.0f}s")


@pytest.fixture(scope="module")
def knee_oracle_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("kneeds")
    coeff = surviving_coefficient(50, 35)
    images, labels = make_highfreq_pair_images(125, coeff, seed=7)
    write_cifar_batch(root / "batch0.bin", images, labels)
    return root, coeff


def test_c7_synthetic_knee_oracle(knee_oracle_dir, tmp_path):
    start = time.perf_counter()
    root, coeff = knee_oracle_dir
    qualities = [80, 65, 50, 35, 20]
    cfg = SweepConfig.from_dict({
        "dataset": {"kind": "cifar10", "root": str(root), "train_fraction": 0.75,
                    "seed": 0},
        "qualities": qualities,
        "architectures": ["tiny-fc"],
        "seeds": [0],
        "train": {"learning_rate": 0.05, "batch_size": 32, "max_epochs": 20,
                  "seed": 0},
        "output_dir": str(tmp_path / "knee-sweep"),
    })
    result = run_sweep(cfg)
    summary = summarize(result.records, "cifar10", tau=0.05)
    q_knee = summary["per_arch"]["tiny-fc"]["q_knee"]

    q_star = knee_boundary_quality(coeff)        # smallest surviving quality
    q_star_norm = (100 - q_star) / 100
    grid_step = max(abs(np.diff([(100 - q) / 100 for q in qualities])))
    gap = abs(q_knee - q_star_norm)
    elapsed = time.perf_counter() - start
    ok = gap <= grid_step + 1e-9 and elapsed < 600.0
    assert _report(
        "7 synthetic-knee oracle", ok,
        f"knee-Q={q_knee}, true-boundary-Q={q_star_norm:.2f} (q*={q_star}), "
        f"gap={gap:.3f} <= step={grid_step:.2f}, {elapsed:.0f}s")


def test_c8_end_to_end_reproducibility(knee_oracle_dir, tmp_path):
    start = time.perf_counter()
    root, _ = knee_oracle_dir
    out_dir = tmp_path / "repro"
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({
        "dataset": {"kind": "cifar10", "root": str(root), "train_fraction": 0.75,
                    "seed": 0},
        "qualities": [80, 50, 35, 20],
        "architectures": ["tiny-fc"],
        "seeds": [0],
        "train": {"learning_rate": 0.05, "batch_size": 32, "max_epochs": 8,
                  "seed": 0},
        "output_dir": str(out_dir),
    }))
    runner = CliRunner()
    artifacts = ["results.csv", "accuracy-vs-q.svg", "epochs-vs-q.svg"]

    first_run = runner.invoke(cli_main, ["sweep", str(config)])
    first = {name: (out_dir / name).read_bytes() for name in artifacts}
    second_run = runner.invoke(cli_main, ["sweep", str(config)])
    second = {name: (out_dir / name).read_bytes() for name in artifacts}

    identical = first == second
    elapsed = time.perf_counter() - start
    ok = first_run.exit_code == 0 and second_run.exit_code == 0 and identical
    assert _report("8 end-to-end reproducibility", ok,
                   f"byte-identical={identical} over {artifacts}, {elapsed:.0f}s")


def test_c9_ingestion_round_trips_and_errors(tmp_path):
    start = time.perf_counter()
    rng = np.random.default_rng(0)

    # CIFAR binary fixture round trip.
    images = rng.integers(0, 256, (5, 32, 32, 3), dtype=np.uint8)
    labels = rng.integers(0, 10, 5)
    cifar_dir = tmp_path / "cifar"
    cifar_dir.mkdir()
    write_cifar_batch(cifar_dir / "b.bin", images, labels)
    out_images, out_labels = read_cifar_batches(cifar_dir)
    cifar_ok = np.array_equal(out_images, images) and np.array_equal(out_labels, labels)

    # WAV round trip.
    tone = synth_tone(440.0)
    wav_path = tmp_path / "tone.wav"
    write_wav(wav_path, tone)
    wav_ok = np.array_equal(read_wav(wav_path).samples, tone.samples)

    # Malformed inputs raise the specified error classes, never crash.
    errors_ok = True
    bad_dir = tmp_path / "bad"
    bad_dir.mkdir()
    (bad_dir / "short.bin").write_bytes(b"\x00" * 3072)
    try:
        read_cifar_batches(bad_dir)
        errors_ok = False
    except DatasetError:
        pass
    import wave as wave_mod

    stereo = tmp_path / "stereo.wav"
    with wave_mod.open(str(stereo), "wb") as wav:
        wav.setnchannels(2)
        wav.setsampwidth(2)
        wav.setframerate(44100)
        wav.writeframes(b"\x00\x00" * 64)
    try:
        read_wav(stereo)
        errors_ok = False
    except UnsupportedWavError:
        pass
    try:
        read_rgb_raw(wav_path)
        errors_ok = False
    except InvalidImageError:
        pass
    try:
        load_tensor(wav_path)
        errors_ok = False
    except DatasetError:
        pass

    elapsed = time.perf_counter() - start
    ok = cifar_ok and wav_ok and errors_ok
    assert _report("9 ingestion", ok,
                   f"cifar-round-trip={cifar_ok}, wav-round-trip={wav_ok}, "
                   f"error-classes={errors_ok}, {elapsed:.1f}s")
