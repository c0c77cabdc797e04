import re

import numpy as np
import pytest

from percnoise.bitbudget import DEFAULT_MODEL
from percnoise.errors import PlotError
from percnoise.helmholtz import theoretical_curve
from percnoise.plotting import PlotSpec, render_plot
from percnoise.sweep import SweepRecord, write_records_csv


def _curve_records(c=0.2, qualities=(95, 75, 50, 25, 10), arch="toy", seed=0):
    qs = [(100 - q) / 100 for q in qualities]
    curve = theoretical_curve(c, np.array(qs))
    return [SweepRecord(quality=float(q), normalized_q=qn,
                        bits_per_pixel=DEFAULT_MODEL.bits_remaining(q),
                        arch=arch, params=100 + 50 * seed, seed=seed,
                        test_accuracy=float(acc), epochs_to_converge=3 + i,
                        wall_seconds=0.5)
            for i, (q, qn, acc) in enumerate(zip(qualities, curve.qs, curve.accuracies))]


@pytest.fixture
def curve_csv(tmp_path):
    path = tmp_path / "results.csv"
    write_records_csv(path, _curve_records())
    return path


class TestDeterminism:
    def test_same_csv_renders_identical_bytes(self, curve_csv, tmp_path):
        outs = []
        for name in ("a.svg", "b.svg"):
            spec = PlotSpec(kind="accuracy-vs-q", input_csv=str(curve_csv),
                            output_svg=str(tmp_path / name), overlay_theoretical=True)
            outs.append(render_plot(spec).read_bytes())
        assert outs[0] == outs[1]

    @pytest.mark.parametrize("kind", ["accuracy-vs-q", "epochs-vs-q",
                                      "accuracy-vs-params"])
    def test_all_kinds_render(self, curve_csv, tmp_path, kind):
        spec = PlotSpec(kind=kind, input_csv=str(curve_csv),
                        output_svg=str(tmp_path / f"{kind}.svg"))
        out = render_plot(spec)
        text = out.read_text()
        assert text.startswith("<svg")
        assert "<circle" in text


class TestOverlay:
    def test_overlay_passes_through_every_point(self, curve_csv, tmp_path):
        spec = PlotSpec(kind="accuracy-vs-q", input_csv=str(curve_csv),
                        output_svg=str(tmp_path / "o.svg"), overlay_theoretical=True)
        text = render_plot(spec).read_text()
        circles = {m.group(1): m.group(2) for m in re.finditer(
            r'<circle class="pt" cx="([0-9.]+)" cy="([0-9.]+)"', text)}
        assert len(circles) == 5
        overlay = re.search(r'<polyline class="overlay"[^>]*points="([^"]+)"', text)
        overlay_points = dict(pair.split(",") for pair in overlay.group(1).split())
        for cx, cy in circles.items():
            assert cx in overlay_points
            assert overlay_points[cx] == cy

    def test_overlay_absent_without_flag(self, curve_csv, tmp_path):
        spec = PlotSpec(kind="accuracy-vs-q", input_csv=str(curve_csv),
                        output_svg=str(tmp_path / "n.svg"))
        assert "overlay" not in render_plot(spec).read_text()


class TestErrors:
    def test_missing_column_is_descriptive(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("quality,Q,arch\n95,0.05,toy\n")
        spec = PlotSpec(kind="accuracy-vs-q", input_csv=str(path),
                        output_svg=str(tmp_path / "x.svg"))
        with pytest.raises(PlotError, match="test_accuracy"):
            render_plot(spec)

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(PlotError):
            PlotSpec(kind="pie", input_csv="x", output_svg="y")

    def test_all_failed_records_rejected(self, tmp_path):
        records = _curve_records()
        for rec in records:
            rec.status = "diverged@1"
            rec.test_accuracy = float("nan")
        path = tmp_path / "failed.csv"
        write_records_csv(path, records)
        spec = PlotSpec(kind="accuracy-vs-q", input_csv=str(path),
                        output_svg=str(tmp_path / "x.svg"))
        with pytest.raises(PlotError, match="no successful records"):
            render_plot(spec)


def test_multiple_architectures_get_distinct_series(tmp_path):
    records = _curve_records(arch="alpha") + _curve_records(c=0.15, arch="beta")
    path = tmp_path / "two.csv"
    write_records_csv(path, records)
    spec = PlotSpec(kind="accuracy-vs-q", input_csv=str(path),
                    output_svg=str(tmp_path / "two.svg"))
    text = render_plot(spec).read_text()
    assert "alpha" in text and "beta" in text
    assert text.count('<polyline class="series"') == 2
