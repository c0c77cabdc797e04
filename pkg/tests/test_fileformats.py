import numpy as np
import pytest

from percnoise.errors import DatasetError, InvalidImageError
from percnoise.fileformats import (load_tensor, read_rgb_raw, save_tensor,
                                   write_rgb_raw)


class TestRgbRaw:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (7, 5, 3), dtype=np.uint8)
        path = tmp_path / "img.rgb"
        write_rgb_raw(path, img)
        assert np.array_equal(read_rgb_raw(path), img)

    def test_header_is_little_endian_width_height(self, tmp_path):
        img = np.zeros((2, 3, 3), dtype=np.uint8)
        path = tmp_path / "img.rgb"
        write_rgb_raw(path, img)
        raw = path.read_bytes()
        assert raw[:8] == (3).to_bytes(4, "little") + (2).to_bytes(4, "little")
        assert len(raw) == 8 + 18

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.rgb"
        path.write_bytes((4).to_bytes(4, "little") + (4).to_bytes(4, "little") + b"\x00" * 10)
        with pytest.raises(InvalidImageError):
            read_rgb_raw(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "tiny.rgb"
        path.write_bytes(b"\x01\x02")
        with pytest.raises(InvalidImageError):
            read_rgb_raw(path)

    def test_wrong_dtype_rejected(self, tmp_path):
        with pytest.raises(InvalidImageError):
            write_rgb_raw(tmp_path / "x.rgb", np.zeros((2, 2, 3), dtype=np.float32))


class TestTensorFile:
    def test_round_trip_various_ranks(self, tmp_path):
        rng = np.random.default_rng(1)
        for shape in [(5,), (3, 4), (2, 3, 4), (2, 1, 96, 10)]:
            arr = rng.normal(size=shape).astype(np.float32)
            path = tmp_path / "t.tens"
            save_tensor(path, arr)
            assert np.array_equal(load_tensor(path), arr)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.tens"
        path.write_bytes((1).to_bytes(4, "little") + (10).to_bytes(4, "little") + b"\x00" * 8)
        with pytest.raises(DatasetError):
            load_tensor(path)

    def test_float64_input_downcast(self, tmp_path):
        arr = np.array([1.5, 2.5], dtype=np.float64)
        path = tmp_path / "t.tens"
        save_tensor(path, arr)
        out = load_tensor(path)
        assert out.dtype == np.float32
        assert np.array_equal(out, arr.astype(np.float32))
