import numpy as np
import pytest

from sparsa import arrayio


class TestPgm:
    def test_binary_roundtrip(self, tmp_path, rng):
        img = rng.random((5, 7))
        path = tmp_path / "img.pgm"
        arrayio.write_pgm(path, img, binary=True)
        back = arrayio.read_pgm(path)
        assert back.shape == (5, 7)
        assert np.max(np.abs(back - img)) <= 0.5 / 255 + 1e-12

    def test_ascii_roundtrip(self, tmp_path, rng):
        img = rng.random((4, 3))
        path = tmp_path / "img.pgm"
        arrayio.write_pgm(path, img, binary=False)
        back = arrayio.read_pgm(path)
        assert np.max(np.abs(back - img)) <= 0.5 / 255 + 1e-12

    def test_reads_comments_and_maxval(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_text("P2\n# a comment line\n2 2\n100\n0 50\n100 25\n")
        img = arrayio.read_pgm(path)
        assert np.allclose(img, [[0.0, 0.5], [1.0, 0.25]])

    def test_values_clipped_on_write(self, tmp_path):
        path = tmp_path / "clip.pgm"
        arrayio.write_pgm(path, np.array([[-0.5, 1.5]]))
        assert np.allclose(arrayio.read_pgm(path), [[0.0, 1.0]])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
        with pytest.raises(ValueError):
            arrayio.read_pgm(path)


class TestCsv:
    def test_matrix_roundtrip(self, tmp_path, rng):
        mat = rng.standard_normal((4, 6))
        path = tmp_path / "m.csv"
        arrayio.write_csv(path, mat)
        assert np.array_equal(arrayio.read_csv(path), mat)

    def test_vector_roundtrip(self, tmp_path, rng):
        vec = rng.standard_normal(9)
        path = tmp_path / "v.csv"
        arrayio.write_csv(path, vec)
        back = arrayio.read_csv(path)
        assert back.ndim == 1
        assert np.array_equal(back, vec)


class TestRaw:
    def test_matrix_roundtrip_bitwise(self, tmp_path, rng):
        mat = rng.standard_normal((3, 5))
        path = tmp_path / "m.raw"
        arrayio.write_raw(path, mat)
        back = arrayio.read_raw(path)
        assert back.shape == (3, 5)
        assert np.array_equal(back, mat)

    def test_vector_roundtrip_bitwise(self, tmp_path, rng):
        vec = rng.standard_normal(11)
        path = tmp_path / "v.raw"
        arrayio.write_raw(path, vec)
        back = arrayio.read_raw(path)
        assert back.ndim == 1
        assert np.array_equal(back, vec)

    def test_sidecar_contents(self, tmp_path):
        import json

        path = tmp_path / "a.raw"
        arrayio.write_raw(path, np.zeros((2, 3)))
        sidecar = json.loads((tmp_path / "a.raw.json").read_text())
        assert sidecar == {"rows": 2, "cols": 3}

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "t.raw"
        arrayio.write_raw(path, np.zeros(4))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError):
            arrayio.read_raw(path)
