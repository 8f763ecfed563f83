import numpy as np
import pytest

from tsfp import checkpoint, io


class TestCheckpoint:
    def test_round_trip_values_and_bytes(self, rng, tmp_path):
        tensors = {"a.w": rng.standard_normal((2, 3, 1, 1, 1)).astype(np.float32), "a.b": np.zeros(2, np.float32),
                   "scalar": np.array(1.5, np.float32)}
        path = tmp_path / "m.tsfpw"
        checkpoint.save(path, tensors, header='{"k": 1}')
        loaded, header = checkpoint.load(path)
        assert header == '{"k": 1}'
        assert list(loaded) == list(tensors)
        for k in tensors:
            np.testing.assert_array_equal(loaded[k], tensors[k])
        assert checkpoint.dumps(loaded, header) == path.read_bytes()

    def test_magic(self):
        assert checkpoint.dumps({}).startswith(b"TSFPW1\n")

    def test_bad_magic(self):
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.loads(b"NOPE" + bytes(8))

    def test_truncated(self):
        blob = checkpoint.dumps({"x": np.ones(4, np.float32)})
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.loads(blob[:-3])

    def test_duplicate_name(self):
        one = checkpoint.dumps({"x": np.ones(1, np.float32)})
        body = one[len(checkpoint.MAGIC) + 4 :]
        with pytest.raises(checkpoint.CheckpointError):
            checkpoint.loads(one + body)

    def test_little_endian_layout(self):
        blob = checkpoint.dumps({"ab": np.array([1.0], np.float32)})
        tail = blob[len(checkpoint.MAGIC) + 4 :]
        assert tail[:4] == (2).to_bytes(4, "little") and tail[4:6] == b"ab"
        assert tail[6:10] == (1).to_bytes(4, "little") and tail[10:14] == (1).to_bytes(4, "little")
        assert tail[14:] == np.array([1.0], "<f4").tobytes()


class TestPNM:
    def test_pgm_round_trip_bytes(self, rng, tmp_path):
        img = rng.integers(0, 256, size=(5, 7), dtype=np.uint8)
        path = tmp_path / "x.pgm"
        io.write_pnm(path, img)
        back = io.read_pgm(path)
        np.testing.assert_array_equal(back, img)
        assert io.encode_pnm(back) == path.read_bytes()

    def test_ppm_round_trip_bytes(self, rng, tmp_path):
        img = rng.integers(0, 256, size=(4, 6, 3), dtype=np.uint8)
        path = tmp_path / "x.ppm"
        io.write_pnm(path, img)
        back = io.read_ppm(path)
        np.testing.assert_array_equal(back, img)
        assert io.encode_pnm(back) == path.read_bytes()

    def test_16_bit(self, rng):
        img = rng.integers(0, 65536, size=(3, 3), dtype=np.uint16)
        blob = io.encode_pnm(img, maxval=65535)
        np.testing.assert_array_equal(io.decode_pnm(blob), img)
        assert io.encode_pnm(io.decode_pnm(blob), maxval=65535) == blob

    def test_header_comments(self):
        blob = b"P5\n# a comment\n2 1\n# another\n255\n\x01\x02"
        assert io.decode_pnm(blob).tolist() == [[1, 2]]

    def test_rejects_ascii_formats(self):
        with pytest.raises(io.FormatError):
            io.decode_pnm(b"P2\n1 1\n255\n0\n")

    def test_kind_mismatch(self, tmp_path):
        io.write_pnm(tmp_path / "c.ppm", np.zeros((2, 2, 3), np.uint8))
        with pytest.raises(io.FormatError):
            io.read_pgm(tmp_path / "c.ppm")

    def test_saliency_quantisation(self):
        assert io.saliency_to_pgm(np.array([[0.0, 0.5, 1.0, 0.002]])).tolist() == [[0, 128, 255, 1]]


class TestAudioFiles:
    def test_pcm_round_trip_bytes(self, rng, tmp_path):
        raw = rng.integers(-32768, 32768, size=1000).astype("<i2")
        path = tmp_path / "a.pcm"
        path.write_bytes(raw.tobytes())
        samples = io.read_pcm(path)
        assert samples.min() >= -1.0 and samples.max() < 1.0
        io.write_pcm(tmp_path / "b.pcm", samples)
        assert (tmp_path / "b.pcm").read_bytes() == raw.tobytes()

    def test_meta(self, tmp_path):
        io.write_audio_meta(tmp_path / "audio.meta", 16000, fps=30)
        meta = io.read_audio_meta(tmp_path / "audio.meta")
        assert meta == {"sample_rate": 16000, "fps": 30.0}

    def test_meta_requires_sample_rate(self, tmp_path):
        (tmp_path / "audio.meta").write_text("fps=25\n")
        with pytest.raises(io.FormatError):
            io.read_audio_meta(tmp_path / "audio.meta")


class TestResize:
    def test_fixations_survive_downscale(self):
        fix = np.zeros((64, 128), bool)
        fix[[0, 5, 63], [0, 77, 127]] = True
        out = io.resize_fixations(fix, (16, 32))
        assert out.sum() == 3 and out[0, 0] and out[15, 31]

    def test_bilinear_constant(self):
        out = io.resize_bilinear(np.full((10, 20), 3.0), (7, 9))
        assert out.shape == (7, 9) and np.all(out == 3.0)
