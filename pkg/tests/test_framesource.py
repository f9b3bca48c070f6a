import numpy as np
import pytest

from crowdwatch.errors import FormatError, IngestionError
from crowdwatch.framesource import (
    Frame,
    LabelSpan,
    LabelTrack,
    iter_y4m,
    open_sequence,
    parse_manifest,
    read_pgm,
    to_grayscale_f32,
    write_pgm,
)


def make_frame_files(directory, count, width=32, height=24, seed=0):
    rng = np.random.default_rng(seed)
    for i in range(count):
        pixels = rng.integers(0, 256, (height, width)).astype(np.uint8)
        write_pgm(directory / f"frame_{i:06d}.pgm", pixels)


def write_manifest(path, lines):
    path.write_text("\n".join(lines) + "\n")


class TestPgm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        pixels = rng.integers(0, 256, (24, 32)).astype(np.uint8)
        p = tmp_path / "a.pgm"
        write_pgm(p, pixels)
        assert np.array_equal(read_pgm(p), pixels)

    def test_round_trip_extremes(self, tmp_path):
        pixels = np.zeros((16, 16), np.uint8)
        pixels[0, 0] = 255
        p = tmp_path / "b.pgm"
        write_pgm(p, pixels)
        assert np.array_equal(read_pgm(p), pixels)

    def test_header_comments_and_whitespace(self, tmp_path):
        pixels = np.arange(6, dtype=np.uint8).reshape(2, 3)
        raw = b"P5\n# a comment\n 3 # inline\n2\n# more\n255\n" + pixels.tobytes()
        p = tmp_path / "c.pgm"
        p.write_bytes(raw)
        assert np.array_equal(read_pgm(p), pixels)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError, match="nope.pgm"):
            read_pgm(tmp_path / "nope.pgm")

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.pgm"
        p.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(FormatError, match="P5"):
            read_pgm(p)

    def test_wrong_maxval(self, tmp_path):
        p = tmp_path / "bad.pgm"
        p.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(FormatError, match="maxval"):
            read_pgm(p)

    def test_truncated_raster(self, tmp_path):
        p = tmp_path / "bad.pgm"
        p.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(FormatError, match="truncated"):
            read_pgm(p)


class TestY4m:
    def build_y4m(self, path, frames, width, height, colorspace=b"C420"):
        chroma = (width // 2) * (height // 2) * 2
        blob = b"YUV4MPEG2 W%d H%d F30:1 Ip A1:1 %s\n" % (width, height, colorspace)
        for f in frames:
            blob += b"FRAME\n" + f.tobytes() + bytes(chroma)
        path.write_bytes(blob)

    def test_luma_extraction(self, tmp_path):
        rng = np.random.default_rng(2)
        frames = [rng.integers(0, 256, (16, 32)).astype(np.uint8) for _ in range(3)]
        p = tmp_path / "v.y4m"
        self.build_y4m(p, frames, 32, 16)
        got = list(iter_y4m(p))
        assert len(got) == 3
        for a, b in zip(got, frames):
            assert np.array_equal(a, b)

    def test_unsupported_colorspace(self, tmp_path):
        p = tmp_path / "v.y4m"
        self.build_y4m(p, [np.zeros((16, 32), np.uint8)], 32, 16, colorspace=b"C444")
        with pytest.raises(FormatError, match="444"):
            list(iter_y4m(p))

    def test_truncated_frame(self, tmp_path):
        p = tmp_path / "v.y4m"
        p.write_bytes(b"YUV4MPEG2 W32 H16 F30:1\nFRAME\n" + bytes(100))
        with pytest.raises(FormatError, match="truncated"):
            list(iter_y4m(p))

    def test_manifest_with_y4m(self, tmp_path):
        rng = np.random.default_rng(3)
        frames = [rng.integers(0, 256, (16, 32)).astype(np.uint8) for _ in range(4)]
        self.build_y4m(tmp_path / "v.y4m", frames, 32, 16)
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, ["frames v.y4m", "label 0 3 normal"])
        it, track = open_sequence(manifest)
        out = list(it)
        assert [f.index for f in out] == [0, 1, 2, 3]
        assert np.array_equal(out[2].pixels, frames[2])
        assert track.label_of(1) == 0


class TestManifest:
    def test_basic_sequence(self, tmp_path):
        make_frame_files(tmp_path, 3)
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, [
            "# demo",
            "frames frame_*.pgm",
            "fps 30",
            "label 0 99 normal",
        ])
        it, track = open_sequence(manifest)
        frames = list(it)
        assert [f.index for f in frames] == [0, 1, 2]
        assert all(f.width == 32 and f.height == 24 for f in frames)
        assert track.spans == [LabelSpan(0, 99, "normal")]

    def test_directory_reference(self, tmp_path):
        sub = tmp_path / "seq"
        sub.mkdir()
        make_frame_files(sub, 2)
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, ["frames seq"])
        it, _ = open_sequence(manifest)
        assert len(list(it)) == 2

    def test_no_matching_frames(self, tmp_path):
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, ["frames missing_*.pgm"])
        with pytest.raises(IngestionError, match="missing_"):
            open_sequence(manifest)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(IngestionError, match="m.txt"):
            open_sequence(tmp_path / "m.txt")

    def test_unknown_directive(self, tmp_path):
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, ["framez *.pgm"])
        with pytest.raises(FormatError, match="framez"):
            parse_manifest(manifest)

    def test_dimension_mismatch_names_frame(self, tmp_path):
        make_frame_files(tmp_path, 2)
        write_pgm(tmp_path / "frame_000002.pgm", np.zeros((24, 48), np.uint8))
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, ["frames frame_*.pgm"])
        it, _ = open_sequence(manifest)
        with pytest.raises(FormatError, match="frame 2"):
            list(it)

    def test_long_sequence_count(self, tmp_path):
        # stand-in for a full-scene ingest: the loader must stream 1450 frames
        pixels = np.zeros((16, 16), np.uint8)
        for i in range(1450):
            write_pgm(tmp_path / f"f_{i:05d}.pgm", pixels)
        manifest = tmp_path / "m.txt"
        write_manifest(manifest, ["frames f_*.pgm"])
        it, _ = open_sequence(manifest)
        count = sum(1 for _ in it)
        assert count == 1450


class TestLabelTrack:
    def test_sorted_and_queryable(self):
        track = LabelTrack([
            LabelSpan(200, 299, "abnormal"),
            LabelSpan(0, 199, "normal"),
        ])
        assert [s.start for s in track.spans] == [0, 200]
        assert track.label_of(0) == 0
        assert track.label_of(250) == 1
        assert track.label_of(300) == -1
        assert list(track.labels(4)) == [0, 0, 0, 0]

    def test_overlap_rejected(self):
        with pytest.raises(FormatError, match="overlap"):
            LabelTrack([LabelSpan(0, 10, "normal"), LabelSpan(5, 20, "abnormal")])

    def test_bad_range_rejected(self):
        with pytest.raises(FormatError):
            LabelTrack([LabelSpan(10, 5, "normal")])

    def test_unknown_class_rejected(self):
        with pytest.raises(FormatError, match="odd"):
            LabelTrack([LabelSpan(0, 1, "odd")])

    def test_first_normal_span(self):
        track = LabelTrack([LabelSpan(0, 9, "normal"), LabelSpan(10, 19, "abnormal")])
        assert track.first_normal_span() == LabelSpan(0, 9, "normal")
        track2 = LabelTrack([LabelSpan(0, 9, "abnormal")])
        assert track2.first_normal_span() is None


class TestFrame:
    def test_too_small_rejected(self):
        with pytest.raises(FormatError, match="minimum"):
            Frame(0, np.zeros((8, 8), np.uint8))

    def test_wrong_dtype_rejected(self):
        with pytest.raises(FormatError, match="uint8"):
            Frame(0, np.zeros((16, 16), np.float32))

    @pytest.mark.parametrize("value,expected", [(0, 0.0), (255, 1.0), (128, 128 / 255)])
    def test_to_grayscale_values(self, value, expected):
        frame = Frame(0, np.full((16, 16), value, np.uint8))
        gray = to_grayscale_f32(frame)
        assert gray.dtype == np.float32
        assert gray.shape == (16, 16)
        assert abs(float(gray[0, 0]) - expected) < 1e-6
