"""Grayscale frame ingestion.

Sequences arrive as binary PGM files (P5, maxval 255) listed in a plain-text
manifest, or as a single Y4M (4:2:0) stream of which only the luma plane is
used.  The manifest also carries per-range normal/abnormal labels:

    # comment
    frames frame_*.pgm        (glob, directory, or one .y4m file)
    fps 30
    label 0 199 normal
    label 200 299 abnormal

Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import glob as globlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import FormatError, IngestionError

NORMAL = "normal"
ABNORMAL = "abnormal"

MIN_FRAME_SIDE = 16  # smallest side that still supports one pyramid level


@dataclass(frozen=True)
class Frame:
    """One grayscale frame; pixels is a (height, width) uint8 grid."""

    index: int
    pixels: np.ndarray

    def __post_init__(self):
        if not isinstance(self.pixels, np.ndarray) or self.pixels.ndim != 2:
            raise FormatError(f"frame {self.index}: pixels must be a 2-D array")
        if self.pixels.dtype != np.uint8:
            raise FormatError(f"frame {self.index}: pixels must be uint8")
        h, w = self.pixels.shape
        if w < MIN_FRAME_SIDE or h < MIN_FRAME_SIDE:
            raise FormatError(
                f"frame {self.index}: {w}x{h} is below the {MIN_FRAME_SIDE} px minimum"
            )

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LabelSpan:
    start: int
    end: int
    label: str


class LabelTrack:
    """Ordered, non-overlapping frame-range labels."""

    def __init__(self, spans):
        spans = sorted(spans, key=lambda s: s.start)
        for s in spans:
            if s.label not in (NORMAL, ABNORMAL):
                raise FormatError(f"label span {s.start}..{s.end}: unknown class {s.label!r}")
            if s.end < s.start or s.start < 0:
                raise FormatError(f"label span {s.start}..{s.end}: invalid range")
        for a, b in zip(spans, spans[1:]):
            if b.start <= a.end:
                raise FormatError(
                    f"label spans {a.start}..{a.end} and {b.start}..{b.end} overlap"
                )
        self.spans: list[LabelSpan] = spans

    def label_of(self, index: int) -> int:
        """1 = abnormal, 0 = normal, -1 = unlabeled."""
        for s in self.spans:
            if s.start <= index <= s.end:
                return 1 if s.label == ABNORMAL else 0
        return -1

    def labels(self, n_frames: int) -> np.ndarray:
        out = np.full(n_frames, -1, dtype=np.int64)
        for s in self.spans:
            out[max(0, s.start) : min(n_frames, s.end + 1)] = 1 if s.label == ABNORMAL else 0
        return out

    def first_normal_span(self) -> LabelSpan | None:
        """The leading span when it is normal (the training segment), else None."""
        if self.spans and self.spans[0].label == NORMAL:
            return self.spans[0]
        return None


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) file into a (h, w) uint8 array."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise IngestionError(f"missing frame file: {path}") from None
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    values, pos = _parse_pgm_header(data, path)
    width, height, maxval = values
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported (must be 255)")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise FormatError(f"{path}: truncated raster ({len(raster)} of {width * height} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def _parse_pgm_header(data: bytes, path) -> tuple[list[int], int]:
    # width, height, maxval separated by whitespace; '#' comments run to end of line
    whitespace = b" \t\r\n\x0b\x0c"
    pos = 2
    values: list[int] = []
    while len(values) < 3:
        while pos < len(data):
            if data[pos] in whitespace:
                pos += 1
            elif data[pos : pos + 1] == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise FormatError(f"{path}: malformed PGM header")
        values.append(int(data[start:pos]))
    if pos >= len(data) or data[pos] not in whitespace:
        raise FormatError(f"{path}: missing whitespace after maxval")
    return values, pos + 1


def write_pgm(path, pixels: np.ndarray) -> None:
    """Write a (h, w) uint8 array as a binary PGM (P5, maxval 255) file."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise FormatError("write_pgm expects a 2-D uint8 array")
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


_Y4M_420 = {"420", "420jpeg", "420paldv", "420mpeg2"}


def iter_y4m(path) -> Iterator[np.ndarray]:
    """Yield the luma plane of every frame in a 4:2:0 Y4M stream as uint8 arrays."""
    path = Path(path)
    try:
        stream = path.open("rb")
    except FileNotFoundError:
        raise IngestionError(f"missing video file: {path}") from None
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    with stream:
        header = stream.readline()
        if not header.startswith(b"YUV4MPEG2"):
            raise FormatError(f"{path}: not a Y4M stream")
        width = height = None
        colorspace = "420"
        for token in header.split()[1:]:
            tag, value = chr(token[0]), token[1:].decode("ascii", "replace")
            if tag == "W":
                width = int(value)
            elif tag == "H":
                height = int(value)
            elif tag == "C":
                colorspace = value
        if width is None or height is None:
            raise FormatError(f"{path}: Y4M header lacks W or H")
        if colorspace not in _Y4M_420:
            raise FormatError(f"{path}: colorspace {colorspace!r} unsupported (4:2:0 only)")
        if width % 2 or height % 2:
            raise FormatError(f"{path}: 4:2:0 requires even dimensions, got {width}x{height}")
        luma_size = width * height
        chroma_size = (width // 2) * (height // 2) * 2
        index = 0
        while True:
            line = stream.readline()
            if not line:
                return
            if not line.startswith(b"FRAME"):
                raise FormatError(f"{path}: frame {index}: expected FRAME marker")
            payload = stream.read(luma_size + chroma_size)
            if len(payload) != luma_size + chroma_size:
                raise FormatError(f"{path}: frame {index}: truncated frame payload")
            yield np.frombuffer(payload[:luma_size], dtype=np.uint8).reshape(height, width).copy()
            index += 1


@dataclass
class Manifest:
    frame_paths: list[Path]
    y4m_path: Path | None
    fps: int
    labels: LabelTrack


def parse_manifest(path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise IngestionError(f"missing manifest: {path}") from None
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc

    base = path.parent
    pattern = None
    fps = 0
    spans: list[LabelSpan] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        directive, rest = tokens[0], tokens[1:]
        if directive == "frames":
            if not rest:
                raise FormatError(f"{path}:{lineno}: frames directive needs a path")
            pattern = " ".join(rest)
        elif directive == "fps":
            if len(rest) != 1 or not rest[0].isdigit():
                raise FormatError(f"{path}:{lineno}: fps needs one integer")
            fps = int(rest[0])
        elif directive == "label":
            if len(rest) != 3:
                raise FormatError(f"{path}:{lineno}: label needs <start> <end> <class>")
            try:
                start, end = int(rest[0]), int(rest[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: label range must be integers") from None
            spans.append(LabelSpan(start, end, rest[2]))
        else:
            raise FormatError(f"{path}:{lineno}: unknown directive {directive!r}")

    if pattern is None:
        raise FormatError(f"{path}: no frames directive")
    labels = LabelTrack(spans)

    target = Path(pattern)
    if not target.is_absolute():
        target = base / pattern
    if target.suffix == ".y4m":
        if not target.is_file():
            raise IngestionError(f"missing video file: {target}")
        return Manifest([], target, fps, labels)
    if target.is_dir():
        frame_paths = sorted(target.glob("*.pgm"))
    else:
        frame_paths = [Path(p) for p in sorted(globlib.glob(str(target)))]
    if not frame_paths:
        raise IngestionError(f"no frames match {pattern!r} (from {path})")
    return Manifest(frame_paths, None, fps, labels)


def open_sequence(manifest_path) -> tuple[Iterator[Frame], LabelTrack]:
    """Open a manifest; returns a frame iterator (indices 0..N-1) and its labels."""
    manifest = parse_manifest(manifest_path)
    return _iter_frames(manifest), manifest.labels


def _iter_frames(manifest: Manifest) -> Iterator[Frame]:
    expected = None
    if manifest.y4m_path is not None:
        for index, luma in enumerate(iter_y4m(manifest.y4m_path)):
            if expected is None:
                expected = luma.shape
            elif luma.shape != expected:
                raise FormatError(
                    f"frame {index}: dimensions changed mid-sequence "
                    f"({luma.shape[1]}x{luma.shape[0]} vs {expected[1]}x{expected[0]})"
                )
            yield Frame(index, luma)
        return
    for index, frame_path in enumerate(manifest.frame_paths):
        pixels = read_pgm(frame_path)
        if expected is None:
            expected = pixels.shape
        elif pixels.shape != expected:
            raise FormatError(
                f"frame {index} ({frame_path.name}): dimensions "
                f"{pixels.shape[1]}x{pixels.shape[0]} do not match sequence "
                f"{expected[1]}x{expected[0]}"
            )
        yield Frame(index, pixels)


def to_grayscale_f32(frame: Frame) -> np.ndarray:
    """Intensity grid scaled to [0, 1] (pixel / 255) as float32."""
    return frame.pixels.astype(np.float32) / np.float32(255.0)
