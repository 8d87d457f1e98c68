"""
PGM images, metrics CSVs and run manifests.

All writers are byte-deterministic: identical inputs give identical files.
"""
import csv
import logging
from dataclasses import dataclass, fields
from hashlib import sha256
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from pyLifting import FloatArray
from pyLifting.Capsules.Errors import ConfigError, ImageIOError, PgmParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

METRICS_HEADER = (
    "k",
    "mode",
    "data_energy",
    "tv_energy",
    "fidelity",
    "noninteg_count",
    "solver_iters",
    "wall_ms",
    "diff_to_classic",
)
WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True, eq=False)
class GrayImage:
    samples: FloatArray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise ConfigError(f"a gray image is 2-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("gray image samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class MetricsRow:
    k: int
    mode: str
    data_energy: float
    tv_energy: float
    fidelity: Optional[float] = None
    noninteg_count: int = 0
    solver_iters: int = 0
    wall_ms: float = 0.0
    diff_to_classic: Optional[float] = None


class _Reader:
    """
    Header tokenizer that skips whitespace and comments and tracks offsets.
    """

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def skip(self) -> None:
        while self.pos < len(self.data):
            ch = self.data[self.pos : self.pos + 1]
            if ch in WHITESPACE:
                self.pos += 1
            elif ch == b"#":
                end = self.data.find(b"\n", self.pos)
                self.pos = len(self.data) if end < 0 else end + 1
            else:
                return

    def token(self) -> Tuple[bytes, int]:
        self.skip()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1] not in WHITESPACE + b"#":
            self.pos += 1
        return self.data[start : self.pos], start

    def integer(self, what: str) -> int:
        tok, start = self.token()
        if not tok:
            raise PgmParseError(f"missing {what}", start)
        if not tok.isdigit():
            raise PgmParseError(f"{what} is not a non-negative integer: {tok!r}", start)
        return int(tok)


def parse_pgm(data: bytes) -> GrayImage:
    """
    Decode a binary (P5) or ASCII (P2) PGM, normalising samples by maxval.
    """
    reader = _Reader(data)
    magic, _ = reader.token()
    if magic not in (b"P5", b"P2"):
        raise PgmParseError(f"unsupported magic {magic[:8]!r}", 0)
    width = reader.integer("width")
    height = reader.integer("height")
    maxval_offset = reader.pos
    maxval = reader.integer("maxval")
    if width < 1 or height < 1:
        raise PgmParseError(f"empty image {width}x{height}", maxval_offset)
    if not 1 <= maxval <= 65535:
        raise PgmParseError(f"maxval {maxval} outside 1..65535", maxval_offset)
    count = width * height
    if magic == b"P5":
        if reader.pos >= len(data) or data[reader.pos : reader.pos + 1] not in WHITESPACE:
            raise PgmParseError("missing whitespace before the raster", reader.pos)
        start = reader.pos + 1
        dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
        needed = count * dtype.itemsize
        if len(data) - start < needed:
            raise PgmParseError(f"truncated raster: {len(data) - start} of {needed} bytes", len(data))
        values = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(np.int64)
    else:
        values = np.empty(count, dtype=np.int64)
        for n in range(count):
            tok, start = reader.token()
            if not tok:
                raise PgmParseError(f"truncated raster: {n} of {count} samples", start)
            if not tok.isdigit():
                raise PgmParseError(f"sample is not an integer: {tok!r}", start)
            values[n] = int(tok)
    if values.max() > maxval:
        raise PgmParseError(f"sample {values.max()} exceeds maxval {maxval}", reader.pos)
    return GrayImage(values.reshape(height, width) / float(maxval))


def read_pgm(path: PathLike) -> GrayImage:
    """
    Read a binary (P5) or plain (P2) greymap.

    Args:
        path: file to read

    Returns:
        the image with samples scaled to [0, 1]

    Raises:
        ImageIOError: the file cannot be read
        PgmParseError: the content is not a valid greymap
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ImageIOError(e.strerror or str(e), str(path)) from e
    image = parse_pgm(data)
    logger.debug(f"read {path}: {image.width}x{image.height}")
    return image


def encode_pgm(img: Union[GrayImage, FloatArray], maxval: int = 255) -> bytes:
    """
    Binary PGM bytes; samples are clamped to [0, 1] and rounded half up.
    """
    if not 1 <= maxval <= 65535:
        raise ConfigError(f"maxval must lie in 1..65535, got {maxval}")
    samples = img.samples if isinstance(img, GrayImage) else GrayImage(img).samples
    levels = np.floor(np.clip(samples, 0.0, 1.0) * maxval + 0.5).astype(np.int64)
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    header = f"P5\n{samples.shape[1]} {samples.shape[0]}\n{maxval}\n".encode("ascii")
    return header + levels.astype(dtype).tobytes()


def write_pgm(img: Union[GrayImage, FloatArray], path: PathLike, maxval: int = 255) -> None:
    _write_bytes(path, encode_pgm(img, maxval))


def write_depth_map(depth: FloatArray, bounds: Tuple[float, float], path: PathLike) -> None:
    """
    Scale [gamma_1, gamma_L] affinely onto [0, 1] and write as PGM.
    """
    lo, hi = bounds
    write_pgm((np.asarray(depth, dtype=float) - lo) / (hi - lo), path)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".12g")


def write_metrics(rows: Iterable[MetricsRow], path: PathLike) -> None:
    def render(row: MetricsRow) -> List[str]:
        return [row.mode if f.name == "mode" else _fmt(getattr(row, f.name)) for f in fields(MetricsRow)]

    _write_csv(path, METRICS_HEADER, (render(r) for r in rows))


def read_metrics(path: PathLike) -> List[MetricsRow]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            records = list(csv.DictReader(handle))
    except OSError as e:
        raise ImageIOError(e.strerror or str(e), str(path)) from e

    def opt(text: str) -> Optional[float]:
        return None if text == "" else float(text)

    return [
        MetricsRow(
            k=int(r["k"]),
            mode=r["mode"],
            data_energy=float(r["data_energy"]),
            tv_energy=float(r["tv_energy"]),
            fidelity=opt(r["fidelity"]),
            noninteg_count=int(r["noninteg_count"]),
            solver_iters=int(r["solver_iters"]),
            wall_ms=float(r["wall_ms"]),
            diff_to_classic=opt(r["diff_to_classic"]),
        )
        for r in records
    ]


def write_profile(profiles: Mapping[Tuple[str, int], FloatArray], path: PathLike) -> None:
    """
    One row per (mode, k, column) with the value of that column on the profile row.
    """
    rows = (
        [mode, str(k), str(x), _fmt(v)]
        for (mode, k), values in sorted(profiles.items())
        for x, v in enumerate(values)
    )
    _write_csv(path, ("mode", "k", "x", "value"), rows)


def write_scale_order(entries: Sequence[Tuple[str, int, Optional[int]]], path: PathLike) -> None:
    """
    One row per shape: kind, size in pixels, first detection step (empty if never).
    """
    rows = ([str(n), kind, str(size), "" if first is None else str(first)] for n, (kind, size, first) in enumerate(entries))
    _write_csv(path, ("shape", "kind", "size", "first_k"), rows)


def file_digest(path: PathLike) -> str:
    try:
        return sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise ImageIOError(e.strerror or str(e), str(path)) from e


def write_manifest(entries: Mapping[str, object], path: PathLike, digest_files: Sequence[PathLike] = ()) -> None:
    """
    Sorted `key=value` lines, plus `sha256.<name>` for each digested file.
    """
    values = {k: str(v) for k, v in entries.items()}
    for f in digest_files:
        values[f"sha256.{Path(f).name}"] = file_digest(f)
    text = "".join(f"{k}={values[k]}\n" for k in sorted(values))
    _write_bytes(path, text.encode("utf-8"))


def _write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ImageIOError(e.strerror or str(e), str(path)) from e


def _write_bytes(path: PathLike, payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as e:
        raise ImageIOError(e.strerror or str(e), str(path)) from e
