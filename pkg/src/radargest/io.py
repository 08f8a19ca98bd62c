"""On-disk formats: datasets, checkpoints, metrics CSV, config files, maps.

All multi-byte values are little-endian and all floating-point payloads
are stored as 32-bit floats, so files are portable across platforms and
checkpoint round-trips are bit-exact for float32-representable values.
"""

from __future__ import annotations

import dataclasses
import struct
import typing
from dataclasses import dataclass

import numpy as np

from .classify import ClassifierConfig
from .errors import ConfigError, DataFormatError
from .simulate import ComplexCube
from .sr import SafmnConfig
from .training import MetricsRecord, TrainConfig

DATASET_MAGIC = b"RGC1"
CHECKPOINT_MAGIC = b"RGCK"
FORMAT_VERSION = 1

CSV_HEADER = "epoch,regime,d,gamma,accuracy,l1,ms_ssim,psnr,ce_loss,sr_loss"

_DATASET_HEADER = struct.Struct("<4sHHHHIH")  # magic, version, K, M, N, records, classes
_CHECKPOINT_HEADER = struct.Struct("<4sHI")  # magic, version, entry count


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetHeader:
    """Shape and bookkeeping fields of a dataset file."""

    k: int
    m: int
    n: int
    num_records: int
    num_classes: int


def _check_range(what: str, value: int, limit: int) -> int:
    if not 0 <= value <= limit:
        raise ValueError(f"{what} {value} outside the storable range [0, {limit}]")
    return value


def save_dataset(
    path: str,
    records: list[tuple[ComplexCube, int]],
    num_classes: int | None = None,
    dims: tuple[int, int, int] | None = None,
) -> None:
    """Write labeled complex cubes; all cubes must share one (K, M, N).

    ``num_classes`` defaults to ``max(label) + 1``.  ``dims`` is only
    needed (and required) when ``records`` is empty.
    """
    records = list(records)
    if records:
        shapes = {tuple(cube.shape) for cube, _ in records}
        if len(shapes) != 1:
            raise ValueError(f"records mix cube shapes: {sorted(shapes)}")
        k, m, n = shapes.pop()
        if dims is not None and tuple(dims) != (k, m, n):
            raise ValueError(f"dims {dims} do not match the records' shape ({k}, {m}, {n})")
    elif dims is None:
        raise ValueError("dims is required when writing an empty dataset")
    else:
        k, m, n = dims
    if min(k, m, n) < 1:
        raise ValueError(f"cube dims must be positive, got ({k}, {m}, {n})")

    labels = [int(label) for _, label in records]
    if num_classes is None:
        num_classes = max(labels) + 1 if labels else 0
    bad = [label for label in labels if not 0 <= label < num_classes]
    if bad:
        raise ValueError(f"labels {sorted(set(bad))} outside [0, {num_classes})")

    for what, value, limit in (
        ("K", k, 0xFFFF),
        ("M", m, 0xFFFF),
        ("N", n, 0xFFFF),
        ("num_records", len(records), 0xFFFFFFFF),
        ("num_classes", num_classes, 0xFFFF),
    ):
        _check_range(what, value, limit)

    blob = bytearray(
        _DATASET_HEADER.pack(DATASET_MAGIC, FORMAT_VERSION, k, m, n, len(records), num_classes)
    )
    for (cube, _), label in zip(records, labels):
        blob += struct.pack("<H", label)
        blob += np.ascontiguousarray(cube.data, dtype="<c8").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


def load_dataset(path: str) -> tuple[list[tuple[ComplexCube, int]], DatasetHeader]:
    """Read a dataset file back as complex128 cubes plus its header."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _DATASET_HEADER.size:
        raise DataFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, k, m, n, num_records, num_classes = _DATASET_HEADER.unpack_from(blob)
    if magic != DATASET_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {DATASET_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    samples = k * m * n
    want = _DATASET_HEADER.size + num_records * (2 + samples * 8)
    if len(blob) != want:
        raise DataFormatError(f"{path}: file is {len(blob)} bytes, header implies {want}")

    records: list[tuple[ComplexCube, int]] = []
    offset = _DATASET_HEADER.size
    for index in range(num_records):
        (label,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if label >= num_classes:
            raise DataFormatError(
                f"{path}: record {index} has label {label} but num_classes is {num_classes}"
            )
        flat = np.frombuffer(blob, dtype="<c8", count=samples, offset=offset)
        offset += samples * 8
        try:
            cube = ComplexCube(flat.astype(np.complex128).reshape(k, m, n))
        except ValueError as exc:
            raise DataFormatError(f"{path}: record {index}: {exc}") from None
        records.append((cube, int(label)))
    header = DatasetHeader(k=k, m=m, n=n, num_records=num_records, num_classes=num_classes)
    return records, header


# ---------------------------------------------------------------------------
# Checkpoint files
# ---------------------------------------------------------------------------


def save_checkpoint(path: str, state: dict[str, np.ndarray]) -> None:
    """Write named tensors as float32; entry order follows the dict."""
    blob = bytearray(_CHECKPOINT_HEADER.pack(CHECKPOINT_MAGIC, FORMAT_VERSION, len(state)))
    for name, arr in state.items():
        raw = name.encode("utf-8")
        _check_range(f"name length of {name!r}", len(raw), 0xFFFF)
        a = np.asarray(arr, dtype=np.float64)
        _check_range(f"rank of {name!r}", a.ndim, 0xFF)
        for dim in a.shape:
            _check_range(f"dim of {name!r}", dim, 0xFFFFFFFF)
        blob += struct.pack("<H", len(raw)) + raw + struct.pack("<B", a.ndim)
        blob += struct.pack(f"<{a.ndim}I", *a.shape)
        blob += np.ascontiguousarray(a, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    """Read named tensors back as float64 arrays, preserving file order."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(offset: int, count: int, what: str) -> tuple[bytes, int]:
        if offset + count > len(blob):
            raise DataFormatError(f"{path}: truncated {what}")
        return blob[offset : offset + count], offset + count

    chunk, offset = take(0, _CHECKPOINT_HEADER.size, "header")
    magic, version, count = _CHECKPOINT_HEADER.unpack(chunk)
    if magic != CHECKPOINT_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")

    state: dict[str, np.ndarray] = {}
    for _ in range(count):
        chunk, offset = take(offset, 2, "entry name length")
        (name_len,) = struct.unpack("<H", chunk)
        chunk, offset = take(offset, name_len, "entry name")
        try:
            name = chunk.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataFormatError(f"{path}: undecodable entry name: {exc}") from None
        if name in state:
            raise DataFormatError(f"{path}: duplicate entry name {name!r}")
        chunk, offset = take(offset, 1, f"rank of {name!r}")
        rank = chunk[0]
        chunk, offset = take(offset, 4 * rank, f"dims of {name!r}")
        dims = struct.unpack(f"<{rank}I", chunk)
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        chunk, offset = take(offset, 4 * size, f"data of {name!r}")
        data = np.frombuffer(chunk, dtype="<f4").astype(np.float64).reshape(dims)
        state[name] = data
    if offset != len(blob):
        raise DataFormatError(f"{path}: {len(blob) - offset} trailing bytes after last entry")
    return state


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------


def format_metrics_row(record: MetricsRecord) -> str:
    """One CSV row; floats use repr so reruns are byte-identical."""
    return ",".join(
        [
            str(record.epoch),
            record.regime,
            str(record.d),
            repr(float(record.gamma)),
            repr(float(record.accuracy)),
            repr(float(record.l1)),
            repr(float(record.ms_ssim)),
            repr(float(record.psnr)),
            repr(float(record.ce_loss)),
            repr(float(record.sr_loss)),
        ]
    )


def write_metrics_csv(path: str, records: list[MetricsRecord]) -> None:
    lines = [CSV_HEADER] + [format_metrics_row(record) for record in records]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Map images
# ---------------------------------------------------------------------------


def write_pgm(path: str, frame: np.ndarray) -> None:
    """Write one magnitude map as binary PGM (P5, maxval 65535).

    The frame is min-max normalized to the full 16-bit range; a constant
    frame maps to all zeros.  Samples are big-endian per the PGM format.
    """
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d map, got shape {arr.shape}")
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        scaled = np.rint((arr - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(arr)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + scaled.astype(">u2").tobytes())


def write_map_csv(path: str, frame: np.ndarray) -> None:
    """Write one magnitude map as raw (un-normalized) float rows."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d map, got shape {arr.shape}")
    lines = [",".join(repr(float(v)) for v in row) for row in arr]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Run configuration files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything a training or evaluation run needs, from one file."""

    train: TrainConfig
    sr: SafmnConfig
    classifier: ClassifierConfig


def _build_schema() -> dict[str, tuple[str, str, type]]:
    """Map config-file keys to (section, field name, resolved type).

    Training keys are bare (they include the degradation factors and
    noise level); network keys carry ``sr_``/``cls_`` prefixes.  The SR
    scale factors are deliberately absent: the training factors decide
    them per regime.
    """
    schema: dict[str, tuple[str, str, type]] = {}
    sections = (("", "train", TrainConfig), ("sr_", "sr", SafmnConfig), ("cls_", "cls", ClassifierConfig))
    skip = {"sr_ds", "sr_df"}
    for prefix, section, cls in sections:
        hints = typing.get_type_hints(cls)
        for field in dataclasses.fields(cls):
            key = f"{prefix}{field.name}"
            if key not in skip:
                schema[key] = (section, field.name, hints[field.name])
    return schema


_SCHEMA = _build_schema()


def _parse_value(key: str, text: str, tp: type):
    try:
        if tp is bool:
            lowered = text.lower()
            if lowered in {"true", "1", "yes", "on"}:
                return True
            if lowered in {"false", "0", "no", "off"}:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if tp is str:
            return text
        if typing.get_origin(tp) is tuple:
            return tuple(int(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from None
    raise ConfigError(f"config key {key!r} has unsupported schema type {tp}")


def run_config_keys() -> dict[str, str]:
    """Documented schema: key -> type name, for --help and docs."""
    names = {}
    for key, (_, _, tp) in sorted(_SCHEMA.items()):
        names[key] = "tuple of ints" if typing.get_origin(tp) is tuple else tp.__name__
    return names


def parse_run_config(text: str) -> RunConfig:
    """Parse flat ``key=value`` lines; ``#`` comments and blanks allowed.

    Unknown and duplicate keys are rejected; missing keys take the
    defaults of the underlying configuration types.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value.strip(), _SCHEMA[key][2])

    kwargs: dict[str, dict[str, object]] = {"train": {}, "sr": {}, "cls": {}}
    for key, parsed in values.items():
        section, field_name, _ = _SCHEMA[key]
        kwargs[section][field_name] = parsed
    return RunConfig(
        train=TrainConfig(**kwargs["train"]),
        sr=SafmnConfig(**kwargs["sr"]),
        classifier=ClassifierConfig(**kwargs["cls"]),
    )


def load_run_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_run_config(fh.read())
