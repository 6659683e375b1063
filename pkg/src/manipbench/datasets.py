"""Binary file formats: labeled-instance datasets and network checkpoints.

Dataset files ("LTMD") carry a fixed little-endian header
    magic 4s | version u16 | method u8 | info u8 | model u8 | n u16 | m u8 |
    labeling u8 | count u64 | feature_dim u32 | num_classes u32
followed, per record, by feature_dim float32 values and ceil(num_classes/8)
label bytes, least-significant-bit first.

Checkpoint files ("LTMW") carry
    magic 4s | version u16 | input_dim u32 | n_hidden u8 | widths u32 each |
    output_dim u32 | activation u8 | init_seed u64
followed by row-major float64 weights then biases, layer by layer.

Writes go to a temp file in the target directory and rename into place, so
concurrent workers never observe partial files. Corrupt and wrong-version
files raise DatasetFormatError with distinct codes.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .information import InfoType
from .neural import NetConfig, TrainedNet
from .oracle import InstanceMeta, Labeling
from .samplers import ModelKind, ProbModel
from .voting_methods import MethodId

DATASET_MAGIC = b"LTMD"
DATASET_VERSION = 1
_DATASET_HEADER = struct.Struct("<4sHBBBHBBQII")

CHECKPOINT_MAGIC = b"LTMW"
CHECKPOINT_VERSION = 1

_ACTIVATION_CODES = {"relu": 0}
_ACTIVATION_NAMES = {0: "relu"}


class DatasetFormatError(ValueError):
    """code is one of: bad-magic, bad-version, truncated, inconsistent."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class DatasetHeader:
    method: MethodId
    info: InfoType
    model_kind: ModelKind
    n: int
    m: int
    labeling: Labeling
    count: int
    feature_dim: int
    num_classes: int


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def pack_label_bits(labels: np.ndarray) -> bytes:
    """(count, num_classes) bool -> packed bytes, LSB-first per record."""
    return np.packbits(labels.astype(np.uint8), axis=1, bitorder="little").tobytes()


def unpack_label_bits(raw: bytes, count: int, num_classes: int) -> np.ndarray:
    stride = math.ceil(num_classes / 8)
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(count, stride)
    bits = np.unpackbits(arr, axis=1, bitorder="little")[:, :num_classes]
    return bits.astype(bool)


def write_dataset(
    path: str | Path,
    meta: InstanceMeta,
    model: ProbModel,
    labeling: Labeling,
    features: np.ndarray,
    labels: np.ndarray,
) -> None:
    features = np.ascontiguousarray(features, dtype=np.float32)
    labels = np.asarray(labels, dtype=bool)
    count, feature_dim = features.shape
    num_classes = labels.shape[1]
    if labels.shape[0] != count:
        raise ValueError("features and labels disagree on record count")
    header = _DATASET_HEADER.pack(
        DATASET_MAGIC,
        DATASET_VERSION,
        int(meta.method),
        int(meta.info),
        int(model.kind),
        meta.n,
        meta.m,
        int(labeling),
        count,
        feature_dim,
        num_classes,
    )
    stride = math.ceil(num_classes / 8)
    feat_rows = features.astype("<f4").view(np.uint8).reshape(count, feature_dim * 4)
    label_rows = np.frombuffer(pack_label_bits(labels), dtype=np.uint8).reshape(count, stride)
    body = np.concatenate([feat_rows, label_rows], axis=1).tobytes()
    _atomic_write(Path(path), header + body)


def read_dataset_header(path: str | Path) -> DatasetHeader:
    with open(path, "rb") as fh:
        raw = fh.read(_DATASET_HEADER.size)
    if len(raw) < _DATASET_HEADER.size:
        raise DatasetFormatError("truncated", f"{path}: header too short")
    (magic, version, method, info, model, n, m, labeling, count, feature_dim, num_classes) = _DATASET_HEADER.unpack(raw)
    if magic != DATASET_MAGIC:
        raise DatasetFormatError("bad-magic", f"{path}: not a dataset file")
    if version != DATASET_VERSION:
        raise DatasetFormatError("bad-version", f"{path}: version {version}")
    return DatasetHeader(
        method=MethodId(method),
        info=InfoType(info),
        model_kind=ModelKind(model),
        n=n,
        m=m,
        labeling=Labeling(labeling),
        count=count,
        feature_dim=feature_dim,
        num_classes=num_classes,
    )


def read_dataset(path: str | Path) -> tuple[DatasetHeader, np.ndarray, np.ndarray]:
    """Returns (header, features float32 (count, d), labels bool (count, R))."""
    header = read_dataset_header(path)
    stride = math.ceil(header.num_classes / 8)
    rec = header.feature_dim * 4 + stride
    with open(path, "rb") as fh:
        fh.seek(_DATASET_HEADER.size)
        body = fh.read()
    if len(body) != header.count * rec:
        raise DatasetFormatError(
            "truncated",
            f"{path}: body is {len(body)} bytes, expected {header.count * rec}",
        )
    if math.factorial(header.m) != header.num_classes:
        raise DatasetFormatError(
            "inconsistent", f"{path}: num_classes {header.num_classes} != m!"
        )
    raw = np.frombuffer(body, dtype=np.uint8).reshape(header.count, rec)
    features = raw[:, : header.feature_dim * 4].copy().view("<f4")
    labels = unpack_label_bits(raw[:, header.feature_dim * 4 :].tobytes(), header.count, header.num_classes)
    if not labels.any(axis=1).all():
        raise DatasetFormatError("inconsistent", f"{path}: record with empty label mask")
    return header, features, labels


def write_checkpoint(path: str | Path, net: TrainedNet) -> None:
    cfg = net.config
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<H", CHECKPOINT_VERSION),
        struct.pack("<I", cfg.input_dim),
        struct.pack("<B", len(cfg.hidden)),
    ]
    for w in cfg.hidden:
        parts.append(struct.pack("<I", w))
    parts.append(struct.pack("<I", cfg.output_dim))
    parts.append(struct.pack("<B", _ACTIVATION_CODES[cfg.activation]))
    parts.append(struct.pack("<Q", cfg.init_seed))
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    _atomic_write(Path(path), b"".join(parts))


def read_checkpoint(path: str | Path) -> TrainedNet:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise DatasetFormatError("bad-magic", f"{path}: not a checkpoint file")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise DatasetFormatError("bad-version", f"{path}: version {version}")
    off = 6
    (input_dim,) = struct.unpack_from("<I", raw, off)
    off += 4
    (n_hidden,) = struct.unpack_from("<B", raw, off)
    off += 1
    hidden = []
    for _ in range(n_hidden):
        (w,) = struct.unpack_from("<I", raw, off)
        hidden.append(w)
        off += 4
    (output_dim,) = struct.unpack_from("<I", raw, off)
    off += 4
    (act_code,) = struct.unpack_from("<B", raw, off)
    off += 1
    (init_seed,) = struct.unpack_from("<Q", raw, off)
    off += 8
    cfg = NetConfig(
        input_dim=input_dim,
        hidden=tuple(hidden),
        output_dim=output_dim,
        activation=_ACTIVATION_NAMES[act_code],
        init_seed=init_seed,
    )
    weights, biases = [], []
    for fan_in, fan_out in cfg.layer_dims:
        w_bytes = fan_in * fan_out * 8
        if off + w_bytes + fan_out * 8 > len(raw):
            raise DatasetFormatError("truncated", f"{path}: weight payload too short")
        weights.append(
            np.frombuffer(raw, dtype="<f8", count=fan_in * fan_out, offset=off)
            .reshape(fan_in, fan_out)
            .copy()
        )
        off += w_bytes
        biases.append(np.frombuffer(raw, dtype="<f8", count=fan_out, offset=off).copy())
        off += fan_out * 8
    if off != len(raw):
        raise DatasetFormatError("inconsistent", f"{path}: trailing bytes")
    return TrainedNet(cfg, weights, biases)
