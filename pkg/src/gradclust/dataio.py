"""Dataset loading and saving: CSV and a compact binary format.

CSV: header row with ``id`` first, feature columns, and an optional trailing
``label`` column of integers.  Binary: magic ``GCLS``, a version byte, then
little-endian u32 n, u32 d, n*d float32 features, and optionally n int32
labels.  The binary format carries no ids; rows are re-identified by index.
"""

from __future__ import annotations

import csv
import math
import struct

import numpy as np

from .model import Dataset

__all__ = ["load_dataset", "save_dataset", "load_dataset_csv", "save_dataset_csv",
           "load_dataset_binary", "save_dataset_binary", "write_assignments",
           "read_assignments"]

_MAGIC = b"GCLS"
_VERSION = 1


def load_dataset(path: str, format: str) -> Dataset:
    if format == "csv":
        return load_dataset_csv(path)
    if format == "bin":
        return load_dataset_binary(path)
    raise ValueError(f"unsupported dataset format {format!r} (expected 'csv' or 'bin')")


def save_dataset(data: Dataset, path: str, format: str) -> None:
    if format == "csv":
        save_dataset_csv(data, path)
    elif format == "bin":
        save_dataset_binary(data, path)
    else:
        raise ValueError(f"unsupported dataset format {format!r} (expected 'csv' or 'bin')")


def load_dataset_csv(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise ValueError(f"{path}:1: header must start with an 'id' column")
        has_labels = len(header) > 1 and header[-1] == "label"
        n_features = len(header) - 1 - (1 if has_labels else 0)
        if n_features < 1:
            raise ValueError(f"{path}:1: no feature columns in header")
        ids: list[str] = []
        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}"
                )
            ids.append(row[0])
            feats = []
            for col, cell in enumerate(row[1 : 1 + n_features], 1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad float {cell!r} in column {col}") from None
                if not math.isfinite(v):
                    raise ValueError(f"{path}:{lineno}: non-finite value {cell!r} in column {col}")
                feats.append(v)
            rows.append(feats)
            if has_labels:
                try:
                    labels.append(int(row[-1]))
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad label {row[-1]!r}") from None
        if not rows:
            raise ValueError(f"{path}: no data rows")
        return Dataset(
            tuple(ids),
            np.asarray(rows, dtype=np.float64),
            np.asarray(labels, dtype=np.int64) if has_labels else None,
        )


def save_dataset_csv(data: Dataset, path: str) -> None:
    d = data.dim
    header = ["id"] + [f"x{j}" for j in range(d)]
    if data.ground_truth is not None:
        header.append("label")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, sample_id in enumerate(data.ids):
            row = [sample_id] + [repr(float(v)) for v in data.embeddings[i]]
            if data.ground_truth is not None:
                row.append(str(int(data.ground_truth[i])))
            writer.writerow(row)


def load_dataset_binary(path: str) -> Dataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    head = len(_MAGIC) + 1 + 8
    if len(blob) < head:
        raise ValueError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: bad magic bytes {blob[:4]!r}")
    version = blob[len(_MAGIC)]
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    n, d = struct.unpack_from("<II", blob, len(_MAGIC) + 1)
    payload = n * d * 4
    expected_plain = head + payload
    expected_labeled = expected_plain + n * 4
    if len(blob) not in (expected_plain, expected_labeled):
        raise ValueError(
            f"{path}: expected {expected_plain} or {expected_labeled} bytes, found {len(blob)}"
        )
    feats = np.frombuffer(blob, dtype="<f4", count=n * d, offset=head).reshape(n, d)
    labels = None
    if len(blob) == expected_labeled:
        labels = np.frombuffer(blob, dtype="<i4", count=n, offset=expected_plain).astype(np.int64)
    ids = tuple(str(i) for i in range(n))
    return Dataset(ids, feats.astype(np.float64), labels)


def save_dataset_binary(data: Dataset, path: str) -> None:
    n, d = data.embeddings.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        fh.write(struct.pack("<II", n, d))
        fh.write(data.embeddings.astype("<f4").tobytes())
        if data.ground_truth is not None:
            fh.write(data.ground_truth.astype("<i4").tobytes())


def write_assignments(path: str, ids: tuple[str, ...], labels: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,cluster\n")
        for sample_id, cluster in zip(ids, labels):
            fh.write(f"{sample_id},{int(cluster)}\n")


def read_assignments(path: str) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "cluster"]:
            raise ValueError(f"{path}: expected 'id,cluster' header")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected two fields")
            out[row[0]] = int(row[1])
    return out
