"""Readers and writers for the CSV/JSON run artifacts.

Floats are rendered with repr (shortest round-trip form), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def _fmt(x: float) -> str:
    return repr(float(x))


def inverse_id_map(id_map: dict[int, int]) -> list[int]:
    inv = [0] * len(id_map)
    for orig, dense in id_map.items():
        inv[dense] = orig
    return inv


def write_embeddings(path, embeddings: np.ndarray, original_ids: list[int]):
    d = embeddings.shape[1]
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("id," + ",".join(f"x_{i}" for i in range(d)) + "\n")
        for row, orig in zip(embeddings, original_ids):
            fh.write(str(orig) + "," + ",".join(_fmt(x) for x in row) + "\n")


def write_centers(path, centers: np.ndarray):
    d = centers.shape[1]
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("cluster," + ",".join(f"x_{i}" for i in range(d)) + "\n")
        for c, row in enumerate(centers):
            fh.write(str(c) + "," + ",".join(_fmt(x) for x in row) + "\n")


def write_assignment(path, labels: np.ndarray, original_ids: list[int]):
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("id,cluster\n")
        for orig, label in zip(original_ids, labels):
            fh.write(f"{orig},{int(label)}\n")


def write_training_log(path, records: list[dict]):
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("epoch,loss,gamma,alpha,seconds\n")
        for r in records:
            fh.write(f"{r['epoch']},{_fmt(r['loss'])},{_fmt(r['gamma'])},"
                     f"{_fmt(r['alpha'])},{_fmt(r['seconds'])}\n")


def write_json(path, payload: dict):
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_id_map(path, id_map: dict[int, int]):
    write_json(path, {str(k): v for k, v in id_map.items()})


def read_matrix_csv(path) -> tuple[list[int], np.ndarray]:
    """Read a CSV whose first column is an integer key and the rest are
    float coordinates; returns (keys, matrix)."""
    keys, rows = [], []
    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline()
        width = len(header.strip().split(",")) - 1
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != width + 1:
                raise ValueError(f"{path}:{lineno}: expected {width + 1} columns")
            keys.append(int(parts[0]))
            rows.append([float(x) for x in parts[1:]])
    return keys, np.asarray(rows, dtype=np.float64)
