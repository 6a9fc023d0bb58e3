"""CSV trajectory files.

Format: ',' separator, '.' decimal, LF line endings, one header row, values
printed with 17 significant digits so doubles round-trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .integrate import FullTrajectory, ReducedTrajectory


def reduced_header(n: int, m: int) -> list[str]:
    return (["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)]
            + [f"w{a + 1}" for a in range(m)])


def full_header(n: int, m: int, k: int) -> list[str]:
    return reduced_header(n, m) + [f"g_{i + 1}{j + 1}" for i in range(k) for j in range(k)]


def _write(path, header, table):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join("%.17g" % val for val in row) + "\n")


def write_reduced_csv(path, traj: ReducedTrajectory) -> None:
    n, m = traj.x.shape[1], traj.w.shape[1]
    _write(path, reduced_header(n, m), np.column_stack([traj.t, traj.x, traj.v, traj.w]))


def write_full_csv(path, traj: FullTrajectory) -> None:
    n, m, k = traj.x.shape[1], traj.w.shape[1], traj.g.shape[1]
    table = np.column_stack([traj.t, traj.x, traj.v, traj.w, traj.g.reshape(len(traj.t), -1)])
    _write(path, full_header(n, m, k), table)


def _read(path, header):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"trajectory file not found: {path}")
    with open(path, encoding="ascii") as fh:
        first = fh.readline().rstrip("\n").split(",")
    if first != header:
        raise InputError(f"{path}: header {first} does not match expected {header}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: malformed numeric data ({exc})") from None
    if data.shape[1] != len(header) or len(data) < 2:
        raise InputError(f"{path}: expected at least 2 rows of {len(header)} columns")
    return data


def read_reduced_csv(path, n: int, m: int) -> ReducedTrajectory:
    d = _read(path, reduced_header(n, m))
    return ReducedTrajectory(d[:, 0], d[:, 1:1 + n], d[:, 1 + n:1 + 2 * n],
                             d[:, 1 + 2 * n:1 + 2 * n + m])


def read_full_csv(path, n: int, m: int, k: int) -> FullTrajectory:
    d = _read(path, full_header(n, m, k))
    o = 1 + 2 * n + m
    return FullTrajectory(d[:, 0], d[:, 1:1 + n], d[:, 1 + n:1 + 2 * n], d[:, 1 + 2 * n:o],
                          d[:, o:].reshape(len(d), k, k))


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".diagnostics.json")
