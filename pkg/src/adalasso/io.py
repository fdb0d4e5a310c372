"""Plain numeric CSV reading and writing (one row per observation)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def read_matrix(path, header: bool = False) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, dtype=float, ndmin=2)
    return arr


def read_vector(path, header: bool = False) -> np.ndarray:
    return read_matrix(path, header=header).ravel()


def write_matrix(path, a) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    # 17 significant digits round-trip any IEEE-754 double
    np.savetxt(Path(path), a, delimiter=",", fmt="%.17g")
