"""Exact enumeration and counting of lattice points on spheres in Z^d."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError, ResourceError

DEFAULT_POINT_CAP = 1 << 26


@dataclass(frozen=True)
class SphereShell:
    """All integer solutions of m_1^2 + ... + m_d^2 = radius_sq.

    points is a read-only (count, dim) int64 array in ascending lexicographic
    order; the count always equals the independent convolution count.
    """

    dim: int
    radius_sq: int
    points: np.ndarray
    count: int

    def __post_init__(self):
        self.points.setflags(write=False)


def count_reps(d: int, n: int) -> int:
    """r_d(n): number of ways to write n as an ordered sum of d signed squares.

    Dynamic programming over dimensions: starting from the one-dimensional
    counts (1 at 0, 2 at each positive square) the table for d dimensions is
    built by adding one coordinate at a time.  Exact int64 throughout, and
    fully independent of the enumerator, which is what makes it an oracle.
    """
    if d < 1:
        raise ParameterError("count_reps requires d >= 1")
    if n < 0:
        raise ParameterError("count_reps requires n >= 0")
    squares = [s * s for s in range(1, math.isqrt(n) + 1)]
    table = np.zeros(n + 1, dtype=np.int64)
    table[0] = 1
    for sq in squares:
        table[sq] = 2
    for _ in range(d - 1):
        nxt = table.copy()
        for sq in squares:
            nxt[sq:] += 2 * table[: n + 1 - sq]
        table = nxt
    return int(table[n])


@lru_cache(maxsize=64)
def _prefix_table(d: int, cap: int) -> tuple[np.ndarray, np.ndarray]:
    """All (d)-tuples with squared norm <= cap, lex ascending, plus norms."""
    coords = np.zeros((1, 0), dtype=np.int64)
    norms = np.zeros(1, dtype=np.int64)
    for _ in range(d):
        rem = cap - norms
        half = np.floor(np.sqrt(rem.astype(np.float64))).astype(np.int64)
        # float sqrt can be off by one near perfect squares; correct exactly
        half += ((half + 1) ** 2 <= rem).astype(np.int64)
        half -= (half**2 > rem).astype(np.int64)
        counts = 2 * half + 1
        offsets = np.concatenate(([0], np.cumsum(counts)))
        total = int(offsets[-1])
        rows = np.repeat(np.arange(coords.shape[0]), counts)
        vals = np.arange(total, dtype=np.int64) - offsets[rows] - half[rows]
        coords = np.concatenate([coords[rows], vals[:, None]], axis=1)
        norms = norms[rows] + vals * vals
    return coords, norms


def enumerate_sphere(d: int, n: int, max_points: int = DEFAULT_POINT_CAP) -> SphereShell:
    """Every m in Z^d with |m|^2 = n, in ascending lexicographic order.

    Descends coordinate by coordinate with the pruning bound m_i^2 <= n
    (vectorized per level); the final coordinate is forced to +-sqrt of the
    remainder.  The resulting count is cross-checked against count_reps.
    """
    if d < 1 or n < 0:
        raise ParameterError("enumerate_sphere requires d >= 1, n >= 0")
    expected = count_reps(d, n)
    if expected > max_points:
        raise ResourceError(
            f"shell (d={d}, n={n}) has {expected} points, above cap {max_points}"
        )
    radius = math.isqrt(n)
    if d == 1:
        if radius * radius == n:
            pts = [[-radius], [radius]] if radius else [[0]]
        else:
            pts = []
        points = np.array(pts, dtype=np.int64).reshape(len(pts), 1)
    else:
        # last coordinate solved exactly on top of a (d-1)-dim prefix table;
        # the table cap is rounded up to a power of two so nearby n share it
        table_cap = 1 << max(n.bit_length(), 1)
        prefix_budget = 4.0 * (2 * math.isqrt(table_cap) + 1) ** (d - 1)
        if prefix_budget > 64 * max_points:
            raise ResourceError(
                f"prefix table for (d={d}, n={n}) too large; count is {expected}"
            )
        coords, norms = _prefix_table(d - 1, table_cap)
        rem = n - norms
        keep = rem >= 0
        coords, rem = coords[keep], rem[keep]
        root = np.floor(np.sqrt(rem.astype(np.float64))).astype(np.int64)
        root += ((root + 1) ** 2 <= rem).astype(np.int64)
        root -= (root**2 > rem).astype(np.int64)
        square = root * root == rem
        coords, root = coords[square], root[square]
        # each prefix expands to (-root, +root), or a single 0 row; expansion
        # keeps lex order because -root < +root
        counts = 1 + (root > 0).astype(np.int64)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        rows = np.repeat(np.arange(coords.shape[0]), counts)
        within = np.arange(int(offsets[-1]), dtype=np.int64) - offsets[rows]
        last = (2 * within - 1) * root[rows]
        points = np.concatenate([coords[rows], last[:, None]], axis=1)
    if points.shape[0] != expected:
        raise AssertionError(
            f"enumeration found {points.shape[0]} points, oracle says {expected}"
        )
    return SphereShell(dim=d, radius_sq=n, points=points, count=expected)


def shell_to_csv(shell: SphereShell, path) -> None:
    """One point per row, columns m_1..m_d."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"m_{i+1}" for i in range(shell.dim)])
        for row in shell.points:
            writer.writerow([int(v) for v in row])
