"""Signal containers on Z^d / (Z/NZ)^d and the physical-side operators:
sphere averages, dyadic maximal functions, the box maximal operator, and the
frequency-side telescoping decomposition.

Sparse signals model finitely supported functions on the infinite lattice;
periodic signals live on a finite grid where frequency localization can be
made exact (a finitely supported nonzero signal has real-analytic transform
and cannot vanish on an open frequency set, so all frequency-exact
experiments use the periodic model).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError, ResourceError
from .lattice import SphereShell, count_reps, enumerate_sphere
from .numtheory import tower_value
from .spectral import multiplier_on_grid

# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------


class SparseSignal:
    """Finitely supported function on Z^d as a point -> value mapping.

    Exact zeros are dropped so the support is literally the key set.
    """

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries=None):
        if dim < 1:
            raise ParameterError("SparseSignal needs dim >= 1")
        self.dim = dim
        self.entries = {}
        if entries:
            for point, value in dict(entries).items():
                pt = tuple(int(c) for c in point)
                if len(pt) != dim:
                    raise ParameterError("entry dimension mismatch")
                if value != 0:
                    self.entries[pt] = value

    @classmethod
    def delta(cls, dim: int, point=None) -> "SparseSignal":
        point = tuple([0] * dim) if point is None else tuple(point)
        return cls(dim, {point: 1.0})

    def get(self, point) -> float:
        return self.entries.get(tuple(point), 0.0)

    def shift(self, v) -> "SparseSignal":
        v = tuple(int(c) for c in v)
        if len(v) != self.dim:
            raise ParameterError("shift dimension mismatch")
        return SparseSignal(
            self.dim,
            {tuple(p + w for p, w in zip(pt, v)): val for pt, val in self.entries.items()},
        )

    def scale(self, c) -> "SparseSignal":
        return SparseSignal(self.dim, {p: c * v for p, v in self.entries.items()})

    def __add__(self, other: "SparseSignal") -> "SparseSignal":
        if other.dim != self.dim:
            raise ParameterError("dimension mismatch")
        out = dict(self.entries)
        for p, v in other.entries.items():
            out[p] = out.get(p, 0.0) + v
        return SparseSignal(self.dim, out)

    def __sub__(self, other: "SparseSignal") -> "SparseSignal":
        return self + other.scale(-1)

    def __eq__(self, other):
        return (
            isinstance(other, SparseSignal)
            and self.dim == other.dim
            and self.entries == other.entries
        )

    def norm(self, p) -> float:
        vals = np.array([abs(v) for v in self.entries.values()], dtype=np.float64)
        if vals.size == 0:
            return 0.0
        if p == 1:
            return float(vals.sum())
        if p == 2:
            return float(np.sqrt((vals**2).sum()))
        if p in ("inf", math.inf):
            return float(vals.max())
        raise ParameterError("only p in {1, 2, inf} supported")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"n_{i+1}" for i in range(self.dim)] + ["value"])
            for pt in sorted(self.entries):
                writer.writerow(list(pt) + [repr(float(self.entries[pt]))])

    @classmethod
    def from_csv(cls, path) -> "SparseSignal":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        dim = len(rows[0]) - 1
        entries = {tuple(map(int, r[:dim])): float(r[dim]) for r in rows[1:]}
        return cls(dim, entries)


class PeriodicSignal:
    """Dense function on (Z/NZ)^d; values is a (N,)*d float or complex array."""

    __slots__ = ("dim", "side", "values")

    def __init__(self, values: np.ndarray):
        values = np.asarray(values)
        if values.ndim < 1 or any(s != values.shape[0] for s in values.shape):
            raise ParameterError("periodic signal needs a hyper-cubic array")
        self.dim = values.ndim
        self.side = values.shape[0]
        self.values = values

    @classmethod
    def zeros(cls, dim: int, side: int) -> "PeriodicSignal":
        return cls(np.zeros((side,) * dim))

    @classmethod
    def delta(cls, dim: int, side: int) -> "PeriodicSignal":
        v = np.zeros((side,) * dim)
        v[(0,) * dim] = 1.0
        return cls(v)

    def copy_with(self, values: np.ndarray) -> "PeriodicSignal":
        return PeriodicSignal(values)

    def norm2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def fft(self) -> np.ndarray:
        """Grid transform matching the Z^d convention e^{-2 pi i n.nu/N}."""
        return np.fft.fftn(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["d", "N"])
            writer.writerow([self.dim, self.side])
            flat = np.asarray(self.values, dtype=np.float64).ravel(order="C")
            for v in flat:
                writer.writerow([repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "PeriodicSignal":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        d, n = int(rows[1][0]), int(rows[1][1])
        flat = np.array([float(r[0]) for r in rows[2:]], dtype=np.float64)
        return cls(flat.reshape((n,) * d))


# ---------------------------------------------------------------------------
# Sphere averages
# ---------------------------------------------------------------------------

_SHELL_CACHE: dict[tuple[int, int], SphereShell] = {}


def _shell(d: int, n: int) -> SphereShell:
    key = (d, n)
    if key not in _SHELL_CACHE:
        shell = enumerate_sphere(d, n)
        if shell.count <= 200_000:
            _SHELL_CACHE[key] = shell
        return shell
    return _SHELL_CACHE[key]


def spherical_average(f, shell: SphereShell):
    """A f(n) = count^{-1} sum over shell points m of f(n - m).

    Sparse output support sits inside support(f) + shell; periodic input is
    convolved circularly (FFT above a small crossover) and requires the shell
    to fit without wrap: 4 * radius_sq <= (N - 1)^2.
    """
    if shell.count == 0:
        raise ParameterError("spherical average over an empty shell")
    if f.dim != shell.dim:
        raise ParameterError("dimension mismatch between signal and shell")
    inv = 1.0 / shell.count
    if isinstance(f, SparseSignal):
        out: dict[tuple, float] = {}
        pts = [tuple(int(c) for c in row) for row in shell.points]
        for s, val in f.entries.items():
            w = val * inv
            for m in pts:
                key = tuple(a + b for a, b in zip(s, m))
                out[key] = out.get(key, 0.0) + w
        return SparseSignal(f.dim, out)
    if isinstance(f, PeriodicSignal):
        n_side = f.side
        if 4 * shell.radius_sq > (n_side - 1) ** 2:
            raise ParameterError(
                f"shell radius^2={shell.radius_sq} does not fit in side {n_side}"
            )
        if shell.count < 8:
            out = np.zeros_like(np.asarray(f.values, dtype=np.complex128))
            for m in shell.points:
                out += np.roll(f.values, shift=tuple(int(c) for c in m), axis=tuple(range(f.dim)))
            res = out * inv
        else:
            kern = np.zeros((n_side,) * f.dim)
            idx = tuple((shell.points[:, i] % n_side) for i in range(f.dim))
            np.add.at(kern, idx, 1.0)
            res = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(kern)) * inv
        if not np.iscomplexobj(f.values):
            res = res.real
        return PeriodicSignal(res)
    raise ParameterError(f"unsupported signal type {type(f)!r}")


def _lambda_sq_range(k: int) -> range:
    return range(4**k, 4 ** (k + 1) + 1)


def dyadic_max(f, k: int):
    """Pointwise sup of |A f| over all integer radius^2 in [4^k, 4^{k+1}].

    Empty shells are skipped (for d <= 3 many radii have no lattice points);
    periodic input must fit the largest shell: 2 * 2^{k+1} + 1 <= N.
    """
    if k < 0:
        raise ParameterError("dyadic_max requires k >= 0")
    if isinstance(f, PeriodicSignal) and 2 * 2 ** (k + 1) + 1 > f.side:
        raise ParameterError(
            f"grid side {f.side} too small for dyadic block k={k} "
            f"(needs >= {2 * 2 ** (k + 1) + 1})"
        )
    if isinstance(f, SparseSignal):
        best: dict[tuple, float] = {}
        for s in _lambda_sq_range(k):
            if count_reps(f.dim, s) == 0:
                continue
            av = spherical_average(f, _shell(f.dim, s))
            for p, v in av.entries.items():
                a = abs(v)
                if a > best.get(p, 0.0):
                    best[p] = a
        return SparseSignal(f.dim, best)
    best_arr = np.zeros((f.side,) * f.dim)
    for s in _lambda_sq_range(k):
        if count_reps(f.dim, s) == 0:
            continue
        av = spherical_average(f, _shell(f.dim, s))
        np.maximum(best_arr, np.abs(av.values), out=best_arr)
    return PeriodicSignal(best_arr)


def star_max(f, k_max: int):
    """Truncated maximal function: max over dyadic blocks 0..k_max."""
    if k_max < 0:
        raise ParameterError("star_max requires k_max >= 0")
    out = None
    for k in range(k_max + 1):
        block = dyadic_max(f, k)
        if out is None:
            out = block
        elif isinstance(f, SparseSignal):
            merged = dict(out.entries)
            for p, v in block.entries.items():
                if v > merged.get(p, 0.0):
                    merged[p] = v
            out = SparseSignal(f.dim, merged)
        else:
            out = PeriodicSignal(np.maximum(out.values, block.values))
    return out


# annulus tables for point-sampled dyadic maxima ------------------------------


@lru_cache(maxsize=16)
def _annulus(d: int, k: int):
    """All m with |m|^2 in [4^k, 4^{k+1}], sorted by |m|^2, with group info."""
    r = 2 ** (k + 1)
    axes = [np.arange(-r, r + 1, dtype=np.int64)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    norms = (pts.astype(np.int64) ** 2).sum(axis=1)
    keep = (norms >= 4**k) & (norms <= 4 ** (k + 1))
    pts, norms = pts[keep], norms[keep]
    order = np.argsort(norms, kind="stable")
    pts, norms = pts[order], norms[order]
    uniq, starts, counts = np.unique(norms, return_index=True, return_counts=True)
    return pts, starts, counts


def dyadic_max_at(f: PeriodicSignal, k: int, points: np.ndarray) -> np.ndarray:
    """dyadic_max evaluated only at the given grid points.

    Same values as dyadic_max(f, k) restricted to those points, but computed
    by gathering over the lattice annulus rather than per-shell transforms,
    which is what makes large k affordable.
    """
    if 2 * 2 ** (k + 1) + 1 > f.side:
        raise ParameterError("grid too small for dyadic block")
    pts, starts, counts = _annulus(f.dim, k)
    boundaries = starts  # reduceat segments, one per nonempty shell
    vals = np.asarray(f.values)
    n_side = f.side
    out = np.empty(points.shape[0], dtype=np.float64)
    flat = vals.reshape(-1)
    chunk = max(1, int(1.2e7) // max(len(pts), 1))
    inv_counts = 1.0 / counts
    points = np.asarray(points, dtype=np.int64)
    for lo in range(0, points.shape[0], chunk):
        sub = points[lo : lo + chunk]
        # flat index of (n - m) mod N, accumulated axis by axis to avoid a
        # (chunk, annulus, dim) intermediate
        idx = np.zeros((sub.shape[0], pts.shape[0]), dtype=np.int64)
        for axis in range(f.dim):
            idx *= n_side
            idx += (sub[:, axis, None] - pts[None, :, axis]) % n_side
        sums = np.add.reduceat(flat[idx], boundaries, axis=1)
        mags = np.abs(sums * inv_counts[None, :])
        out[lo : lo + sub.shape[0]] = mags.max(axis=1)
    return out


# ---------------------------------------------------------------------------
# Box (Hardy-Littlewood style) maximal operator
# ---------------------------------------------------------------------------


def _circular_box_sum(values: np.ndarray, w: int) -> np.ndarray:
    """Separable circular sliding-window sum, window [-h, h] with w = 2h+1."""
    out = np.asarray(values, dtype=np.complex128 if np.iscomplexobj(values) else np.float64)
    h = (w - 1) // 2
    for axis in range(out.ndim):
        n = out.shape[axis]
        ext = np.concatenate([out, out.take(range(w - 1), axis=axis)], axis=axis)
        cs = np.cumsum(ext, axis=axis)
        pad_shape = list(cs.shape)
        pad_shape[axis] = 1
        cs = np.concatenate([np.zeros(pad_shape, dtype=cs.dtype), cs], axis=axis)
        upper = cs.take(range(w, w + n), axis=axis)
        lower = cs.take(range(0, n), axis=axis)
        out = upper - lower
        out = np.roll(out, h, axis=axis)
    return out


def hl_max(f, l_max: int):
    """Box maximal operator: max over 1 <= l <= l_max of the normalized
    absolute box sum |sum_{m in [-2^l, 2^l]^d} f(n-m)| / (2*2^l+1)^d.

    The absolute value sits outside the sum, exactly as the operator is used
    downstream.  The window exponent l runs over positive integers; dyadic
    density makes finer choices immaterial up to a bounded factor.
    """
    if l_max < 1:
        raise ParameterError("hl_max requires l_max >= 1")
    if isinstance(f, PeriodicSignal):
        best = np.zeros((f.side,) * f.dim)
        for l in range(1, l_max + 1):
            w = 2 * 2**l + 1
            if w > f.side:
                raise ParameterError(
                    f"box width {w} exceeds grid side {f.side} (l={l})"
                )
            box = _circular_box_sum(f.values, w) / float(w**f.dim)
            np.maximum(best, np.abs(box), out=best)
        return PeriodicSignal(best)
    if isinstance(f, SparseSignal):
        best: dict[tuple, float] = {}
        support = list(f.entries.items())
        for l in range(1, l_max + 1):
            half = 2**l
            w = 2 * half + 1
            if w**f.dim * max(len(support), 1) > 5e7:
                raise ResourceError("sparse box maximal window too large")
            sums: dict[tuple, float] = {}
            offsets = np.stack(
                np.meshgrid(*[np.arange(-half, half + 1)] * f.dim, indexing="ij"),
                axis=-1,
            ).reshape(-1, f.dim)
            for s, val in support:
                for m in offsets:
                    key = tuple(int(a + b) for a, b in zip(s, m))
                    sums[key] = sums.get(key, 0.0) + val
            scale = 1.0 / w**f.dim
            for p, v in sums.items():
                a = abs(v) * scale
                if a > best.get(p, 0.0):
                    best[p] = a
        return SparseSignal(f.dim, best)
    raise ParameterError(f"unsupported signal type {type(f)!r}")


# ---------------------------------------------------------------------------
# Telescoping decomposition
# ---------------------------------------------------------------------------


@dataclass
class DecompositionReport:
    """Pieces of the scale-k telescoping and the reconstruction defect."""

    k: int
    depth_count: int  # J_k = floor(log2 k) - 2
    pieces: list
    piece_norms: list
    reconstruction_error: float


def telescope_decompose(f: PeriodicSignal, k: int) -> DecompositionReport:
    """Split f into [f*P_0, f*(P_1 - P_0), ..., f*(P_J - P_{J-1}), f - f*P_J]
    by frequency-side multiplication with the sampling multipliers at scale k.

    The pieces sum to f identically (telescoping), so the reported
    reconstruction error is pure floating round-off.  Exact grid membership
    needs the depth-J grid to live on the frequency lattice: q_J must divide N.
    """
    if not isinstance(f, PeriodicSignal):
        raise ParameterError("telescope_decompose needs a periodic signal")
    if k < 4:
        raise ParameterError("telescope_decompose requires k >= 4")
    depth = int(math.floor(math.log2(k))) - 2
    q_top = tower_value(depth)
    if f.side % q_top != 0:
        raise ParameterError(
            f"grid side {f.side} must be divisible by q_{depth} = {q_top}"
        )
    spectrum = np.fft.fftn(f.values)
    mults = [multiplier_on_grid(j, k, f.side, f.dim) for j in range(depth + 1)]
    pieces = [PeriodicSignal(np.fft.ifftn(spectrum * mults[0]))]
    for j in range(depth):
        pieces.append(
            PeriodicSignal(np.fft.ifftn(spectrum * (mults[j + 1] - mults[j])))
        )
    top = np.fft.ifftn(spectrum * mults[depth])
    pieces.append(PeriodicSignal(np.asarray(f.values, dtype=np.complex128) - top))
    total = np.zeros_like(pieces[0].values)
    for p in pieces:
        total = total + p.values
    err = float(np.sqrt(np.sum(np.abs(total - f.values) ** 2)))
    return DecompositionReport(
        k=k,
        depth_count=depth,
        pieces=pieces,
        piece_norms=[p.norm2() for p in pieces],
        reconstruction_error=err,
    )
