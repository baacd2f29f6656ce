"""Rectangular domains, box partitions and their triangulation.

A domain is a finite box S = [a_1, b_1] x ... x [a_m, b_m].  A grid carries
strictly increasing node coordinates per axis (first node = a_i, last = b_i)
and induces the box partition into cells [l^k, u^k], the parity-signed cell
corners used by the signed corner-sum operator, and (for m = 2) the
triangulation obtained by cutting every cell along its main diagonal
(lower-left corner to upper-right corner).

Everything here is immutable after construction and safe to share across
threads.  Grids serialize to a plain JSON object ``{dim, lower, upper, axes}``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Domain",
    "Grid",
    "Rect",
    "build_grid",
    "refine",
    "mesh_size",
    "cells",
    "locate",
]


@dataclass(frozen=True)
class Domain:
    """A finite rectangular domain S = [lower_1, upper_1] x ... x [lower_m, upper_m]."""

    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower: Sequence[float], upper: Sequence[float]) -> None:
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.asarray(upper, dtype=float).reshape(-1)
        if lo.size == 0 or lo.shape != hi.shape:
            raise ValueError(
                f"lower and upper must be equal-length nonempty vectors, "
                f"got shapes {lo.shape} and {hi.shape}"
            )
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("domain bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError(f"domain needs lower < upper on every axis, got {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    def diameter(self) -> float:
        """Diameter of S under the max-norm."""
        return float(np.max(self.upper - self.lower))

    def contains(self, x: np.ndarray, *, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            return False
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Domain):
            return NotImplemented
        return (
            self.lower.shape == other.lower.shape
            and bool(np.all(self.lower == other.lower))
            and bool(np.all(self.upper == other.upper))
        )

    def __hash__(self) -> int:
        return hash((self.lower.tobytes(), self.upper.tobytes()))


def _vertex_signs(dim: int) -> np.ndarray:
    """Signs of the 2^m corners of a box, bit i of the corner index selecting
    the upper bound on axis i.  A corner's sign is +1 exactly when the number
    of coordinates sitting at a lower bound is even."""
    idx = np.arange(2 ** dim)
    n_lower = dim - np.array([bin(i).count("1") for i in idx])
    return np.where(n_lower % 2 == 0, 1, -1).astype(int)


@dataclass(frozen=True)
class Rect:
    """One closed box [lower, upper] with parity-signed corners.

    ``vertices`` has shape (2^m, m): row j is the corner whose axis-i
    coordinate is ``upper[i]`` when bit i of j is set, else ``lower[i]``.
    ``signs[j]`` is +1 when the count of coordinates of row j equal to a lower
    bound is even, -1 otherwise; the signs always sum to zero.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower: Sequence[float], upper: Sequence[float]) -> None:
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.asarray(upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("Rect needs equal-length lower/upper vectors")
        if not np.all(lo < hi):
            raise ValueError(f"Rect needs lower < upper componentwise, got {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        self.lower.setflags(write=False)
        self.upper.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def vertices(self) -> np.ndarray:
        m = self.dim
        idx = np.arange(2 ** m)
        take_upper = (idx[:, None] >> np.arange(m)[None, :]) & 1
        return np.where(take_upper == 1, self.upper[None, :], self.lower[None, :])

    @property
    def signs(self) -> np.ndarray:
        return _vertex_signs(self.dim)

    def centroid(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


class Grid:
    """Node coordinates per axis over a rectangular domain.

    Attributes:
        domain: the underlying box.
        axes: tuple of strictly increasing per-axis node arrays; axes[i][0] and
            axes[i][-1] equal the domain bounds.
        shape: nodes per axis.
        cell_counts: cells per axis (shape minus one).
    """

    __slots__ = ("domain", "axes", "shape", "cell_counts", "_hash")

    def __init__(self, domain: Domain, axes: Sequence[Sequence[float]]) -> None:
        if len(axes) != domain.dim:
            raise ValueError(f"expected {domain.dim} axes, got {len(axes)}")
        ax_arrays = []
        for i, a in enumerate(axes):
            arr = np.asarray(a, dtype=float).reshape(-1)
            if arr.size < 2:
                raise ValueError(f"axis {i} needs at least 2 nodes, got {arr.size}")
            if not np.all(np.diff(arr) > 0):
                raise ValueError(f"axis {i} coordinates must be strictly increasing")
            if arr[0] != domain.lower[i] or arr[-1] != domain.upper[i]:
                raise ValueError(
                    f"axis {i} must span [{domain.lower[i]}, {domain.upper[i]}], "
                    f"got [{arr[0]}, {arr[-1]}]"
                )
            arr.setflags(write=False)
            ax_arrays.append(arr)
        self.domain = domain
        self.axes = tuple(ax_arrays)
        self.shape = tuple(int(a.size) for a in self.axes)
        self.cell_counts = tuple(n - 1 for n in self.shape)
        self._hash: str | None = None

    # -- basic geometry -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_counts))

    def is_uniform(self, *, rtol: float = 1e-12) -> bool:
        """True when every axis has (numerically) constant spacing."""
        for a in self.axes:
            d = np.diff(a)
            if np.max(d) - np.min(d) > rtol * max(np.max(np.abs(a)), 1.0):
                return False
        return True

    def spacing(self) -> np.ndarray:
        """Per-axis spacing for uniform grids (mean spacing otherwise)."""
        return np.array([float(np.mean(np.diff(a))) for a in self.axes])

    def node_lattice(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, m), C-order over the lattice."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def node_index(self, multi: Sequence[int]) -> int:
        """Flat C-order index of a node from its per-axis indices."""
        return int(np.ravel_multi_index(tuple(int(i) for i in multi), self.shape))

    def cell_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) corner arrays of all cells, each (n_cells, m),
        enumerated lexicographically (C-order over the cell lattice)."""
        los = np.meshgrid(*[a[:-1] for a in self.axes], indexing="ij")
        his = np.meshgrid(*[a[1:] for a in self.axes], indexing="ij")
        lower = np.stack([m.ravel() for m in los], axis=-1)
        upper = np.stack([m.ravel() for m in his], axis=-1)
        return lower, upper

    # -- triangulation (m == 2) ----------------------------------------------

    def triangles(self) -> np.ndarray:
        """Triangle -> flat node index table, shape (2 * n_cells, 3).

        Each cell contributes the triangle below its main diagonal
        (lower-left, lower-right, upper-right) followed by the one above it
        (lower-left, upper-left, upper-right).  Only defined for m = 2.
        """
        if self.dim != 2:
            raise ValueError("triangulation is defined for 2-d grids only")
        n1, n2 = self.shape
        i = np.arange(n1 - 1)[:, None]
        j = np.arange(n2 - 1)[None, :]
        ll = (i * n2 + j).ravel()
        lr = ((i + 1) * n2 + j).ravel()
        ul = (i * n2 + (j + 1)).ravel()
        ur = ((i + 1) * n2 + (j + 1)).ravel()
        lower_tri = np.stack([ll, lr, ur], axis=1)
        upper_tri = np.stack([ll, ul, ur], axis=1)
        out = np.empty((2 * ll.size, 3), dtype=np.int64)
        out[0::2] = lower_tri
        out[1::2] = upper_tri
        return out

    # -- serialization -------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "dim": self.dim,
            "lower": [float(v) for v in self.domain.lower],
            "upper": [float(v) for v in self.domain.upper],
            "axes": [[float(v) for v in a] for a in self.axes],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Grid":
        try:
            dim = int(obj["dim"])
            lower = obj["lower"]
            upper = obj["upper"]
            axes = obj["axes"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed grid object: {exc}") from exc
        if len(lower) != dim or len(axes) != dim:
            raise ValueError("grid object dim does not match its arrays")
        return cls(Domain(lower, upper), axes)

    def content_hash(self) -> str:
        """Stable hex digest of the exact axis coordinates."""
        if self._hash is None:
            payload = json.dumps(
                [[repr(float(v)) for v in a] for a in self.axes],
                separators=(",", ":"),
            ).encode()
            self._hash = hashlib.sha256(payload).hexdigest()
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.domain == other.domain and all(
            a.size == b.size and bool(np.all(a == b))
            for a, b in zip(self.axes, other.axes)
        )

    def __repr__(self) -> str:
        return f"Grid(dim={self.dim}, shape={self.shape})"


def build_grid(domain: Domain, nodes_per_axis: int | Sequence[int]) -> Grid:
    """Uniform grid with the given node count per axis.

    ``nodes_per_axis`` may be a single integer (applied to every axis) or one
    integer per axis; each must be >= 2.  The resulting cell count per axis is
    nodes - 1.
    """
    if np.isscalar(nodes_per_axis):
        counts = [int(nodes_per_axis)] * domain.dim
    else:
        counts = [int(n) for n in nodes_per_axis]
        if len(counts) != domain.dim:
            raise ValueError(
                f"expected {domain.dim} node counts, got {len(counts)}"
            )
    for n in counts:
        if n < 2:
            raise ValueError(f"every axis needs at least 2 nodes, got {n}")
    axes = [
        np.linspace(domain.lower[i], domain.upper[i], counts[i])
        for i in range(domain.dim)
    ]
    # linspace guarantees exact endpoints
    return Grid(domain, axes)


def refine(grid: Grid, factor: int) -> Grid:
    """Split every cell into ``factor`` equal parts per axis.

    The input node set is a subset of the output node set, and the mesh size
    divides by ``factor`` exactly (up to floating-point rounding of interior
    points).
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"refinement factor must be >= 1, got {factor}")
    if factor == 1:
        return Grid(grid.domain, [a.copy() for a in grid.axes])
    new_axes = []
    for a in grid.axes:
        pieces = [a[:1]]
        for left, right in zip(a[:-1], a[1:]):
            # keep original nodes bit-exact; only interior points are new
            interior = left + (right - left) * np.arange(1, factor) / factor
            pieces.append(interior)
            pieces.append(np.array([right]))
        new_axes.append(np.concatenate(pieces))
    return Grid(grid.domain, new_axes)


def mesh_size(grid: Grid) -> float:
    """Largest cell edge over all cells and axes."""
    return float(max(np.max(np.diff(a)) for a in grid.axes))


def cells(grid: Grid) -> Iterator[Rect]:
    """Lexicographic enumeration of the partition cells as signed Rects."""
    lower, upper = grid.cell_bounds()
    for k in range(lower.shape[0]):
        yield Rect(lower[k], upper[k])


def locate(grid: Grid, x: Sequence[float]) -> tuple[int, np.ndarray]:
    """Cell containing x, with normalized local coordinates in [0, 1]^m.

    On shared faces the tie goes to the cell with the largest lower corner
    (so a node's local coordinate is 0 wherever possible); the last cell is
    used at the upper domain boundary.  Points outside S raise ValueError.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != grid.dim:
        raise ValueError(f"point has {x.size} coordinates, grid has {grid.dim}")
    if not grid.domain.contains(x):
        raise ValueError(f"point {x} is outside the domain")
    idx = np.empty(grid.dim, dtype=np.int64)
    loc = np.empty(grid.dim, dtype=float)
    for i, a in enumerate(grid.axes):
        k = int(np.searchsorted(a, x[i], side="right")) - 1
        k = min(max(k, 0), a.size - 2)
        idx[i] = k
        loc[i] = (x[i] - a[k]) / (a[k + 1] - a[k])
    flat = int(np.ravel_multi_index(tuple(idx), grid.cell_counts))
    return flat, loc


def locate_batch(grid: Grid, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`locate` for an (N, m) array of in-domain points.

    No domain check is performed here; callers must pre-clip.  Returns
    per-axis cell indices (N, m) and local coordinates (N, m).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    n, m = points.shape
    idx = np.empty((n, m), dtype=np.int64)
    loc = np.empty((n, m), dtype=float)
    for i, a in enumerate(grid.axes):
        k = np.searchsorted(a, points[:, i], side="right") - 1
        np.clip(k, 0, a.size - 2, out=k)
        idx[:, i] = k
        loc[:, i] = (points[:, i] - a[k]) / (a[k + 1] - a[k])
    return idx, loc
