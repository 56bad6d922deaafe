"""Uniform box grids and grid functions.

The spacing is the same on every axis (validated at construction). Values are
stored in C order on the full node set, boundary included; helpers provide
flat indexing, boundary masks, multilinear interpolation and CSV dumps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    lo: tuple
    hi: tuple
    shape: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        shape = tuple(int(v) for v in self.shape)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)
        if not (len(lo) == len(hi) == len(shape)):
            raise ValueError("lo, hi and shape must agree in length")
        if any(s < 3 for s in shape):
            raise ValueError("need at least 3 nodes per axis")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("box must have positive extent on every axis")
        steps = [(h - l) / (s - 1) for l, h, s in zip(lo, hi, shape)]
        if max(steps) - min(steps) > 1e-12 * max(steps):
            raise ValueError(f"spacing must be uniform across axes, got {steps}")
        object.__setattr__(self, "_h", steps[0])

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> float:
        return self._h

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, k: int) -> np.ndarray:
        return self.lo[k] + self.h * np.arange(self.shape[k])

    def coords(self) -> np.ndarray:
        """All node coordinates, shape (num_nodes, n), C order."""
        axes = [self.axis_coords(k) for k in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.n):
            sl = [slice(None)] * self.n
            sl[k] = 0
            mask[tuple(sl)] = True
            sl[k] = self.shape[k] - 1
            mask[tuple(sl)] = True
        return mask.ravel()

    def interior_indices(self) -> np.ndarray:
        return np.nonzero(~self.boundary_mask())[0]

    def node_coords(self, flat_index: int) -> np.ndarray:
        idx = np.unravel_index(int(flat_index), self.shape)
        return np.array([self.lo[k] + self.h * idx[k] for k in range(self.n)])


@dataclass
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            if self.values.size == self.grid.num_nodes:
                self.values = self.values.reshape(self.grid.shape)
            else:
                raise ValueError(
                    f"values shape {self.values.shape} does not match grid {self.grid.shape}"
                )

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()


def from_callable(grid: Grid, fn: Callable[[np.ndarray], float]) -> GridFunction:
    pts = grid.coords()
    vals = np.array([fn(p) for p in pts])
    return GridFunction(grid, vals.reshape(grid.shape))


def multilinear_weights(grid: Grid, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interpolation stencil for points inside the closed box.

    Returns (idx, w) of shape (K, 2^n): flat corner indices and nonnegative
    weights summing to one. Fractional offsets within 1e-9 of a node snap onto
    it so on-grid evaluation stays exact.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = grid.n
    lo = np.array(grid.lo)
    hi = np.array(grid.hi)
    eps = 1e-9 * grid.h
    if np.any(pts < lo - eps) or np.any(pts > hi + eps):
        raise ValueError("interpolation point outside the grid box")
    t = (pts - lo) / grid.h
    base = np.floor(t).astype(np.int64)
    base = np.clip(base, 0, np.array(grid.shape) - 2)
    frac = t - base
    frac = np.clip(frac, 0.0, 1.0)
    frac[frac < 1e-9] = 0.0
    frac[frac > 1.0 - 1e-9] = 1.0
    k_count = pts.shape[0]
    corners = 2**n
    idx = np.empty((k_count, corners), dtype=np.int64)
    w = np.empty((k_count, corners))
    strides = np.array([int(np.prod(grid.shape[k + 1 :])) for k in range(n)], dtype=np.int64)
    base_flat = base @ strides
    for c in range(corners):
        bits = np.array([(c >> k) & 1 for k in range(n)], dtype=np.int64)
        idx[:, c] = base_flat + bits @ strides
        w[:, c] = np.prod(np.where(bits, frac, 1.0 - frac), axis=1)
    return idx, w


def interpolate(gf: GridFunction, pts: np.ndarray) -> np.ndarray:
    idx, w = multilinear_weights(gf.grid, pts)
    return (gf.flat[idx] * w).sum(axis=1)


def value_at(gf: GridFunction, point) -> float:
    return float(interpolate(gf, np.asarray(point, dtype=float)[None, :])[0])


def to_csv(gf: GridFunction, path) -> None:
    """One row per node: coordinates then value; header x1..xn,value."""
    pts = gf.grid.coords()
    vals = gf.flat
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{k + 1}" for k in range(gf.grid.n)] + ["value"])
        for p, v in zip(pts, vals):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])
