"""Sparse finite-difference operators over a pixel mask."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .exceptions import InvalidInputError


@dataclass(frozen=True)
class GradientOperators:
    """``dx`` and ``dy`` map the masked height vector to its partials.

    The height vector holds mask pixels in raster order; ``index`` gives each
    pixel's position in it (-1 off the mask).
    """

    dx: sparse.csr_matrix
    dy: sparse.csr_matrix
    mask: np.ndarray
    index: np.ndarray

    @property
    def size(self):
        return self.dx.shape[1]

    @property
    def shape(self):
        return self.mask.shape

    def vectorize(self, raster):
        return np.asarray(raster, dtype=float)[self.mask]

    def rasterize(self, vector, fill=0.0):
        raster = np.full(self.mask.shape, fill, dtype=float)
        raster[self.mask] = vector
        return raster

    def gradient(self, height):
        """Partials of a height raster as two rasters (zero off the mask)."""
        z = self.vectorize(height)
        return self.rasterize(self.dx @ z), self.rasterize(self.dy @ z)


def _gaussian_taps(sigma):
    if sigma <= 0:
        return [(0, 1.0)]
    radius = max(1, int(math.ceil(2 * sigma)))
    return [(k, math.exp(-0.5 * (k / sigma) ** 2)) for k in range(-radius, radius + 1)]


def _shifted(mask, dr, dc):
    """``mask`` sampled at (row + dr, col + dc), False outside the image."""
    out = np.zeros_like(mask)
    h, w = mask.shape
    src = mask[max(dr, 0) : h + min(dr, 0), max(dc, 0) : w + min(dc, 0)]
    out[max(-dr, 0) : h + min(-dr, 0), max(-dc, 0) : w + min(-dc, 0)] = src
    return out


def _column_derivative(mask, index, taps):
    """COO triplets of d/d(column) over ``mask``; ``index`` maps pixels to unknowns."""
    h, w = mask.shape
    has_left = _shifted(mask, 0, -1) & mask
    has_right = _shifted(mask, 0, 1) & mask
    central = has_left & has_right

    rows, cols = np.nonzero(mask)
    own = index[rows, cols]
    is_central = central[rows, cols]
    entries = ([], [], [])

    def add(row_ids, col_ids, values):
        entries[0].append(row_ids)
        entries[1].append(col_ids)
        entries[2].append(values)

    # Central differences, averaged across neighbouring rows whose own central
    # stencil is complete.
    c_rows, c_cols, c_own = rows[is_central], cols[is_central], own[is_central]
    total = np.zeros(c_rows.shape)
    usable = []
    for offset, weight in taps:
        r = c_rows + offset
        ok = (r >= 0) & (r < h)
        ok[ok] = central[r[ok], c_cols[ok]]
        usable.append((r, ok, weight))
        total += weight * ok
    for r, ok, weight in usable:
        share = weight / total[ok]
        add(c_own[ok], index[r[ok], c_cols[ok] + 1], 0.5 * share)
        add(c_own[ok], index[r[ok], c_cols[ok] - 1], -0.5 * share)

    # One-sided fallbacks; pixels with neither neighbour get an empty row.
    forward = ~is_central & has_right[rows, cols]
    add(own[forward], index[rows[forward], cols[forward] + 1], np.ones(forward.sum()))
    add(own[forward], own[forward], -np.ones(forward.sum()))
    backward = ~is_central & ~has_right[rows, cols] & has_left[rows, cols]
    add(own[backward], own[backward], np.ones(backward.sum()))
    add(own[backward], index[rows[backward], cols[backward] - 1], -np.ones(backward.sum()))

    return tuple(np.concatenate(part) for part in entries)


def build_gradient_operators(mask, smoothing_sigma=0.5):
    """Gaussian-smoothed central differences with one-sided fallbacks at the mask edge."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D, got shape {mask.shape}")
    count = int(mask.sum())
    if count < 2:
        raise InvalidInputError("gradient operators need a mask of at least two pixels")

    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(count)
    taps = _gaussian_taps(smoothing_sigma)

    r, c, v = _column_derivative(mask, index, taps)
    dx = sparse.csr_matrix((v, (r, c)), shape=(count, count))
    r, c, v = _column_derivative(mask.T, index.T, taps)
    dy = sparse.csr_matrix((v, (r, c)), shape=(count, count))
    return GradientOperators(dx=dx, dy=dy, mask=mask, index=index)


def laplacian_matrix(ops):
    """Graph Laplacian over 4-neighbours inside the mask.

    Interior rows are the 5-point stencil; edge rows use the neighbours that
    exist, which keeps constants as the only null space of a connected mask.
    """
    mask, index = ops.mask, ops.index
    rows, cols = np.nonzero(mask)
    own = index[rows, cols]
    r_parts, c_parts, v_parts = [], [], []
    degree = np.zeros(own.shape)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        present = _shifted(mask, dr, dc)[rows, cols]
        r_parts.append(own[present])
        c_parts.append(index[rows[present] + dr, cols[present] + dc])
        v_parts.append(np.ones(present.sum()))
        degree += present
    r_parts.append(own)
    c_parts.append(own)
    v_parts.append(-degree)
    return sparse.csr_matrix(
        (np.concatenate(v_parts), (np.concatenate(r_parts), np.concatenate(c_parts))),
        shape=(ops.size, ops.size),
    )


def normals_from_gradient(gx, gy):
    """Unit normals ``[-zx, -zy, 1] / sqrt(1 + |grad z|^2)`` stacked on the last axis."""
    gx = np.asarray(gx, dtype=float)
    gy = np.asarray(gy, dtype=float)
    norm = np.sqrt(1.0 + gx**2 + gy**2)
    return np.stack([-gx / norm, -gy / norm, 1.0 / norm], axis=-1)


def normals_from_height(height, ops):
    """Normal map of a height raster; zero off the mask."""
    gx, gy = ops.gradient(height)
    normals = normals_from_gradient(gx, gy)
    normals[~ops.mask] = 0.0
    return normals
