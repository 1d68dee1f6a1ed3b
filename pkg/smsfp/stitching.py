"""
Joining per-region height maps into one surface.

Each region is solved up to an additive constant, so regions are first
offset-aligned across their shared boundary, then blended with a guided
filter restricted to a band around the region boundaries.
"""

import logging

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.csgraph import connected_components

from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)

STEPS = ((0, 1), (1, 0))


def _composite(heights, labels, skip=()):
    """One raster holding every region's own height at its pixels."""
    height = np.zeros(labels.shape)
    covered = np.zeros(labels.shape, dtype=bool)
    for k in range(1, int(labels.max(initial=0)) + 1):
        pixels = labels == k
        if not pixels.any() or k in skip:
            continue
        source = heights[k - 1] if k - 1 < len(heights) else None
        if source is None:
            raise InvalidInputError(f"region {k} has no height map")
        values = np.asarray(source, dtype=float)[pixels]
        if not np.all(np.isfinite(values)):
            raise InvalidInputError(f"region {k} height is not finite on its pixels")
        height[pixels] = values
        covered |= pixels
    return height, covered


def _shift(array, dr, dc, fill):
    out = np.full(array.shape, fill, dtype=array.dtype)
    h, w = array.shape
    out[: h - dr, : w - dc] = array[dr:, dc:]
    return out


def boundary_pairs(labels, height, skip=()):
    """Adjacent pixel pairs across region boundaries with their height jumps.

    Returns ``(a, b, jump)`` arrays: the jump estimates ``offset_a - offset_b``
    from both regions' one-sided linear extrapolations to the pair midpoint,
    or the plain difference where a region is one pixel thick.
    """
    firsts, seconds, jumps = [], [], []
    skip = np.asarray(sorted(skip), dtype=labels.dtype)
    for dr, dc in STEPS:
        next_label = _shift(labels, dr, dc, 0)
        after = _shift(labels, 2 * dr, 2 * dc, 0)
        before = np.zeros_like(labels)
        before[dr:, dc:] = labels[: labels.shape[0] - dr, : labels.shape[1] - dc]

        z_next = _shift(height, dr, dc, 0.0)
        z_after = _shift(height, 2 * dr, 2 * dc, 0.0)
        z_before = np.zeros_like(height)
        z_before[dr:, dc:] = height[: height.shape[0] - dr, : height.shape[1] - dc]

        pair = (labels > 0) & (next_label > 0) & (labels != next_label)
        if skip.size:
            pair &= ~np.isin(labels, skip) & ~np.isin(next_label, skip)
        a, b = labels[pair], next_label[pair]
        za, zb = height[pair], z_next[pair]
        slope_ok = (before[pair] == a) & (after[pair] == b)
        mid_a = za + 0.5 * (za - z_before[pair])
        mid_b = zb + 0.5 * (zb - z_after[pair])
        jump = np.where(slope_ok, mid_b - mid_a, zb - za)
        firsts.append(a)
        seconds.append(b)
        jumps.append(jump)
    return np.concatenate(firsts), np.concatenate(seconds), np.concatenate(jumps)


def align_offsets(heights, labels, skip=()):
    """Per-region constants that make neighbouring regions meet.

    One region per connected group of regions is held at zero; the returned
    array is indexed by label (entry 0 unused).
    """
    labels = np.asarray(labels)
    count = int(labels.max(initial=0))
    height, _ = _composite(heights, labels, skip)
    a, b, jump = boundary_pairs(labels, height, skip)
    offsets = np.zeros(count + 1)
    if a.size == 0:
        return offsets

    rows = np.arange(a.size)
    design = sparse.csr_matrix(
        (
            np.concatenate([np.ones(a.size), -np.ones(a.size)]),
            (np.concatenate([rows, rows]), np.concatenate([a, b]) - 1),
        ),
        shape=(a.size, count),
    )
    adjacency = sparse.csr_matrix((np.ones(a.size), (a - 1, b - 1)), shape=(count, count))
    groups, membership = connected_components(adjacency, directed=False)
    pinned = {int(np.flatnonzero(membership == g)[0]) for g in range(groups)}
    free = np.array([k for k in range(count) if k not in pinned], dtype=np.int64)
    if free.size == 0:
        return offsets

    # Each pair asks o_a - o_b = jump so that z_a + o_a meets z_b + o_b.
    reduced = design[:, free].toarray()
    solution, *_ = np.linalg.lstsq(reduced, jump, rcond=None)
    offsets[free + 1] = solution
    logger.debug("Aligned %d regions over %d boundary pairs", count, a.size)
    return offsets


def guided_filter(guide, source, radius, eps, mask=None):
    """Box-window guided filter; with a mask, windows only average mask pixels."""
    guide = np.asarray(guide, dtype=float)
    source = np.asarray(source, dtype=float)
    weight = np.ones(guide.shape) if mask is None else np.asarray(mask, dtype=float)
    size = 2 * int(radius) + 1

    def box(values):
        total = ndimage.uniform_filter(values * weight, size=size, mode="constant")
        count = ndimage.uniform_filter(weight, size=size, mode="constant")
        return total / np.where(count > 0, count, 1.0)

    mean_i = box(guide)
    mean_p = box(source)
    cov_ip = box(guide * source) - mean_i * mean_p
    var_i = box(guide * guide) - mean_i * mean_i
    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return box(a) * guide + box(b)


def boundary_band(labels, radius):
    """Mask pixels within ``radius`` of a pixel touching another region."""
    edges = np.zeros(labels.shape, dtype=bool)
    for dr, dc in STEPS:
        next_label = _shift(labels, dr, dc, 0)
        cut = (labels > 0) & (next_label > 0) & (labels != next_label)
        edges |= cut
        edges[dr:, dc:] |= cut[: labels.shape[0] - dr, : labels.shape[1] - dc]
    if not edges.any():
        return edges
    return (ndimage.distance_transform_edt(~edges) <= radius) & (labels > 0)


def fill_from_neighbours(height, labels, label):
    """Inverse-distance-weighted fill of one region from its neighbours' rim heights."""
    region = labels == label
    ring = ndimage.binary_dilation(region) & ~region & (labels > 0)
    if not ring.any():
        logger.warning("Region %d has no neighbours to fill from; leaving it flat", label)
        return np.where(region, 0.0, height)
    ring_r, ring_c = np.nonzero(ring)
    values = height[ring]
    out = height.copy()
    rows, cols = np.nonzero(region)
    for start in range(0, rows.size, 4096):
        r, c = rows[start : start + 4096], cols[start : start + 4096]
        weights = 1.0 / ((r[:, None] - ring_r) ** 2 + (c[:, None] - ring_c) ** 2)
        out[r, c] = weights @ values / weights.sum(axis=1)
    return out


def stitch_regions(heights, labels, guide, radius=8, eps=1e-3, failed=()):
    """Align, fill failed regions and blend region boundaries.

    ``heights[k - 1]`` is the height map of region ``k`` (None for a failed
    region); the result is zero off the labelled pixels.
    """
    labels = np.asarray(getattr(labels, "labels", labels))
    mask = labels > 0
    failed = set(failed)
    present = sorted(set(np.unique(labels[mask]).tolist()))
    height, covered = _composite(heights, labels, skip=failed)

    if len(present) <= 1 and not failed:
        return height

    offsets = align_offsets(heights, labels, skip=failed)
    height = np.where(covered, height + offsets[labels], 0.0)
    for k in sorted(failed):
        height = fill_from_neighbours(height, labels, k)
    height[mask] -= height[mask].mean()

    band = boundary_band(labels, radius)
    if band.any():
        smoothed = guided_filter(guide, height, radius, eps, mask=mask)
        height = np.where(band, smoothed, height)
    logger.info("Stitched %d regions; %d pixels in the blend band", len(present), int(band.sum()))
    return np.where(mask, height, 0.0)
