"""
Polarization-aided adaptive region growing.

The mask is split into regions of similar polarization response. Growth runs
on a 4-channel feature field ``[rho, cos 2phi, sin 2phi, |grad phi|]`` with
per-pixel channel weights that favour locally stable features.

Growth never enters crease pixels, where the feature field jumps by ``tau``
or more between 4-neighbours. Creases are assigned to the nearest grown
region afterwards, and regions in smooth contact are merged again during
post-processing.
"""

import logging
import math
from collections import deque

import numpy as np
from scipy import ndimage
from skimage.morphology import disk, reconstruction

from .domain import FeatureField, RegionLabels, SegConfig
from .exceptions import InvalidInputError
from .polarimetry import aop_gradient_magnitude, wrap_half_period

logger = logging.getLogger(__name__)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)
VARIANCE_FLOOR = 1e-12


def build_feature_field(polar, mask):
    mask = np.asarray(mask, dtype=bool)
    aop = wrap_half_period(polar.aop)
    gradient = aop_gradient_magnitude(aop, mask)
    inside = gradient[mask]
    scale = float(np.percentile(inside, 95)) if inside.size else 0.0
    if scale > 0:
        gradient = gradient / scale
    channels = np.stack([polar.dop, np.cos(2 * aop), np.sin(2 * aop), gradient])
    channels[:, ~mask] = 0.0
    return FeatureField(channels=channels, mask=mask)


def _masked_variance(values, weight, window):
    count = ndimage.uniform_filter(weight, size=window, mode="constant")
    count = np.where(count > 0, count, 1.0)
    mean = ndimage.uniform_filter(values * weight, size=window, mode="constant") / count
    mean_sq = ndimage.uniform_filter(values**2 * weight, size=window, mode="constant") / count
    variance = mean_sq - mean**2
    variance[variance < VARIANCE_FLOOR] = 0.0
    return variance


def _reliability(variance, mask):
    peak = float(variance[mask].max()) if mask.any() else 0.0
    if peak <= 0:
        return np.ones(variance.shape)
    return np.where(mask, np.exp(-variance / peak), 1.0)


def _reliability_from_channels(channels, mask, window):
    weight = mask.astype(float)
    var_rho = _masked_variance(channels[0], weight, window)
    var_phi = _masked_variance(channels[1], weight, window) + _masked_variance(
        channels[2], weight, window
    )
    return _reliability(var_rho, mask), _reliability(var_phi, mask)


def local_reliability(rho, aop, mask, window=5):
    """Windowed variance reliabilities ``exp(-var / max var)`` for DOP and AOP.

    AOP variance is taken on the ``(cos 2phi, sin 2phi)`` embedding.
    """
    mask = np.asarray(mask, dtype=bool)
    if window < 3 or window % 2 == 0:
        raise InvalidInputError("window must be odd and at least 3")
    if not mask.any():
        raise InvalidInputError("reliability needs a non-empty mask")
    aop = np.asarray(aop, dtype=float)
    channels = np.stack([np.asarray(rho, dtype=float), np.cos(2 * aop), np.sin(2 * aop)])
    return _reliability_from_channels(channels, mask, window)


def adaptive_weights(r_rho, r_phi, config):
    phi_weight = 1.0 + config.lambda_phi * np.asarray(r_phi, dtype=float)
    return np.stack(
        [
            1.0 + config.lambda_rho * np.asarray(r_rho, dtype=float),
            phi_weight,
            phi_weight,
            np.ones_like(phi_weight),
        ]
    )


def feature_distance(f_neighbor, f_seed, weights):
    diff = np.asarray(weights, dtype=float) * (
        np.asarray(f_neighbor, dtype=float) - np.asarray(f_seed, dtype=float)
    )
    return float(np.sqrt(np.sum(diff**2)))


_NEIGHBOUR_PAIRS = (
    ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
    ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
)


def _crease_from_weights(channels, weights, mask, tau, closing):
    crease = np.zeros(mask.shape, dtype=bool)
    everything = (slice(None),)
    for first, second in _NEIGHBOUR_PAIRS:
        w = 0.5 * (weights[everything + first] + weights[everything + second])
        diff = w * (channels[everything + first] - channels[everything + second])
        jump = (np.sqrt((diff**2).sum(axis=0)) >= tau) & mask[first] & mask[second]
        crease[first] |= jump
        crease[second] |= jump
    if closing > 0 and crease.any():
        # Closing bridges the short gaps where a crease line crosses an
        # orientation its two sides share.
        padded = np.pad(crease, closing)
        closed = ndimage.binary_closing(padded, structure=disk(closing))
        crease = closed[closing:-closing, closing:-closing]
    return crease & mask


def crease_mask(field, mask, config=None):
    """Pixels on a feature discontinuity of at least ``tau``.

    A 4-neighbour pair is a jump when its weighted feature distance, using
    the mean adaptive weights of the pair, reaches ``tau``. Both pixels of a
    jump are creases; gaps up to ``2 * crease_closing`` pixels along a crease
    line are closed.
    """
    config = config or SegConfig()
    mask = np.asarray(mask, dtype=bool)
    r_rho, r_phi = _reliability_from_channels(field.channels, mask, config.window)
    weights = adaptive_weights(r_rho, r_phi, config)
    return _crease_from_weights(field.channels, weights, mask, config.tau, config.crease_closing)


def _assign_creases(labels, mask, first_free):
    """Give unlabeled mask pixels the label of the nearest labeled pixel.

    Search stays inside each connected piece of the mask; a piece with no
    labeled pixel at all becomes one new region.
    """
    pieces, _ = ndimage.label(mask, structure=FOUR_CONNECTED)
    next_label = first_free
    for k, box in enumerate(ndimage.find_objects(pieces), start=1):
        if box is None:
            continue
        piece = pieces[box] == k
        window = labels[box]
        todo = piece & (window == 0)
        if not todo.any():
            continue
        known = piece & (window > 0)
        if known.any():
            _, (rows, cols) = ndimage.distance_transform_edt(~known, return_indices=True)
            window[todo] = window[rows[todo], cols[todo]]
        else:
            window[todo] = next_label
            next_label += 1
    return next_label - first_free


def initial_seeds(field, mask, stride=32):
    """Grid seeds inside the mask, then strict local minima of |grad phi|."""
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    seeds = [
        (r, c)
        for r in range(stride // 2, height, stride)
        for c in range(stride // 2, width, stride)
        if mask[r, c]
    ]
    gradient = np.where(mask, field.channels[3], np.inf)
    low = ndimage.minimum_filter(gradient, size=3, mode="constant", cval=np.inf)
    high = ndimage.maximum_filter(np.where(mask, field.channels[3], -np.inf), size=3)
    interior = ndimage.binary_erosion(mask, structure=FOUR_CONNECTED)
    minima = interior & (gradient == low) & (gradient < high)
    taken = set(seeds)
    seeds.extend(p for p in zip(*(a.tolist() for a in np.nonzero(minima))) if p not in taken)
    return seeds


def region_grow(field, mask, config=None, seeds=None):
    """FIFO region growing from seeds, then singleton seeding of leftovers.

    A neighbour joins a region when its weighted feature distance to the
    region's seed feature is below ``tau``. With ``seed_update="mean"`` the
    seed feature tracks the running mean of the members. Crease pixels are
    never grown into; they take the label of the nearest grown pixel.
    """
    config = config or SegConfig()
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise InvalidInputError("cannot segment an empty mask")
    height, width = mask.shape
    channels = field.channels
    r_rho, r_phi = _reliability_from_channels(channels, mask, config.window)
    weights = adaptive_weights(r_rho, r_phi, config)
    crease = _crease_from_weights(channels, weights, mask, config.tau, config.crease_closing)

    # Plain Python lists keep the per-pixel loop fast.
    f0, f1, f2, f3 = (channels[k].ravel().tolist() for k in range(4))
    w0 = weights[0].ravel().tolist()
    w1 = weights[1].ravel().tolist()
    inside = (mask & ~crease).ravel().tolist()
    labels = [0] * (height * width)
    tau = config.tau
    running_mean = config.seed_update == "mean"
    steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if config.connectivity == 8:
        steps += [(-1, -1), (-1, 1), (1, -1), (1, 1)]

    sums = [None]
    counts = [0]
    queue = deque()

    def open_region(p):
        labels[p] = len(sums)
        sums.append([f0[p], f1[p], f2[p], f3[p]])
        counts.append(1)
        queue.append(p)

    def grow():
        while queue:
            p = queue.popleft()
            region = labels[p]
            total, n = sums[region], counts[region]
            if running_mean:
                s0, s1, s2, s3 = total[0] / n, total[1] / n, total[2] / n, total[3] / n
            else:
                s0, s1, s2, s3 = total
            row, col = divmod(p, width)
            for dr, dc in steps:
                r, c = row + dr, col + dc
                if r < 0 or r >= height or c < 0 or c >= width:
                    continue
                q = r * width + c
                if labels[q] or not inside[q]:
                    continue
                a = w0[q] * (f0[q] - s0)
                b = w1[q] * (f1[q] - s1)
                d = w1[q] * (f2[q] - s2)
                e = f3[q] - s3
                if math.sqrt(a * a + b * b + d * d + e * e) < tau:
                    labels[q] = region
                    if running_mean:
                        total[0] += f0[q]
                        total[1] += f1[q]
                        total[2] += f2[q]
                        total[3] += f3[q]
                        counts[region] += 1
                    queue.append(q)

    if seeds is None:
        seeds = initial_seeds(field, mask, config.seed_grid_stride)
    for r, c in seeds:
        p = int(r) * width + int(c)
        if 0 <= r < height and 0 <= c < width and inside[p] and not labels[p]:
            open_region(p)
    seeded = len(sums) - 1
    grow()

    for p in range(height * width):
        if inside[p] and not labels[p]:
            open_region(p)
            grow()

    grown = np.asarray(labels, dtype=np.int64).reshape(height, width)
    opened = len(sums) - 1
    region_count = opened + _assign_creases(grown, mask, opened + 1)
    logger.debug(
        "Region growing: %d seeded regions, %d opened for unreached pixels, %d crease pixels",
        seeded,
        region_count - seeded,
        int(crease.sum()),
    )
    return RegionLabels(labels=grown, region_count=region_count)


# --- post-processing ---


def _fill_holes(labels, mask, max_hole):
    """Absorb small enclosed pieces of other regions into the enclosing region."""
    labels = labels.copy()
    for k, box in enumerate(ndimage.find_objects(labels), start=1):
        if box is None:
            continue
        rows = slice(max(box[0].start - 1, 0), box[0].stop + 1)
        cols = slice(max(box[1].start - 1, 0), box[1].stop + 1)
        region = (labels[rows, cols] == k).astype(float)
        if region.shape[0] < 3 or region.shape[1] < 3:
            continue
        seed = region.copy()
        seed[1:-1, 1:-1] = 1.0
        filled = reconstruction(seed, region, method="erosion") > 0.5
        holes = filled & (region < 0.5) & mask[rows, cols]
        if not holes.any():
            continue
        pieces, count = ndimage.label(holes, structure=FOUR_CONNECTED)
        sizes = np.bincount(pieces.ravel(), minlength=count + 1)
        window = labels[rows, cols]
        for piece in range(1, count + 1):
            if sizes[piece] < max_hole:
                window[pieces == piece] = k
    return labels


def _adjacent_pairs(labels, smooth=None):
    """Label pairs that touch; with ``smooth``, only through two smooth pixels."""
    pairs = set()
    for first, second in _NEIGHBOUR_PAIRS:
        a, b = labels[first], labels[second]
        touching = (a != b) & (a > 0) & (b > 0)
        if smooth is not None:
            touching &= smooth[first] & smooth[second]
        low = np.minimum(a[touching], b[touching])
        high = np.maximum(a[touching], b[touching])
        pairs.update(zip(low.tolist(), high.tolist()))
    return pairs


class _RegionGraph:
    """Region sizes, feature sums and adjacency under successive merges."""

    def __init__(self, labels, channels):
        count = int(labels.max())
        flat = labels.ravel()
        self.size = np.bincount(flat, minlength=count + 1).astype(float)
        self.sums = np.stack(
            [np.bincount(flat, weights=ch.ravel(), minlength=count + 1) for ch in channels], axis=1
        )
        self.alive = {k for k in range(1, count + 1) if self.size[k] > 0}
        self.neighbors = {k: set() for k in self.alive}
        for a, b in _adjacent_pairs(labels):
            self.neighbors[a].add(b)
            self.neighbors[b].add(a)
        self.parent = np.arange(count + 1)

    def mean(self, k):
        return self.sums[k] / self.size[k]

    def distance(self, a, b):
        return float(np.linalg.norm(self.mean(a) - self.mean(b)))

    def find(self, k):
        while self.parent[k] != k:
            k = self.parent[k]
        return int(k)

    def merge(self, source, target):
        self.size[target] += self.size[source]
        self.sums[target] += self.sums[source]
        self.size[source] = 0
        for n in self.neighbors.pop(source):
            self.neighbors[n].discard(source)
            if n != target:
                self.neighbors[n].add(target)
                self.neighbors[target].add(n)
        self.alive.discard(source)
        self.parent[source] = target

    def resolve(self, labels):
        mapping = self.parent.copy()
        for k in range(len(mapping)):
            root = k
            while mapping[root] != root:
                root = mapping[root]
            mapping[k] = root
        return mapping[labels]


def _merge_regions(labels, channels, smooth, merge_tol, min_region_px):
    graph = _RegionGraph(labels, channels)

    # Regions touching through crease-free pixels are one surface piece.
    for a, b in sorted(_adjacent_pairs(labels, smooth)):
        a, b = graph.find(a), graph.find(b)
        if a != b:
            graph.merge(max(a, b), min(a, b))

    # Neighbours with (near-)identical mean features are one region.
    changed = True
    while changed:
        changed = False
        for a in sorted(graph.alive):
            if a not in graph.alive:
                continue
            for b in sorted(graph.neighbors[a]):
                if graph.distance(a, b) <= merge_tol:
                    graph.merge(b, a)
                    changed = True

    # Small regions go to the neighbour with the closest mean feature.
    while True:
        small = [k for k in graph.alive if graph.size[k] < min_region_px and graph.neighbors[k]]
        if not small:
            break
        k = min(small, key=lambda j: (graph.size[j], j))
        target = min(graph.neighbors[k], key=lambda j: (graph.distance(k, j), j))
        graph.merge(k, target)

    return graph.resolve(labels)


def _smooth_boundaries(labels, mask, sigma):
    if sigma <= 0:
        return labels
    margin = int(math.ceil(4 * sigma)) + 1
    best = np.full(labels.shape, -1.0)
    result = labels.copy()
    for k, box in enumerate(ndimage.find_objects(labels), start=1):
        if box is None:
            continue
        rows = slice(max(box[0].start - margin, 0), box[0].stop + margin)
        cols = slice(max(box[1].start - margin, 0), box[1].stop + margin)
        score = ndimage.gaussian_filter((labels[rows, cols] == k).astype(float), sigma, mode="constant")
        window_best = best[rows, cols]
        better = (score > window_best) & mask[rows, cols]
        window_best[better] = score[better]
        result[rows, cols][better] = k
    result[~mask] = 0
    return result


def _enforce_connectivity(labels):
    labels = labels.copy()
    next_label = int(labels.max()) + 1
    for k, box in enumerate(ndimage.find_objects(labels.copy()), start=1):
        if box is None:
            continue
        pieces, count = ndimage.label(labels == k, structure=FOUR_CONNECTED)
        if count <= 1:
            continue
        sizes = np.bincount(pieces.ravel(), minlength=count + 1)
        sizes[0] = 0
        keep = int(np.argmax(sizes))
        for piece in range(1, count + 1):
            if piece == keep:
                continue
            fragment = pieces == piece
            ring = ndimage.binary_dilation(fragment, structure=FOUR_CONNECTED) & ~fragment
            around = labels[ring]
            around = around[(around > 0) & (around != k)]
            if around.size:
                values, votes = np.unique(around, return_counts=True)
                labels[fragment] = int(values[np.argmax(votes)])
            else:
                labels[fragment] = next_label
                next_label += 1
    return labels


def _relabel(labels):
    """Renumber regions 1..K in raster order of first appearance."""
    flat = labels.ravel()
    present = flat[flat > 0]
    _, first = np.unique(present, return_index=True)
    order = np.unique(present)[np.argsort(first)]
    mapping = np.zeros(int(labels.max()) + 1, dtype=np.int64)
    mapping[order] = np.arange(1, len(order) + 1)
    return mapping[labels], len(order)


def post_process(labels, field, mask, config=None):
    """Hole filling, region merging, boundary smoothing and relabelling."""
    config = config or SegConfig()
    mask = np.asarray(mask, dtype=bool)
    raw = np.where(mask, labels.labels, 0)

    current = _fill_holes(raw, mask, config.min_region_px)
    smooth = mask & ~crease_mask(field, mask, config)
    current = _merge_regions(current, field.channels, smooth, config.merge_tol, config.min_region_px)
    current = _smooth_boundaries(current, mask, config.smoothing_sigma)
    # Smoothing can split a region; fragments join their dominant neighbour.
    for _ in range(3):
        fixed = _enforce_connectivity(current)
        if np.array_equal(fixed, current):
            break
        current = fixed
    current, count = _relabel(current)
    logger.info("Segmentation: %d regions after post-processing (from %d)", count, labels.region_count)
    return RegionLabels(labels=current, region_count=count)


def segment(polar, mask, config=None, seeds=None):
    config = config or SegConfig()
    field = build_feature_field(polar, mask)
    grown = region_grow(field, mask, config, seeds=seeds)
    return post_process(grown, field, mask, config)
