"""
End-to-end reconstruction: decompose, segment, solve every region, stitch.
"""

import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import ndimage

from .domain import ReconstructionConfig, ReconstructionResult, RegionLabels
from .exceptions import InvalidInputError, SmsfpError
from .mfcp import build_prior
from .operators import build_gradient_operators, normals_from_height
from .polarimetry import decompose_stack
from .segmentation import segment
from .solver import reconstruct_region
from .stitching import stitch_regions

logger = logging.getLogger(__name__)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def connected_regions(mask):
    """Each 4-connected mask component as one region."""
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=FOUR_CONNECTED)
    return RegionLabels(labels=labels.astype(np.int64), region_count=int(count))


def _region_diagnostics(label, size, outcome):
    entry = {"label": label, "pixels": size, "failed": outcome is None}
    if outcome is None:
        return entry
    illum = outcome.illumination
    entry.update(
        converged=outcome.converged,
        iterations=outcome.iterations,
        objectives=list(outcome.objectives),
        eta=outcome.material.eta,
        albedo=outcome.material.albedo,
        light=list(illum.direction) if illum else None,
        light_estimated=bool(illum and illum.estimated),
        light_fallback=bool(illum and illum.fallback),
    )
    return entry


def run_smsfp(stack, config=None, oracle_azimuth=None, regions=None):
    """Reconstruct height and normals from a polarized stack.

    ``oracle_azimuth`` replaces the fused prior azimuth of every region;
    ``regions`` skips segmentation with a given partition.
    """
    config = config or ReconstructionConfig()
    mask = np.asarray(stack.mask, dtype=bool)
    if not mask.any():
        raise InvalidInputError("the stack mask is empty")
    started = time.perf_counter()

    polar = decompose_stack(stack)
    if regions is not None:
        labels = regions
    elif config.segmentation:
        labels = segment(polar, mask, config.seg)
    else:
        labels = connected_regions(mask)
    segmented = time.perf_counter()
    components = connected_regions(mask).labels

    def reconstruct(label):
        region = labels.labels == label
        if not region.any():
            return None
        source = None
        if config.prior_mask == "global":
            source = components == components[region][0]
        try:
            prior = build_prior(
                polar.aop,
                region,
                config.scales,
                decay_rate=config.decay_rate,
                mask_sigma=config.mask_sigma,
                prior_mask=source,
            )
            if oracle_azimuth is not None:
                prior = dataclasses.replace(prior, phi=np.where(region, oracle_azimuth, 0.0))
            return reconstruct_region(polar, region, prior, config, label=label)
        except SmsfpError as exc:
            logger.warning("Region %d failed and will be filled from its neighbours: %s", label, exc)
            return None

    region_ids = list(range(1, labels.region_count + 1))
    with ThreadPoolExecutor(max_workers=config.max_workers) as executor:
        outcomes = list(executor.map(reconstruct, region_ids))
    solved = time.perf_counter()

    failed = [k for k, outcome in zip(region_ids, outcomes) if outcome is None]
    height = stitch_regions(
        [outcome.height if outcome else None for outcome in outcomes],
        labels,
        polar.intensity,
        radius=config.guided_radius,
        eps=config.guided_eps,
        failed=failed,
    )
    ops = build_gradient_operators(mask, config.gradient_sigma)
    normals = normals_from_height(height, ops)
    finished = time.perf_counter()

    sizes = labels.region_sizes()
    diagnostics = {
        "region_count": labels.region_count,
        "segmentation": bool(config.segmentation and regions is None),
        "oracle_azimuth": oracle_azimuth is not None,
        "dop_clamped": polar.clamped,
        "failed_regions": failed,
        "converged": all(o.converged for o in outcomes if o is not None) and not failed,
        "regions": [
            _region_diagnostics(k, sizes.get(k, 0), outcome)
            for k, outcome in zip(region_ids, outcomes)
        ],
        "timing": {
            "segmentation_s": segmented - started,
            "regions_s": solved - segmented,
            "stitching_s": finished - solved,
        },
    }
    logger.info(
        "Reconstructed %d regions (%d failed) in %.2fs",
        labels.region_count,
        len(failed),
        finished - started,
    )
    return ReconstructionResult(
        height=height,
        normals=normals,
        labels=labels,
        materials={k: o.material for k, o in zip(region_ids, outcomes) if o is not None},
        diagnostics=diagnostics,
    )
