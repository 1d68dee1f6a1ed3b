"""Angular-error metrics for normal maps."""

import numpy as np
from matplotlib import colormaps
from scipy import ndimage

from .domain import EvalReport
from .exceptions import InvalidInputError
from .imageio import write_rgb_png

THRESHOLDS = (11.25, 22.5, 30.0)
ERROR_MAP_CEILING = 90.0


def accuracy_key(threshold):
    return "acc_" + f"{threshold:g}".replace(".", "_")


def angular_error_map(est, gt, mask):
    """Per-pixel angle between two normal maps in degrees; zero off the mask."""
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if est.shape != gt.shape or est.shape[:2] != mask.shape or est.shape[-1] != 3:
        raise InvalidInputError(
            f"normal maps and mask disagree in size: {est.shape}, {gt.shape}, {mask.shape}"
        )
    cosine = np.clip(np.sum(est * gt, axis=-1), -1.0, 1.0)
    return np.where(mask, np.degrees(np.arccos(cosine)), 0.0)


def summarize(error_map, mask, thresholds=THRESHOLDS):
    mask = np.asarray(mask, dtype=bool)
    errors = np.asarray(error_map, dtype=float)[mask]
    if errors.size == 0:
        raise InvalidInputError("cannot summarize an empty mask")
    if not np.all(np.isfinite(errors)):
        raise InvalidInputError("error map is not finite on the mask")
    return EvalReport(
        mae_deg=float(errors.mean()),
        rmse_deg=float(np.sqrt(np.mean(errors**2))),
        accuracies={accuracy_key(t): float(np.mean(errors < t)) for t in thresholds},
        n_pixels=int(errors.size),
        error_map=np.where(mask, error_map, 0.0),
    )


def evaluation_mask(mask, rim=1):
    """The mask without a ``rim``-pixel band along its silhouette."""
    mask = np.asarray(mask, dtype=bool)
    if rim <= 0:
        return mask
    return ndimage.binary_erosion(mask, iterations=int(rim), border_value=0)


def evaluate_normals(est, gt, mask, rim=1, thresholds=THRESHOLDS):
    scored = evaluation_mask(mask, rim)
    return summarize(angular_error_map(est, gt, scored), scored, thresholds)


def error_map_rgb(error_map, mask):
    """Blue-to-red rendering of errors over 0-90 degrees; background black."""
    scaled = np.clip(np.asarray(error_map, dtype=float) / ERROR_MAP_CEILING, 0.0, 1.0)
    rgb = colormaps["jet"](scaled)[..., :3]
    return np.where(np.asarray(mask, dtype=bool)[..., None], rgb, 0.0)


def write_error_map(path, error_map, mask):
    write_rgb_png(path, error_map_rgb(error_map, mask))
