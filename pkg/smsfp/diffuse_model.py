"""
Diffuse polarization model: zenith angle <-> degree of polarization for a
dielectric of refractive index eta, plus Lambertian light estimation.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import DEFAULT_VIEW, ETA_BOUNDS, Illumination
from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)

THETA_CAP = math.radians(89.0)
BISECTION_STEPS = 60


def _dop(theta, eta):
    sin2 = np.sin(theta) ** 2
    numerator = (eta - 1.0 / eta) ** 2 * sin2
    denominator = (
        2.0
        + 2.0 * eta**2
        - (eta + 1.0 / eta) ** 2 * sin2
        + 4.0 * np.cos(theta) * np.sqrt(eta**2 - sin2)
    )
    return numerator / denominator


def _check_eta(eta):
    if not (np.isfinite(eta) and eta > 1.0):
        raise InvalidInputError(f"refractive index must exceed 1, got {eta}")


def dop_from_zenith(theta, eta):
    """Degree of diffuse polarization at zenith angle ``theta`` (radians)."""
    _check_eta(eta)
    t = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t >= math.pi / 2):
        raise InvalidInputError("zenith angles must lie in [0, pi/2)")
    result = _dop(t, eta)
    return float(result) if result.ndim == 0 else result


def max_dop(eta, cap=THETA_CAP):
    return float(_dop(cap, eta))


def zenith_from_dop(rho, eta, cap=THETA_CAP):
    """Invert the diffuse DOP model by bisection on [0, cap].

    DOP values above what ``cap`` produces are clamped to ``cap``.
    """
    _check_eta(eta)
    target = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(target)) or np.any(target < 0) or np.any(target > 1):
        raise InvalidInputError("DOP values must lie in [0, 1]")

    over = target > max_dop(eta, cap)
    if np.any(over):
        logger.debug("Capped zenith at %d pixels above the maximum DOP", int(np.count_nonzero(over)))

    low = np.zeros(target.shape)
    high = np.full(target.shape, cap)
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        below = _dop(middle, eta) < target
        low = np.where(below, middle, low)
        high = np.where(below, high, middle)

    theta = 0.5 * (low + high)
    theta = np.where(over, cap, theta)
    theta = np.where(target == 0, 0.0, theta)
    return float(theta) if theta.ndim == 0 else theta


def count_capped(rho, eta, cap=THETA_CAP):
    return int(np.count_nonzero(np.asarray(rho) > max_dop(eta, cap)))


@dataclass
class ClosedFormReport:
    """Agreement between the printed closed-form inverse and bisection."""

    eta: float
    rows: list = field(default_factory=list)

    @property
    def negative_radicands(self):
        return sum(1 for row in self.rows if row["radicand_negative"])

    @property
    def max_abs_err(self):
        errors = [row["abs_err"] for row in self.rows if not math.isnan(row["abs_err"])]
        return max(errors) if errors else math.nan

    columns = ("rho", "theta_bisect", "theta_closed", "abs_err", "radicand_negative")


def closed_form_zenith(rho, eta):
    """Return ``(theta, radicand)``; theta is NaN where the radicand is unusable."""
    p1 = eta**4 * (1 - rho**2) + 2 * eta**2 * (2 * rho**2 + rho - 1) + (rho + 1) ** 2
    p2 = 4 * eta**3 * rho * math.sqrt(max(1 - rho**2, 0.0))
    q1 = (rho + 1) ** 2 * (eta + 1) + 2 * eta**2 * (3 * rho**2 + 2 * rho - 1)
    radicand = (p1 - p2) / q1 if q1 != 0 else math.nan
    if not 0.0 <= radicand <= 1.0:
        return math.nan, radicand
    return math.acos(math.sqrt(radicand)), radicand


def validate_closed_form_inverse(eta, samples=100):
    if not ETA_BOUNDS[0] <= eta <= ETA_BOUNDS[1]:
        raise InvalidInputError(f"eta must lie in {list(ETA_BOUNDS)}, got {eta}")
    report = ClosedFormReport(eta=float(eta))
    rhos = np.linspace(0.0, max_dop(eta), samples)
    thetas = zenith_from_dop(rhos, eta)
    for rho, theta_bisect in zip(rhos, np.atleast_1d(thetas)):
        theta_closed, radicand = closed_form_zenith(float(rho), float(eta))
        report.rows.append(
            {
                "rho": float(rho),
                "theta_bisect": float(theta_bisect),
                "theta_closed": theta_closed,
                "abs_err": abs(theta_closed - float(theta_bisect)),
                "radicand_negative": bool(radicand < 0),
            }
        )
    logger.info(
        "Closed-form inverse at eta=%.3f: %d negative radicands over %d points",
        eta,
        report.negative_radicands,
        samples,
    )
    return report


def estimate_illumination(intensity, prior_normals, albedo, mask, view=DEFAULT_VIEW):
    """Least-squares Lambertian light direction from prior normals.

    Falls back to the view direction (which disables the intensity-ratio rows)
    when the normals do not span three dimensions or the fitted light points
    away from the camera.
    """
    mask = np.asarray(mask, dtype=bool)
    normals = np.asarray(prior_normals, dtype=float)[mask]
    values = np.asarray(intensity, dtype=float)[mask]

    if normals.shape[0] >= 3:
        singular = np.linalg.svd(normals, compute_uv=False)
        if singular[-1] > 1e-8 * singular[0]:
            direction, *_ = np.linalg.lstsq(albedo * normals, values, rcond=None)
            norm = float(np.linalg.norm(direction))
            if np.isfinite(norm) and norm > 0 and direction[2] > 0:
                return Illumination(direction=direction / norm, view=view, estimated=True)

    logger.warning("Illumination estimate is degenerate; falling back to the view direction")
    return Illumination(direction=view, view=view, fallback=True)
