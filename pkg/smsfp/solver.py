"""
Linear height recovery from per-pixel gradient constraints.

Every constraint family produces rows ``cx * (Dx z) + cy * (Dy z) = rhs``
(the Laplacian acts on ``z`` directly). Families are weighted, stacked and
solved in one sparse least-squares problem; the outer loop re-estimates
zenith angles and material parameters between solves.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import MatrixRankWarning, splu

from .diffuse_model import (
    THETA_CAP,
    count_capped,
    dop_from_zenith,
    estimate_illumination,
    zenith_from_dop,
)
from .domain import ETA_BOUNDS, Illumination, MaterialParams, RegionReconstruction, SolverWeights
from .exceptions import InvalidInputError, SolverError
from .mfcp import implicit_normals
from .operators import build_gradient_operators, laplacian_matrix, normals_from_height

logger = logging.getLogger(__name__)
iteration_logger = logging.getLogger("smsfp.solver.iterations")

COS_FLOOR = 1e-6
INTENSITY_FLOOR = 1e-6
MFCP_FLOOR = 1e-9
MIN_REFIT_PIXELS = 10


@dataclass(frozen=True)
class ConstraintRows:
    """One family of linear rows on the masked height vector.

    ``pixels`` are unknown indices the rows belong to; ``cx``/``cy`` are the
    gradient coefficients (None for rows that act on heights directly).
    """

    kind: str
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    pixels: np.ndarray
    cx: np.ndarray | None = None
    cy: np.ndarray | None = None

    def __len__(self):
        return self.matrix.shape[0]

    def residual(self, z):
        return self.matrix @ np.asarray(z, dtype=float) - self.rhs

    def residual_from_gradient(self, gx, gy):
        """Residuals for known partials given as masked vectors."""
        if self.cx is None:
            raise InvalidInputError(f"{self.kind} rows act on heights, not gradients")
        gx = np.asarray(gx, dtype=float)[self.pixels]
        gy = np.asarray(gy, dtype=float)[self.pixels]
        return self.cx * gx + self.cy * gy - self.rhs


def gradient_rows(kind, ops, cx, cy, rhs, pixels=None):
    pixels = np.arange(ops.size) if pixels is None else np.asarray(pixels, dtype=np.int64)
    cx = np.broadcast_to(np.asarray(cx, dtype=float), pixels.shape).copy()
    cy = np.broadcast_to(np.asarray(cy, dtype=float), pixels.shape).copy()
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), pixels.shape).copy()
    size = pixels.size
    matrix = (
        sparse.diags(cx, 0, shape=(size, size)) @ ops.dx[pixels]
        + sparse.diags(cy, 0, shape=(size, size)) @ ops.dy[pixels]
    )
    return ConstraintRows(kind, sparse.csr_matrix(matrix), rhs, pixels, cx, cy)


def azimuth_rows(aop, ops, form="geometric"):
    """Gradient parallel to the azimuth: ``sin(phi) zx - cos(phi) zy = 0``.

    The rows only change sign under ``phi -> phi + pi``. ``form="printed"``
    swaps the trig roles to ``-cos(phi) zx + sin(phi) zy = 0``.
    """
    phi = ops.vectorize(aop)
    if form == "geometric":
        cx, cy = np.sin(phi), -np.cos(phi)
    elif form == "printed":
        cx, cy = -np.cos(phi), np.sin(phi)
    else:
        raise InvalidInputError(f"unknown azimuth row form {form!r}")
    return gradient_rows("azimuth", ops, cx, cy, 0.0)


def intensity_ratio_rows(intensity, zenith, illum, albedo, ops):
    """Rows equating the DOP and Lambertian expressions for ``sqrt(1 + |grad z|^2)``.

    Skips pixels at grazing zenith or zero intensity; empty when light and
    view coincide.
    """
    if not illum.distinct:
        logger.debug("Light and view coincide; intensity-ratio rows omitted")
        return gradient_rows("intensity", ops, 0.0, 0.0, 0.0, pixels=np.empty(0, dtype=np.int64))
    cos_t = np.cos(ops.vectorize(zenith))
    values = ops.vectorize(intensity)
    keep = np.nonzero((cos_t > COS_FLOOR) & (values > INTENSITY_FLOOR))[0]
    cos_t, values = cos_t[keep], values[keep]
    l1, l2, l3 = illum.direction
    v1, v2, v3 = illum.view
    cx = -v1 / cos_t + albedo * l1 / values
    cy = -v2 / cos_t + albedo * l2 / values
    rhs = albedo * l3 / values - v3 / cos_t
    dropped = ops.size - keep.size
    if dropped:
        logger.debug("Dropped %d degenerate intensity-ratio rows", dropped)
    return gradient_rows("intensity", ops, cx, cy, rhs, pixels=keep)


def mfcp_rows(prior_normals, weights, zenith, ops):
    """Two rows per pixel: ``w (-cos(theta) * z_x) = w n_x`` and the same for y."""
    w_con = getattr(weights, "w_con", weights)
    w = ops.vectorize(w_con)
    cos_t = np.cos(ops.vectorize(zenith))
    normals = np.asarray(prior_normals, dtype=float)[ops.mask]
    keep = np.nonzero(w * cos_t >= MFCP_FLOOR)[0]
    w, cos_t, normals = w[keep], cos_t[keep], normals[keep]
    zero = np.zeros(keep.shape)
    rows_x = gradient_rows("mfcp", ops, -w * cos_t, zero, w * normals[:, 0], pixels=keep)
    rows_y = gradient_rows("mfcp", ops, zero, -w * cos_t, w * normals[:, 1], pixels=keep)
    return ConstraintRows(
        "mfcp",
        sparse.vstack([rows_x.matrix, rows_y.matrix], format="csr"),
        np.concatenate([rows_x.rhs, rows_y.rhs]),
        np.concatenate([keep, keep]),
        np.concatenate([rows_x.cx, rows_y.cx]),
        np.concatenate([rows_x.cy, rows_y.cy]),
    )


def laplacian_rows(ops):
    matrix = laplacian_matrix(ops)
    return ConstraintRows("laplacian", matrix, np.zeros(ops.size), np.arange(ops.size))


@dataclass(frozen=True)
class ConstraintSystem:
    """Weighted stack of constraint families over one set of operators."""

    ops: object
    blocks: tuple
    weights: SolverWeights = SolverWeights()

    def weight(self, kind):
        return getattr(self.weights, kind, 1.0)

    def assemble(self):
        matrices, rhs = [], []
        for block in self.blocks:
            if len(block) == 0:
                continue
            w = self.weight(block.kind)
            matrices.append(w * block.matrix)
            rhs.append(w * block.rhs)
        if not matrices:
            raise SolverError("constraint system has no rows")
        return sparse.vstack(matrices, format="csr"), np.concatenate(rhs)

    @property
    def row_tags(self):
        return np.concatenate(
            [np.full(len(b), b.kind, dtype=object) for b in self.blocks if len(b)]
        )

    def objective(self, z):
        return float(
            sum(self.weight(b.kind) ** 2 * np.sum(b.residual(z) ** 2) for b in self.blocks if len(b))
        )

    def describe(self):
        counts = {}
        for block in self.blocks:
            counts[block.kind] = counts.get(block.kind, 0) + len(block)
        return ", ".join(f"{kind}={count}" for kind, count in counts.items())


def solve_height(system):
    """Least-squares heights with the mask mean pinned to zero.

    The first unknown is fixed while solving the normal equations, which
    removes the constant null space of gradient-only rows.
    """
    matrix, rhs = system.assemble()
    n = system.ops.size
    if matrix.shape[0] < n - 1:
        logger.debug("Underdetermined system: %d rows for %d unknowns", matrix.shape[0], n)
    reduced = matrix[:, 1:].tocsc()
    normal = (reduced.T @ reduced).tocsc()
    target = reduced.T @ rhs
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            solution = splu(normal).solve(target)
    except (RuntimeError, MatrixRankWarning) as exc:
        raise SolverError(f"height system is rank deficient ({system.describe()})") from exc

    z = np.concatenate([[0.0], solution])
    if not np.all(np.isfinite(z)):
        raise SolverError(f"height solve produced non-finite values ({system.describe()})")
    drift = np.linalg.norm(normal @ solution - target)
    if drift > 1e-6 * (np.linalg.norm(target) + 1.0):
        raise SolverError(
            f"height solve is numerically singular, normal-equation residual {drift:.3g} "
            f"({system.describe()})"
        )
    logger.debug("Solved %d unknowns from %d rows (%s)", n, matrix.shape[0], system.describe())
    return z - z.mean()


def _dop_objective(rho, theta):
    def objective(eta):
        return float(np.sum((rho - dop_from_zenith(theta, eta)) ** 2))

    return objective


def refit_material(rho_est, zenith_from_height, mask, current, intensity=None, shading=None):
    """Bounded 1-D refit of eta against the DOP model, closed-form albedo refit.

    The albedo is only refit when both the intensity and the Lambertian
    shading ``n . l`` are given. A flat objective keeps the current eta.
    """
    mask = np.asarray(mask, dtype=bool)
    rho = np.asarray(rho_est, dtype=float)
    theta = np.asarray(zenith_from_height, dtype=float)
    valid = mask & np.isfinite(rho) & np.isfinite(theta) & (theta >= 0) & (theta < math.pi / 2)
    if int(valid.sum()) < MIN_REFIT_PIXELS:
        logger.info("Material refit skipped: %d valid pixels", int(valid.sum()))
        return current

    rho, theta = rho[valid], np.minimum(theta[valid], THETA_CAP)
    objective = _dop_objective(rho, theta)
    fit = minimize_scalar(objective, bounds=ETA_BOUNDS, method="bounded", options={"xatol": 1e-8})
    eta = current.eta
    at_current = objective(current.eta)
    if at_current - fit.fun > 1e-12 * (1.0 + at_current):
        eta = float(fit.x)

    albedo = current.albedo
    if intensity is not None and shading is not None:
        values = np.asarray(intensity, dtype=float)[valid]
        s = np.asarray(shading, dtype=float)[valid]
        lit = s > 1e-6
        if int(lit.sum()) >= MIN_REFIT_PIXELS:
            albedo = float(np.clip(np.sum(values[lit] * s[lit]) / np.sum(s[lit] ** 2), 1e-6, 1.0))
    return MaterialParams(eta=eta, albedo=albedo)


def build_region_system(polar, zenith, prior_normals, prior_weights, illum, material, ops, config):
    blocks = [
        azimuth_rows(polar.aop, ops, form=config.azimuth_form),
        mfcp_rows(prior_normals, prior_weights, zenith, ops),
        laplacian_rows(ops),
    ]
    if config.use_intensity_rows:
        blocks.insert(1, intensity_ratio_rows(polar.intensity, zenith, illum, material.albedo, ops))
    return ConstraintSystem(ops=ops, blocks=tuple(blocks), weights=config.weights)


def _zenith_raster(dop, mask, eta):
    rho = np.clip(np.where(mask, dop, 0.0), 0.0, 1.0)
    capped = count_capped(rho[mask], eta)
    if capped:
        logger.debug("%d pixels exceed the DOP of the zenith cap at eta=%.4f", capped, eta)
    return np.where(mask, zenith_from_dop(rho, eta), 0.0)


def reconstruct_region(polar, mask, prior, config, label=1):
    """Alternate height solves with zenith and material re-estimation.

    Stops when the largest height change falls below ``tolerance`` times the
    height range, or after ``max_iterations`` solves; running out of
    iterations is reported, not raised.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise InvalidInputError(f"region {label} is empty")
    ops = build_gradient_operators(mask, config.gradient_sigma)
    material = config.material()
    z_prev = np.zeros(ops.size)
    objectives = []
    converged = False
    illum = None
    z = z_prev

    for iteration in range(1, config.max_iterations + 1):
        zenith = _zenith_raster(polar.dop, mask, material.eta)
        prior_normals = implicit_normals(prior.phi, zenith, mask)
        if config.light is not None:
            illum = Illumination(direction=config.light, view=config.view)
        else:
            illum = estimate_illumination(
                polar.intensity, prior_normals, material.albedo, mask, view=config.view
            )

        system = build_region_system(
            polar, zenith, prior_normals, prior.weights, illum, material, ops, config
        )
        z = solve_height(system)
        objective = system.objective(z)
        objectives.append(objective)

        normals = normals_from_height(ops.rasterize(z), ops)
        cos_z = np.clip(normals @ np.asarray(illum.view), -1.0, 1.0)
        zenith_z = np.where(mask, np.arccos(cos_z), 0.0)
        if config.refit_material:
            shading = normals @ np.asarray(illum.direction)
            material = refit_material(
                polar.dop, zenith_z, mask, material, intensity=polar.intensity, shading=shading
            )

        delta = float(np.max(np.abs(z - z_prev)))
        span = float(np.ptp(z))
        iteration_logger.debug(
            json.dumps(
                {
                    "region": label,
                    "iteration": iteration,
                    "objective": objective,
                    "eta": material.eta,
                    "albedo": material.albedo,
                    "max_height_delta": delta,
                },
                sort_keys=True,
            )
        )
        z_prev = z
        if delta <= config.tolerance * span + 1e-12:
            converged = True
            break

    if not converged:
        logger.info("Region %d stopped after %d iterations without converging", label, iteration)
    height = ops.rasterize(z)
    return RegionReconstruction(
        label=label,
        height=height,
        normals=normals_from_height(height, ops),
        material=material,
        converged=converged,
        iterations=iteration,
        objectives=tuple(objectives),
        illumination=illum,
    )
