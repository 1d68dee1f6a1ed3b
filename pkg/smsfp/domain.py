"""
Value types shared by the reconstruction modules.

Rasters are plain ``numpy`` arrays indexed ``[row, column]``; image x runs
along columns and image y along rows. A normal map is an ``(H, W, 3)`` float
array that is zero off the mask.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError

POLARIZER_ANGLES = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)

# Refits keep eta inside this interval so the diffuse model stays well conditioned.
ETA_BOUNDS = (1.05, 3.0)

DEFAULT_VIEW = (0.0, 0.0, 1.0)


def _unit(vector, name):
    v = np.asarray(vector, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} must be a finite 3-vector, got {vector!r}")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise InvalidInputError(f"{name} must be non-zero")
    return tuple(float(c) for c in v / norm)


@dataclass(frozen=True)
class PolarizedStack:
    """Four co-registered intensity images at 0, 45, 90 and 135 degrees."""

    images: tuple
    mask: np.ndarray
    angles: tuple = POLARIZER_ANGLES

    @property
    def shape(self):
        return self.mask.shape


@dataclass(frozen=True)
class StokesMaps:
    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray

    @property
    def s3(self):
        # Linear analysis only.
        return np.zeros_like(self.s0)


@dataclass(frozen=True)
class PolarMaps:
    """Average intensity, degree of polarization and angle of polarization."""

    intensity: np.ndarray
    dop: np.ndarray
    aop: np.ndarray
    clamped: int = 0


@dataclass(frozen=True)
class MaterialParams:
    eta: float = 1.15
    albedo: float = 0.8

    def __post_init__(self):
        if not self.eta > 1.0:
            raise InvalidInputError(f"refractive index must exceed 1, got {self.eta}")
        if not 0.0 < self.albedo <= 1.0:
            raise InvalidInputError(f"albedo must lie in (0, 1], got {self.albedo}")


@dataclass(frozen=True)
class Illumination:
    """Light and view directions in camera coordinates (z toward the camera)."""

    direction: tuple
    view: tuple = DEFAULT_VIEW
    estimated: bool = False
    fallback: bool = False

    def __post_init__(self):
        object.__setattr__(self, "direction", _unit(self.direction, "light direction"))
        object.__setattr__(self, "view", _unit(self.view, "view direction"))

    @property
    def separation(self):
        """Angle in radians between light and view."""
        l, v = np.asarray(self.direction), np.asarray(self.view)
        return float(np.arctan2(np.linalg.norm(np.cross(l, v)), np.dot(l, v)))

    @property
    def distinct(self):
        return self.separation >= 1e-6


@dataclass(frozen=True)
class SegConfig:
    tau: float = 0.35
    lambda_rho: float = 2.0
    lambda_phi: float = 2.0
    window: int = 5
    min_region_px: int = 400
    seed_grid_stride: int = 32
    connectivity: int = 4
    seed_update: str = "mean"
    merge_tol: float = 1e-6
    smoothing_sigma: float = 1.0
    crease_closing: int = 2

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidInputError("tau must be positive")
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidInputError("window must be odd and at least 3")
        if self.lambda_rho < 0 or self.lambda_phi < 0:
            raise InvalidInputError("adaptive strengths must be non-negative")
        if self.connectivity not in (4, 8):
            raise InvalidInputError("connectivity must be 4 or 8")
        if self.seed_update not in ("mean", "fixed"):
            raise InvalidInputError("seed_update must be 'mean' or 'fixed'")
        if self.seed_grid_stride < 1:
            raise InvalidInputError("seed_grid_stride must be positive")
        if self.crease_closing < 0:
            raise InvalidInputError("crease_closing must be non-negative")


@dataclass(frozen=True)
class ScaleSet:
    block_sizes: tuple = (8, 16, 32)
    gamma: float = 0.5
    fuse: str = "mapped"
    variance_source: str = "azimuth"

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if not sizes or sizes[0] < 2 or any(b >= c for b, c in zip(sizes, sizes[1:])):
            raise InvalidInputError("block sizes must be >= 2 and strictly increasing")
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidInputError("gamma must lie in (0, 1]")
        if self.fuse not in ("mapped", "implicit"):
            raise InvalidInputError("fuse must be 'mapped' or 'implicit'")
        if self.variance_source not in ("azimuth", "implicit"):
            raise InvalidInputError("variance_source must be 'azimuth' or 'implicit'")


@dataclass(frozen=True)
class SolverWeights:
    azimuth: float = 1.0
    intensity: float = 0.5
    mfcp: float = 1.0
    laplacian: float = 0.1

    def __post_init__(self):
        if min(self.azimuth, self.intensity, self.mfcp, self.laplacian) < 0:
            raise InvalidInputError("constraint weights must be non-negative")

    def for_kind(self, kind):
        return getattr(self, kind)


@dataclass(frozen=True)
class FeatureField:
    """Per-pixel ``[rho, cos 2phi, sin 2phi, |grad phi|]`` stacked on axis 0."""

    channels: np.ndarray
    mask: np.ndarray


@dataclass(frozen=True)
class RegionLabels:
    labels: np.ndarray
    region_count: int

    def region_sizes(self):
        counts = np.bincount(self.labels.ravel(), minlength=self.region_count + 1)
        return {k: int(counts[k]) for k in range(1, self.region_count + 1)}


@dataclass(frozen=True)
class ImplicitAzimuthMap:
    phi_im: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class ConvexityWeights:
    w_con: np.ndarray
    decay_rate: float


@dataclass(frozen=True)
class RegionPrior:
    """Convexity prior for one region: fused azimuth and confidence weights."""

    phi: np.ndarray
    weights: ConvexityWeights
    scale_weights: tuple = ()


@dataclass(frozen=True)
class ReconstructionConfig:
    albedo0: float = 0.8
    eta0: float = 1.15
    view: tuple = DEFAULT_VIEW
    light: tuple | None = None
    seg: SegConfig = field(default_factory=SegConfig)
    scales: ScaleSet = field(default_factory=ScaleSet)
    weights: SolverWeights = field(default_factory=SolverWeights)
    segmentation: bool = True
    prior_mask: str = "region"
    azimuth_form: str = "geometric"
    use_intensity_rows: bool = True
    refit_material: bool = True
    gradient_sigma: float = 0.5
    mask_sigma: float = 2.0
    decay_rate: float = 0.15
    max_iterations: int = 10
    tolerance: float = 1e-4
    guided_radius: int = 8
    guided_eps: float = 1e-3
    max_workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "view", _unit(self.view, "view direction"))
        if self.light is not None:
            object.__setattr__(self, "light", _unit(self.light, "light direction"))
        if self.prior_mask not in ("region", "global"):
            raise InvalidInputError("prior_mask must be 'region' or 'global'")
        if self.azimuth_form not in ("geometric", "printed"):
            raise InvalidInputError("azimuth_form must be 'geometric' or 'printed'")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be at least 1")
        if self.max_workers < 1:
            raise InvalidInputError("max_workers must be at least 1")
        # Validates albedo0 / eta0.
        self.material()

    def material(self):
        return MaterialParams(eta=self.eta0, albedo=self.albedo0)

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["view"] = list(self.view)
        data["light"] = None if self.light is None else list(self.light)
        data["scales"]["block_sizes"] = list(self.scales.block_sizes)
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "seg" in data:
            data["seg"] = SegConfig(**data["seg"])
        if "scales" in data:
            data["scales"] = ScaleSet(**data["scales"])
        if "weights" in data:
            data["weights"] = SolverWeights(**data["weights"])
        for key in ("view", "light"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RegionReconstruction:
    label: int
    height: np.ndarray
    normals: np.ndarray
    material: MaterialParams
    converged: bool
    iterations: int
    objectives: tuple = ()
    illumination: Illumination | None = None
    failed: bool = False


@dataclass(frozen=True)
class ReconstructionResult:
    height: np.ndarray
    normals: np.ndarray
    labels: RegionLabels
    materials: dict
    diagnostics: dict


@dataclass(frozen=True)
class AnalyticScene:
    kind: str
    params: dict
    height: np.ndarray
    normals: np.ndarray
    zenith: np.ndarray
    azimuth: np.ndarray
    mask: np.ndarray


@dataclass(frozen=True)
class EvalReport:
    mae_deg: float
    rmse_deg: float
    accuracies: dict
    n_pixels: int
    error_map: np.ndarray = field(repr=False, default=None)

    def to_dict(self, config_echo=None):
        report = {"mae_deg": self.mae_deg, "rmse_deg": self.rmse_deg}
        report.update(self.accuracies)
        report["n_pixels"] = self.n_pixels
        report["config_echo"] = config_echo if config_echo is not None else {}
        return report
