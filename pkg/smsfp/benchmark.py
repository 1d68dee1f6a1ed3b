"""Render-reconstruct-evaluate runs on synthetic scenes."""

import logging

from .conf import build_config
from .domain import Illumination, MaterialParams
from .evaluation import evaluate_normals
from .pipeline import run_smsfp
from .renderer import make_scene, render_polarized

logger = logging.getLogger(__name__)


def run_benchmark(
    scene_kind="hemisphere",
    grid=64,
    seed=0,
    noise_sigma=0.0,
    eta=1.5,
    albedo=0.8,
    light=(0.0, 0.0, 1.0),
    overrides=None,
    rim=1,
):
    """Outcome fields of one run: region count, convergence and the error report."""
    config = build_config(overrides)
    scene = make_scene(scene_kind, grid=grid)
    stack = render_polarized(
        scene,
        MaterialParams(eta=eta, albedo=albedo),
        Illumination(direction=tuple(light)),
        noise_sigma=noise_sigma,
        seed=seed,
    )
    result = run_smsfp(stack, config)
    report = evaluate_normals(result.normals, scene.normals, stack.mask, rim=rim)
    outcome = {
        "region_count": result.labels.region_count,
        "converged": bool(result.diagnostics["converged"]),
        "mae_deg": report.mae_deg,
        "rmse_deg": report.rmse_deg,
        "n_pixels": report.n_pixels,
        **report.accuracies,
    }
    logger.info("Benchmark %s@%d: MAE %.3f deg", scene_kind, grid, report.mae_deg)
    return outcome
