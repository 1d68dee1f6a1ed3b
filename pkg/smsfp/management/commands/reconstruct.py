import logging

import numpy as np

from ...exceptions import InvalidInputError
from ...imageio import (
    atomic_path,
    load_stack,
    read_pfm,
    write_json,
    write_labels_png,
    write_pfm,
    write_rgb_png,
)
from ...mfcp import build_prior
from ...pipeline import connected_regions, run_smsfp
from ...polarimetry import decompose_stack
from ..base import SmsfpCommand


def normals_rgb(normals, mask):
    return np.where(mask[..., None], (normals + 1.0) / 2.0, 0.0)


class Command(SmsfpCommand):
    help = "Reconstruct height and normals from a polarized stack."

    def add_command_arguments(self, parser):
        parser.add_argument("--stack", required=True, help="Directory holding i000..i135.")
        parser.add_argument(
            "--oracle-normals",
            help="Normal map (PFM) whose azimuths replace the convexity prior azimuths.",
        )
        parser.add_argument(
            "--dump-priors",
            action="store_true",
            help="Write each region's prior azimuth and weights.",
        )

    def execute_command(self, **options):
        stack = load_stack(options["stack"])
        oracle = None
        if options["oracle_normals"]:
            normals = read_pfm(options["oracle_normals"])
            if normals.shape != (*stack.shape, 3):
                raise InvalidInputError(
                    f"oracle normals are {normals.shape}, the stack is {stack.shape}"
                )
            oracle = np.arctan2(normals[..., 1], normals[..., 0])

        if self.verbose:
            result = self._run_logging_iterations(stack, oracle)
        else:
            result = run_smsfp(stack, self.config, oracle_azimuth=oracle)

        mask = stack.mask
        write_pfm(self.out_dir / "height.pfm", result.height)
        write_pfm(self.out_dir / "normals.pfm", result.normals)
        write_rgb_png(self.out_dir / "normals.png", normals_rgb(result.normals, mask))
        write_labels_png(self.out_dir / "labels.png", result.labels.labels)

        # Timing varies run to run; written files must not.
        diagnostics = {k: v for k, v in result.diagnostics.items() if k != "timing"}
        diagnostics["config"] = self.config.to_dict()
        write_json(self.out_dir / "diagnostics.json", diagnostics)

        if options["dump_priors"]:
            self._dump_priors(stack, result.labels)
        self.done(
            f"Reconstructed {result.labels.region_count} regions into {self.out_dir}"
        )

    def _run_logging_iterations(self, stack, oracle):
        iterations = logging.getLogger("smsfp.solver.iterations")
        with atomic_path(self.out_dir / "iterations.jsonl") as tmp:
            handler = logging.FileHandler(tmp, encoding="utf-8")
            handler.setFormatter(logging.Formatter("%(message)s"))
            iterations.addHandler(handler)
            try:
                return run_smsfp(stack, self.config, oracle_azimuth=oracle)
            finally:
                iterations.removeHandler(handler)
                handler.close()

    def _dump_priors(self, stack, labels):
        polar = decompose_stack(stack)
        components = connected_regions(stack.mask).labels
        report = {}
        for k in range(1, labels.region_count + 1):
            region = labels.labels == k
            if not region.any():
                continue
            source = None
            if self.config.prior_mask == "global":
                source = components == components[region][0]
            prior = build_prior(
                polar.aop,
                region,
                self.config.scales,
                decay_rate=self.config.decay_rate,
                mask_sigma=self.config.mask_sigma,
                prior_mask=source,
            )
            write_pfm(self.out_dir / f"prior_phi_{k}.pfm", prior.phi)
            write_pfm(self.out_dir / f"prior_weights_{k}.pfm", prior.weights.w_con)
            report[str(k)] = {str(size): weight for size, weight in prior.scale_weights}
        write_json(self.out_dir / "scale_weights.json", report)
