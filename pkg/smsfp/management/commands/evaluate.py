from pathlib import Path

from ...evaluation import THRESHOLDS, evaluate_normals, write_error_map
from ...exceptions import InvalidInputError
from ...imageio import read_mask_png, read_pfm, write_json
from ..base import SmsfpCommand


class Command(SmsfpCommand):
    help = "Score an estimated normal map against ground truth."

    def add_command_arguments(self, parser):
        parser.add_argument("--est", required=True, help="Estimated normals (PFM).")
        parser.add_argument("--gt", required=True, help="Ground-truth normals (PFM).")
        parser.add_argument("--mask", required=True, help="Evaluation mask (PNG).")
        parser.add_argument("--rim", type=int, default=1, help="Silhouette band to skip.")
        parser.add_argument("--include-rim", action="store_true")

    def execute_command(self, **options):
        for key in ("est", "gt", "mask"):
            if not Path(options[key]).is_file():
                raise InvalidInputError(f"{options[key]} does not exist")
        est = read_pfm(options["est"])
        gt = read_pfm(options["gt"])
        mask = read_mask_png(options["mask"])
        rim = 0 if options["include_rim"] else options["rim"]

        report = evaluate_normals(est, gt, mask, rim=rim)
        write_json(
            self.out_dir / "report.json",
            report.to_dict(config_echo={"rim": rim, "thresholds": list(THRESHOLDS)}),
        )
        write_error_map(self.out_dir / "error_map.png", report.error_map, mask)
        self.done(f"MAE {report.mae_deg:.3f} deg over {report.n_pixels} pixels")
