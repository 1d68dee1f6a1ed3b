from ...diffuse_model import ClosedFormReport, validate_closed_form_inverse
from ...imageio import load_stack, write_csv, write_json, write_pfm
from ...polarimetry import decompose_stack
from ..base import SmsfpCommand


class Command(SmsfpCommand):
    help = "Split a four-angle stack into intensity, DOP and AOP maps."

    def add_command_arguments(self, parser):
        parser.add_argument("--stack", required=True, help="Directory holding i000..i135.")
        parser.add_argument(
            "--closed-form-report",
            type=float,
            metavar="ETA",
            help="Also compare the closed-form zenith inverse with bisection at ETA.",
        )

    def execute_command(self, **options):
        stack = load_stack(options["stack"])
        polar = decompose_stack(stack)
        write_pfm(self.out_dir / "intensity.pfm", polar.intensity)
        write_pfm(self.out_dir / "dop.pfm", polar.dop)
        write_pfm(self.out_dir / "aop.pfm", polar.aop)
        summary = {
            "shape": list(stack.shape),
            "mask_pixels": int(stack.mask.sum()),
            "clamped": polar.clamped,
        }

        eta = options["closed_form_report"]
        if eta is not None:
            report = validate_closed_form_inverse(eta)
            write_csv(self.out_dir / "closed_form.csv", ClosedFormReport.columns, report.rows)
            summary["closed_form"] = {
                "eta": eta,
                "negative_radicands": report.negative_radicands,
                "max_abs_err": report.max_abs_err,
            }

        write_json(self.out_dir / "decompose.json", summary)
        self.done(f"Decomposed {options['stack']} into {self.out_dir}")
