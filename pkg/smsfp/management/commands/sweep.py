import dataclasses
import itertools
from pathlib import Path

from ...domain import SolverWeights
from ...evaluation import THRESHOLDS, accuracy_key, evaluate_normals
from ...exceptions import InvalidInputError
from ...imageio import load_stack, read_mask_png, read_pfm, write_csv
from ...pipeline import run_smsfp
from ..base import SmsfpCommand, float_list


def parse_scales(text):
    sets = []
    for item in text.split(","):
        try:
            sets.append(tuple(int(v) for v in item.split("-")))
        except ValueError as exc:
            raise InvalidInputError(f"bad scale set {item!r}; use e.g. 8-16-32") from exc
    return sets


def parse_weights(text):
    sets = []
    for item in text.split(","):
        try:
            values = [float(v) for v in item.split(":")]
        except ValueError as exc:
            raise InvalidInputError(f"bad weight tuple {item!r}; use az:int:mfcp:lap") from exc
        if len(values) != 4:
            raise InvalidInputError(f"weight tuple {item!r} needs four values")
        sets.append(SolverWeights(*values))
    return sets


def parse_switch(text):
    values = {"on": True, "off": False}
    try:
        return [values[v.strip()] for v in text.split(",")]
    except KeyError as exc:
        raise InvalidInputError(f"segmentation takes on/off values, got {text!r}") from exc


class Command(SmsfpCommand):
    help = "Grid-search reconstruction parameters and tabulate the angular errors."

    def add_command_arguments(self, parser):
        parser.add_argument("--stack", required=True, help="Directory holding i000..i135.")
        parser.add_argument("--gt", required=True, help="Ground-truth normals (PFM).")
        parser.add_argument("--mask", required=True, help="Evaluation mask (PNG).")
        parser.add_argument("--rim", type=int, default=1)
        parser.add_argument("--tau", help="Comma list of region-growing thresholds.")
        parser.add_argument("--scales", help="Comma list of block-size sets, e.g. 8-16-32,16-32.")
        parser.add_argument("--gamma", help="Comma list of range-mapping exponents.")
        parser.add_argument("--weights", help="Comma list of az:int:mfcp:lap weight tuples.")
        parser.add_argument("--segmentation", help="Comma list of on/off.")

    def execute_command(self, **options):
        for key in ("gt", "mask"):
            if not Path(options[key]).is_file():
                raise InvalidInputError(f"{options[key]} does not exist")
        stack = load_stack(options["stack"])
        gt = read_pfm(options["gt"])
        mask = read_mask_png(options["mask"])
        base = self.config

        taus = float_list(options["tau"]) if options["tau"] else [base.seg.tau]
        scales = parse_scales(options["scales"]) if options["scales"] else [base.scales.block_sizes]
        gammas = float_list(options["gamma"]) if options["gamma"] else [base.scales.gamma]
        weights = parse_weights(options["weights"]) if options["weights"] else [base.weights]
        switches = (
            parse_switch(options["segmentation"]) if options["segmentation"] else [base.segmentation]
        )

        rows = []
        for tau, blocks, gamma, weight, segmentation in itertools.product(
            taus, scales, gammas, weights, switches
        ):
            config = base.replace(
                seg=dataclasses.replace(base.seg, tau=tau),
                scales=dataclasses.replace(base.scales, block_sizes=blocks, gamma=gamma),
                weights=weight,
                segmentation=segmentation,
            )
            result = run_smsfp(stack, config)
            report = evaluate_normals(result.normals, gt, mask, rim=options["rim"])
            rows.append(
                {
                    "tau": tau,
                    "scales": "-".join(str(b) for b in blocks),
                    "gamma": gamma,
                    "weights": ":".join(f"{v:g}" for v in dataclasses.astuple(weight)),
                    "segmentation": "on" if segmentation else "off",
                    "region_count": result.labels.region_count,
                    "mae_deg": report.mae_deg,
                    "rmse_deg": report.rmse_deg,
                    **report.accuracies,
                    "n_pixels": report.n_pixels,
                }
            )
            self.stdout.write(f"{rows[-1]['scales']} tau={tau:g}: MAE {report.mae_deg:.3f}")

        columns = [
            "tau",
            "scales",
            "gamma",
            "weights",
            "segmentation",
            "region_count",
            "mae_deg",
            "rmse_deg",
            *(accuracy_key(t) for t in THRESHOLDS),
            "n_pixels",
        ]
        write_csv(self.out_dir / "sweep.csv", columns, rows)
        self.done(f"Swept {len(rows)} configurations into {self.out_dir / 'sweep.csv'}")
