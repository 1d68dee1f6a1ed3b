from ...imageio import load_stack, write_json, write_labels_png
from ...polarimetry import decompose_stack
from ...segmentation import segment
from ..base import SmsfpCommand


class Command(SmsfpCommand):
    help = "Partition the stack mask into regions of similar polarization."

    def add_command_arguments(self, parser):
        parser.add_argument("--stack", required=True, help="Directory holding i000..i135.")

    def execute_command(self, **options):
        stack = load_stack(options["stack"])
        labels = segment(decompose_stack(stack), stack.mask, self.config.seg)
        write_labels_png(self.out_dir / "labels.png", labels.labels)
        write_json(
            self.out_dir / "labels.json",
            {
                "region_count": labels.region_count,
                "region_sizes": {str(k): n for k, n in labels.region_sizes().items()},
                "seg": self.config.to_dict()["seg"],
            },
        )
        self.done(f"Found {labels.region_count} regions")
