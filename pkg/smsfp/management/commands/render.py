import numpy as np

from ...domain import Illumination, MaterialParams
from ...imageio import save_stack, write_json, write_pfm
from ...renderer import AMBIGUITY_MODES, SCENE_KINDS, make_scene, render_polar_maps, render_polarized
from ..base import SmsfpCommand


class Command(SmsfpCommand):
    help = "Render a polarized image stack of an analytic scene with its ground truth."

    def add_command_arguments(self, parser):
        parser.add_argument("--kind", choices=SCENE_KINDS, default="hemisphere")
        parser.add_argument("--grid", type=int, default=256)
        parser.add_argument("--eta", type=float, default=1.5)
        parser.add_argument("--albedo", type=float, default=0.8)
        parser.add_argument("--light", type=float, nargs=3, default=[0.0, 0.0, 1.0])
        parser.add_argument("--noise", type=float, default=0.0)
        parser.add_argument("--ambiguity", choices=AMBIGUITY_MODES, default="parallel")
        parser.add_argument("--format", choices=["pfm", "png16"], default="pfm")
        parser.add_argument("--radius", type=float)
        parser.add_argument("--center", type=float, nargs=2, metavar=("CX", "CY"))
        parser.add_argument("--curvature", type=float, nargs=2, metavar=("A", "B"))
        parser.add_argument("--slope", type=float, nargs=2, metavar=("A", "B"))

    def execute_command(self, **options):
        params = {
            key: options[key]
            for key in ("radius", "center", "curvature", "slope")
            if options[key] is not None
        }
        scene = make_scene(options["kind"], params, options["grid"])
        material = MaterialParams(eta=options["eta"], albedo=options["albedo"])
        illum = Illumination(direction=options["light"])
        stack = render_polarized(
            scene,
            material,
            illum,
            ambiguity=options["ambiguity"],
            noise_sigma=options["noise"],
            seed=self.seed,
        )

        scale = save_stack(self.out_dir, stack, fmt=options["format"])
        write_pfm(self.out_dir / "gt_height.pfm", scene.height)
        write_pfm(self.out_dir / "gt_normals.pfm", scene.normals)

        polar, lit = render_polar_maps(scene, material, illum, options["ambiguity"])
        zenith = np.where(lit, scene.zenith, np.inf)
        apex = np.unravel_index(int(np.argmin(zenith)), zenith.shape)
        write_json(
            self.out_dir / "manifest.json",
            {
                "scene": scene.kind,
                "params": scene.params,
                "material": {"eta": material.eta, "albedo": material.albedo},
                "light": list(illum.direction),
                "ambiguity": options["ambiguity"],
                "noise_sigma": options["noise"],
                "seed": self.seed,
                "format": options["format"],
                "png_scale": scale,
                "mask_pixels": int(stack.mask.sum()),
                "apex": {
                    "row": int(apex[0]),
                    "col": int(apex[1]),
                    "dop": float(polar.dop[apex]),
                },
            },
        )
        self.done(f"Rendered {scene.kind} ({options['grid']}px) to {self.out_dir}")
