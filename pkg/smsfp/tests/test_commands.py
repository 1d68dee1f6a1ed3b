import io
import json
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase

from smsfp.cli import cli_main
from smsfp.imageio import read_json, read_mask_png, read_pfm, write_json


def run_cli(*argv):
    with redirect_stdout(io.StringIO()), redirect_stderr(io.StringIO()) as err:
        code = cli_main(list(argv))
    return code, err.getvalue()


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.root = Path(self._tmp.name)

    def render(self, name="scene", grid=33, *extra):
        out = self.root / name
        code, err = run_cli("render", "--grid", str(grid), "--out", str(out), *extra)
        self.assertEqual(code, 0, err)
        return out


class RenderCommandTest(CommandTestCase):
    """
    Test suite for the render subcommand.
    """

    def test_writes_stack_and_ground_truth(self):
        out = self.render()
        for name in ("i000", "i045", "i090", "i135", "gt_height", "gt_normals"):
            self.assertTrue((out / f"{name}.pfm").is_file(), name)
        self.assertEqual(read_pfm(out / "gt_normals.pfm").shape, (33, 33, 3))
        self.assertTrue(read_mask_png(out / "mask.png")[16, 16])

    def test_manifest_apex_is_unpolarized(self):
        """
        Ensure the manifest records the hemisphere apex with zero DOP.
        """
        manifest = read_json(self.render() / "manifest.json")
        self.assertEqual(manifest["scene"], "hemisphere")
        self.assertEqual((manifest["apex"]["row"], manifest["apex"]["col"]), (16, 16))
        self.assertEqual(manifest["apex"]["dop"], 0.0)
        self.assertEqual(manifest["params"]["grid"], 33)

    def test_png16_stack(self):
        out = self.render("png", 33, "--format", "png16")
        self.assertTrue((out / "i000.png").is_file())
        self.assertGreater(read_json(out / "manifest.json")["png_scale"], 0)

    def test_bad_radius_is_invalid_input(self):
        code, err = run_cli("render", "--grid", "32", "--radius", "40", "--out", str(self.root))
        self.assertEqual(code, 2)
        self.assertIn("radius", err)

    def test_negative_seed(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("render", grid=16, seed=-1, out=str(self.root), stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, 2)


class DecomposeAndSegmentCommandTest(CommandTestCase):
    def test_decompose_writes_polar_maps(self):
        stack = self.render()
        out = self.root / "polar"
        code, err = run_cli("decompose", "--stack", str(stack), "--out", str(out))
        self.assertEqual(code, 0, err)
        intensity = read_pfm(out / "intensity.pfm")
        self.assertAlmostEqual(float(intensity[16, 16]), 0.8, places=6)
        self.assertTrue((out / "dop.pfm").is_file())
        self.assertTrue((out / "aop.pfm").is_file())

    def test_segment_writes_labels(self):
        stack = self.render()
        out = self.root / "labels"
        code, err = run_cli("segment", "--stack", str(stack), "--out", str(out))
        self.assertEqual(code, 0, err)
        self.assertTrue((out / "labels.png").is_file())
        self.assertGreaterEqual(read_json(out / "labels.json")["region_count"], 1)

    def test_missing_stack_directory(self):
        code, _ = run_cli("decompose", "--stack", str(self.root / "nowhere"), "--out", str(self.root))
        self.assertEqual(code, 2)


class ReconstructCommandTest(CommandTestCase):
    """
    Test suite for the reconstruct subcommand.
    """

    def test_outputs_are_byte_identical_across_runs(self):
        """
        Ensure two runs with the same inputs write identical files.
        """
        stack = self.render()
        outputs = []
        for name in ("first", "second"):
            out = self.root / name
            code, err = run_cli("reconstruct", "--stack", str(stack), "--out", str(out))
            self.assertEqual(code, 0, err)
            outputs.append(out)
        for name in ("height.pfm", "normals.pfm", "normals.png", "labels.png", "diagnostics.json"):
            self.assertEqual(
                (outputs[0] / name).read_bytes(), (outputs[1] / name).read_bytes(), name
            )
        diagnostics = read_json(outputs[0] / "diagnostics.json")
        self.assertNotIn("timing", diagnostics)
        self.assertIn("config", diagnostics)

    def test_oracle_normals_and_priors(self):
        stack = self.render()
        out = self.root / "oracle"
        code, err = run_cli(
            "reconstruct",
            "--stack", str(stack),
            "--oracle-normals", str(stack / "gt_normals.pfm"),
            "--dump-priors",
            "--out", str(out),
        )
        self.assertEqual(code, 0, err)
        self.assertTrue(read_json(out / "diagnostics.json")["oracle_azimuth"])
        self.assertTrue((out / "scale_weights.json").is_file())
        self.assertTrue(list(out.glob("prior_phi_*.pfm")))

    def test_config_file_overlay(self):
        stack = self.render()
        config = self.root / "config.json"
        write_json(config, {"segmentation": False, "max_iterations": 3})
        out = self.root / "configured"
        code, err = run_cli(
            "reconstruct", "--stack", str(stack), "--config", str(config), "--out", str(out)
        )
        self.assertEqual(code, 0, err)
        echoed = read_json(out / "diagnostics.json")["config"]
        self.assertFalse(echoed["segmentation"])
        self.assertEqual(echoed["max_iterations"], 3)

    def test_unknown_config_key(self):
        stack = self.render()
        config = self.root / "config.json"
        config.write_text(json.dumps({"iterations": 3}), encoding="utf-8")
        code, err = run_cli("reconstruct", "--stack", str(stack), "--config", str(config))
        self.assertEqual(code, 2)
        self.assertIn("iterations", err)


class EvaluateCommandTest(CommandTestCase):
    def test_ground_truth_against_itself(self):
        stack = self.render()
        out = self.root / "eval"
        code, err = run_cli(
            "evaluate",
            "--est", str(stack / "gt_normals.pfm"),
            "--gt", str(stack / "gt_normals.pfm"),
            "--mask", str(stack / "mask.png"),
            "--out", str(out),
        )
        self.assertEqual(code, 0, err)
        report = read_json(out / "report.json")
        self.assertLess(report["mae_deg"], 0.1)
        self.assertEqual(report["acc_11_25"], 1.0)
        self.assertTrue((out / "error_map.png").is_file())

    def test_size_mismatch_exits_with_invalid_input(self):
        small = self.render("small", 33)
        large = self.render("large", 35)
        code, _ = run_cli(
            "evaluate",
            "--est", str(small / "gt_normals.pfm"),
            "--gt", str(large / "gt_normals.pfm"),
            "--mask", str(small / "mask.png"),
            "--out", str(self.root / "eval"),
        )
        self.assertEqual(code, 2)
        self.assertFalse((self.root / "eval" / "report.json").exists())


class SweepCommandTest(CommandTestCase):
    def test_one_row_per_configuration(self):
        stack = self.render()
        out = self.root / "sweep"
        code, err = run_cli(
            "sweep",
            "--stack", str(stack),
            "--gt", str(stack / "gt_normals.pfm"),
            "--mask", str(stack / "mask.png"),
            "--segmentation", "off,on",
            "--out", str(out),
        )
        self.assertEqual(code, 0, err)
        lines = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[0].startswith("tau,scales,gamma,weights,segmentation"))

    def test_bad_weight_tuple(self):
        stack = self.render()
        code, _ = run_cli(
            "sweep",
            "--stack", str(stack),
            "--gt", str(stack / "gt_normals.pfm"),
            "--mask", str(stack / "mask.png"),
            "--weights", "1:2:3",
        )
        self.assertEqual(code, 2)


class RepeatedRunTest(CommandTestCase):
    """
    Test suite for byte-identical output of repeated command runs.
    """

    def assertSameDirectories(self, first, second):
        names = sorted(p.name for p in first.iterdir())
        self.assertEqual(names, sorted(p.name for p in second.iterdir()))
        self.assertTrue(names)
        for name in names:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

    def twice(self, *argv):
        outputs = []
        for name in ("first", "second"):
            out = self.root / f"{argv[0]}-{name}"
            code, err = run_cli(*argv, "--out", str(out))
            self.assertEqual(code, 0, err)
            outputs.append(out)
        self.assertSameDirectories(*outputs)
        return outputs[0]

    def test_noisy_render(self):
        self.twice("render", "--grid", "33", "--noise", "0.01", "--seed", "7")

    def test_decompose_segment_evaluate_and_sweep(self):
        stack = self.render("scene", 33, "--kind", "two-bump")
        self.twice("decompose", "--stack", str(stack))
        self.twice("segment", "--stack", str(stack))
        self.twice(
            "evaluate",
            "--est", str(stack / "gt_normals.pfm"),
            "--gt", str(stack / "gt_normals.pfm"),
            "--mask", str(stack / "mask.png"),
        )
        self.twice(
            "sweep",
            "--stack", str(stack),
            "--gt", str(stack / "gt_normals.pfm"),
            "--mask", str(stack / "mask.png"),
            "--segmentation", "off,on",
        )


class CliMainTest(SimpleTestCase):
    def test_unknown_subcommand(self):
        code, err = run_cli("paint")
        self.assertEqual(code, 2)
        self.assertIn("usage", err)

    def test_no_arguments(self):
        self.assertEqual(run_cli()[0], 2)
