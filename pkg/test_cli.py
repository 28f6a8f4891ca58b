#!/usr/bin/env python3
"""
Tests for the command-line front end: exit codes, outputs, config files and seeds.
"""

import csv
import io
import json
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch

import numpy as np
from PIL import Image

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import config
from cli import main, read_config_file
from exceptions import UsageError
from handlers.sweep_handlers import axis_values


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        status = main(argv)
    return status, out.getvalue(), err.getvalue()


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.ledger = str(self.dir / "runs.db")
        env = patch.dict(os.environ, {}, clear=False)
        env.start()
        os.environ.pop(config.SEED_ENV, None)
        self.addCleanup(env.stop)

    def tearDown(self):
        self.tmp.cleanup()

    def out(self, name):
        return ["--out", str(self.dir / name), "--ledger", self.ledger]

    def manifest(self, name):
        return json.loads((self.dir / name / "manifest.json").read_text())


class TestTrial(CliTestCase):

    def test_trial_writes_trace_and_manifest(self):
        status, stdout, _ = run_cli(["trial", "--n", "10", "--m", "100", "--seed", "1", "--iters", "20",
                                     *self.out("t1")])
        self.assertEqual(status, 0)
        self.assertTrue((self.dir / "t1" / "trace.csv").exists())
        manifest = self.manifest("t1")
        self.assertEqual(manifest["root_seed"], 1)
        self.assertEqual(manifest["subcommand"], "trial")
        self.assertIsNotNone(manifest["finished_at"])
        self.assertIn("trial finished", stdout)

    def test_missing_n_is_usage_error(self):
        status, _, stderr = run_cli(["trial", "--m", "100", *self.out("t2")])
        self.assertEqual(status, 2)
        self.assertIn("--n", stderr)

    def test_default_alpha_hat_is_twice_alpha(self):
        status, _, _ = run_cli(["trial", "--n", "10", "--m", "100", "--alpha", "0.05", "--iters", "5",
                                *self.out("t3")])
        self.assertEqual(status, 0)
        self.assertEqual(self.manifest("t3")["resolved_config"]["alpha_hat"], 0.1)

    def test_save_observations(self):
        status, _, _ = run_cli(["trial", "--n", "5", "--m", "50", "--iters", "2", "--save-observations",
                                *self.out("t4")])
        self.assertEqual(status, 0)
        self.assertTrue((self.dir / "t4" / "observations.bin").exists())

    def test_bad_fraction(self):
        status, _, stderr = run_cli(["trial", "--n", "5", "--m", "50", "--alpha", "1.5", *self.out("t5")])
        self.assertEqual(status, 2)
        self.assertIn("--alpha", stderr)

    def test_help_exits_cleanly(self):
        status, stdout, _ = run_cli(["trial", "--help"])
        self.assertEqual(status, 0)
        self.assertIn("--power-iters", stdout)
        self.assertIn("250", stdout)


class TestSeedAndConfig(CliTestCase):

    def test_seed_from_environment(self):
        os.environ[config.SEED_ENV] = "42"
        status, _, _ = run_cli(["trial", "--n", "5", "--m", "50", "--iters", "2", *self.out("s1")])
        self.assertEqual(status, 0)
        self.assertEqual(self.manifest("s1")["root_seed"], 42)

    def test_flag_beats_environment(self):
        os.environ[config.SEED_ENV] = "42"
        run_cli(["trial", "--n", "5", "--m", "50", "--iters", "2", "--seed", "3", *self.out("s2")])
        self.assertEqual(self.manifest("s2")["root_seed"], 3)

    def test_malformed_seed_environment(self):
        os.environ[config.SEED_ENV] = "abc"
        status, _, stderr = run_cli(["trial", "--n", "5", "--m", "50", *self.out("s3")])
        self.assertEqual(status, 2)
        self.assertIn(config.SEED_ENV, stderr)

    def test_config_file_supplies_defaults(self):
        cfg = self.dir / "run.cfg"
        cfg.write_text("# trial defaults\nn = 6\nm=60\niters=3\nalpha=0.1\n")
        status, _, _ = run_cli(["trial", "--config", str(cfg), "--m", "70", *self.out("c1")])
        self.assertEqual(status, 0)
        resolved = self.manifest("c1")["resolved_config"]
        self.assertEqual(resolved["n"], 6)
        self.assertEqual(resolved["m"], 70)
        self.assertEqual(resolved["alpha"], 0.1)

    def test_config_file_unknown_key(self):
        cfg = self.dir / "bad.cfg"
        cfg.write_text("colour=blue\n")
        status, _, _ = run_cli(["trial", "--config", str(cfg), "--n", "5", "--m", "50", *self.out("c2")])
        self.assertEqual(status, 2)

    def test_config_line_without_equals(self):
        cfg = self.dir / "broken.cfg"
        cfg.write_text("n 5\n")
        with self.assertRaises(UsageError):
            read_config_file(cfg)

    def test_missing_config_file_is_io_error(self):
        status, _, _ = run_cli(["trial", "--config", str(self.dir / "nope.cfg"), "--n", "5", "--m", "50"])
        self.assertEqual(status, 3)

    def test_every_message_template_is_used(self):
        root = Path(__file__).resolve().parent
        sources = [p for p in [*root.glob("*.py"), *root.glob("handlers/*.py")]
                   if p.name != "config.py" and not p.name.startswith("test_")]
        text = "\n".join(p.read_text(encoding="utf-8") for p in sources)
        for key in config.MESSAGES:
            self.assertIn(f'"{key}"', text, key)


class TestSweep(CliTestCase):

    def test_axis_grids(self):
        self.assertEqual(len(axis_values(0.0, 0.4, 0.01, "alpha")), 41)
        self.assertEqual(axis_values(0.0, 0.4, 0.01, "alpha")[29], 0.29)
        self.assertEqual(axis_values(500, 4000, 500, "m"), [500, 1000, 1500, 2000, 2500, 3000, 3500, 4000])
        with self.assertRaises(UsageError):
            axis_values(0.3, 0.1, 0.01, "alpha")

    def test_small_alpha_sweep(self):
        argv = ["sweep", "--axis", "alpha", "--from", "0", "--to", "0.1", "--step", "0.05",
                "--n", "5", "--m", "60", "--reps", "2", "--iters", "5", "--threads", "1"]
        status, _, _ = run_cli([*argv, *self.out("w1")])
        self.assertEqual(status, 0)
        with open(self.dir / "w1" / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        self.assertEqual([row["axis_value"] for row in rows], ["0", "0.050000000000000003", "0.10000000000000001"])
        self.assertEqual(rows[1]["alpha_hat"], "0.10000000000000001")
        self.assertTrue((self.dir / "w1" / "sweep.gp").exists())

    def test_replay_is_byte_identical_across_threads(self):
        argv = ["sweep", "--axis", "m", "--from", "40", "--to", "60", "--step", "20", "--n", "5",
                "--alpha", "0.05", "--reps", "3", "--iters", "5", "--seed", "8"]
        run_cli([*argv, "--threads", "1", *self.out("r1")])
        run_cli([*argv, "--threads", "2", *self.out("r2")])
        self.assertEqual((self.dir / "r1" / "sweep.csv").read_bytes(),
                         (self.dir / "r2" / "sweep.csv").read_bytes())

    def test_fast_mode_recorded(self):
        argv = ["sweep", "--axis", "alpha", "--from", "0", "--to", "0", "--step", "0.1",
                "--n", "5", "--m", "40", "--iters", "2", "--fast"]
        status, _, _ = run_cli([*argv, *self.out("f1")])
        self.assertEqual(status, 0)
        manifest = self.manifest("f1")
        self.assertTrue(manifest["fast_mode"])
        self.assertEqual(manifest["resolved_config"]["reps"], config.FAST_REPS)

    def test_noise_level_and_init_recorded(self):
        argv = ["sweep", "--axis", "alpha", "--from", "0", "--to", "0", "--step", "0.1",
                "--n", "5", "--m", "40", "--reps", "1", "--iters", "2", "--noise-p", "0.5",
                "--init", "thresholded"]
        status, _, _ = run_cli([*argv, *self.out("n1")])
        self.assertEqual(status, 0)
        resolved = self.manifest("n1")["resolved_config"]
        self.assertEqual(resolved["noise_p"], 0.5)
        self.assertEqual(resolved["init"], "thresholded")

    def test_unknown_init_rejected(self):
        argv = ["sweep", "--axis", "alpha", "--from", "0", "--to", "0", "--step", "0.1",
                "--n", "5", "--m", "40", "--init", "random"]
        self.assertEqual(run_cli([*argv, *self.out("n2")])[0], 2)

    def test_zero_reps_rejected(self):
        argv = ["sweep", "--axis", "alpha", "--from", "0", "--to", "0.1", "--step", "0.05",
                "--n", "5", "--m", "40", "--reps", "0"]
        self.assertEqual(run_cli([*argv, *self.out("z1")])[0], 2)

    def test_reversed_range_rejected(self):
        argv = ["sweep", "--axis", "alpha", "--from", "0.3", "--to", "0.1", "--step", "0.05",
                "--n", "5", "--m", "40"]
        self.assertEqual(run_cli([*argv, *self.out("z2")])[0], 2)


class TestTraceAndHistory(CliTestCase):

    def test_trace(self):
        argv = ["trace", "--n", "5", "--m", "50", "--iters", "4", "--noise-levels", "0.5,1", "--threads", "1"]
        status, _, _ = run_cli([*argv, *self.out("tr")])
        self.assertEqual(status, 0)
        lines = (self.dir / "tr" / "trace.csv").read_text().splitlines()
        self.assertEqual(len(lines), 1 + 2 * 5)

    def test_history_lists_runs(self):
        run_cli(["trial", "--n", "5", "--m", "50", "--iters", "2", *self.out("h1")])
        status, stdout, _ = run_cli(["history", "--ledger", self.ledger, "--command", "trial"])
        self.assertEqual(status, 0)
        self.assertIn("finished", stdout)

        status, stdout, _ = run_cli(["history", "--ledger", self.ledger, "--since", "2999-01-01"])
        self.assertIn(config.MESSAGES["no_runs"], stdout)

    def test_history_bad_date(self):
        status, _, stderr = run_cli(["history", "--ledger", self.ledger, "--since", "not a date"])
        self.assertEqual(status, 2)
        self.assertIn("--since", stderr)


class TestCdp(CliTestCase):

    def test_gray_image_recovery(self):
        yy, xx = np.mgrid[0:8, 0:8]
        data = (40 + 10 * (xx + yy)).astype(np.uint8)
        Image.fromarray(data, mode="L").save(self.dir / "ramp.png")
        status, _, _ = run_cli(["cdp", "--image", str(self.dir / "ramp.png"), "--corrupt-frac", "0",
                                *self.out("cdp")])
        self.assertEqual(status, 0)
        with open(self.dir / "cdp" / "cdp.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        self.assertEqual(rows[0]["channel"], "gray")
        self.assertLessEqual(float(rows[0]["relative_error"]), 1e-6)
        self.assertTrue((self.dir / "cdp" / "reconstruction.png").exists())

    def test_zero_masks_rejected(self):
        status, _, stderr = run_cli(["cdp", "--image", "x.png", "--K", "0", *self.out("k0")])
        self.assertEqual(status, 2)
        self.assertIn("--K", stderr)

    def test_unsupported_format(self):
        status, _, _ = run_cli(["cdp", "--image", str(self.dir / "photo.jpg"), *self.out("u1")])
        self.assertEqual(status, 2)

    def test_unreadable_image(self):
        path = str(self.dir / "missing.png")
        status, _, stderr = run_cli(["cdp", "--image", path, *self.out("u2")])
        self.assertEqual(status, 3)
        self.assertIn(path, stderr)


if __name__ == "__main__":
    unittest.main()
