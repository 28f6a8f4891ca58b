#!/usr/bin/env python3
"""
Tests for artifact output: CSV schemas, manifests, gnuplot scripts and images.
"""

import os
import sys
import tempfile
import unittest
from datetime import datetime
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from exceptions import ArtifactIOError, UnsupportedFormatError
from models.schemas import RunManifest, SweepCell, SweepTable, TraceSet
from utils.artifacts import (
    SWEEP_HEADER,
    TRACE_HEADER,
    emit_csv,
    emit_gnuplot_script,
    emit_trace_csv,
    make_output_dir,
    read_manifest,
    read_sweep_csv,
    read_trace_csv,
    write_manifest,
)
from utils.images import load_image, save_image


def cell(value: float, algorithm: str = "robust_wf") -> SweepCell:
    return SweepCell(
        axis_value=value, algorithm=algorithm, n=100, m=1000, alpha=value, alpha_hat=2 * value,
        noise_p=0.0, reps=20, success_rate=0.95, mean_rel_error=1 / 3, median_rel_error=1e-9,
    )


class TestCsv(unittest.IsolatedAsyncioTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    async def test_sweep_csv_header_and_values(self):
        table = SweepTable(axis="alpha", cells=[cell(0.01), cell(0.02, "rwf")])
        path = await emit_csv(table, self.dir / "sweep.csv")
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], ",".join(SWEEP_HEADER))
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith("alpha,0.01,robust_wf,100,1000,"))

        back = await read_sweep_csv(path)
        self.assertEqual(back.axis, "alpha")
        self.assertEqual(back.cells[0].mean_rel_error, 1 / 3)
        self.assertEqual(back.cells[1].algorithm, "rwf")

    async def test_empty_table_is_header_only(self):
        path = await emit_csv(SweepTable(axis="m"), self.dir / "empty.csv")
        self.assertEqual(path.read_text(), ",".join(SWEEP_HEADER) + "\n")
        back = await read_sweep_csv(path, axis="m")
        self.assertEqual(back.cells, [])
        self.assertEqual(back.axis, "m")

    async def test_trace_csv(self):
        traces = TraceSet(algorithm="robust_wf", traces={0.5: [1.0, 0.1], 1.0: [1.0, 0.2, 0.05]})
        path = await emit_trace_csv(traces, self.dir / "trace.csv")
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], ",".join(TRACE_HEADER))
        self.assertEqual(lines[1], "robust_wf,0.5,0,1")
        self.assertEqual(len(lines), 6)
        self.assertEqual((await read_trace_csv(path)).traces, traces.traces)

    async def test_foreign_header_rejected(self):
        path = self.dir / "other.csv"
        path.write_text("a,b\n1,2\n")
        with self.assertRaises(ArtifactIOError):
            await read_sweep_csv(path)

    async def test_unwritable_path(self):
        with self.assertRaises(ArtifactIOError) as ctx:
            await emit_csv(SweepTable(axis="alpha"), self.dir / "missing" / "sweep.csv")
        self.assertIn("sweep.csv", str(ctx.exception))

    async def test_gnuplot_scripts(self):
        sweep = await emit_gnuplot_script(self.dir / "sweep.csv", "sweep", self.dir / "sweep.gp")
        trace = await emit_gnuplot_script(self.dir / "trace.csv", "trace", self.dir / "trace.gp")
        self.assertIn("'sweep.csv' using 2:10", sweep.read_text())
        self.assertIn("set logscale y", trace.read_text())


class TestManifest(unittest.IsolatedAsyncioTestCase):

    async def test_write_and_read(self):
        with tempfile.TemporaryDirectory() as tmp:
            manifest = RunManifest(
                command=["trial", "--n", "10"], subcommand="trial",
                resolved_config={"n": 10, "alpha_hat": 0.1}, root_seed=4, output_dir=tmp,
            )
            path = await write_manifest(manifest)
            self.assertEqual(path.name, "manifest.json")
            back = await read_manifest(path)
        self.assertEqual(back.resolved_config["alpha_hat"], 0.1)
        self.assertEqual(back.command, ["trial", "--n", "10"])
        self.assertEqual(back.artifact_version, manifest.artifact_version)

    def test_output_dir_naming(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = make_output_dir(tmp, "sweep", datetime(2024, 1, 2, 3, 4, 5))
            self.assertEqual(path.name, "20240102-030405-sweep")
            self.assertTrue(path.is_dir())


class TestImages(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_gray_png_round_trip(self):
        data = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        Image.fromarray(data, mode="L").save(self.dir / "gray.png")
        planes = load_image(self.dir / "gray.png")
        self.assertEqual([p.channel for p in planes], ["gray"])
        self.assertEqual((planes[0].height, planes[0].width), (3, 4))
        np.testing.assert_allclose(planes[0].pixels, data / 255.0)

        save_image(planes, self.dir / "copy.pgm")
        np.testing.assert_array_equal(np.asarray(Image.open(self.dir / "copy.pgm")), data)

    def test_rgb_channels(self):
        data = np.zeros((2, 2, 3), dtype=np.uint8)
        data[..., 1] = 255
        Image.fromarray(data, mode="RGB").save(self.dir / "green.ppm")
        planes = load_image(self.dir / "green.ppm")
        self.assertEqual([p.channel for p in planes], ["R", "G", "B"])
        np.testing.assert_array_equal(planes[1].pixels, np.ones((2, 2)))

    def test_unsupported_suffix(self):
        with self.assertRaises(UnsupportedFormatError):
            load_image(self.dir / "photo.jpg")

    def test_missing_file(self):
        with self.assertRaises(ArtifactIOError) as ctx:
            load_image(self.dir / "missing.png")
        self.assertIn("missing.png", str(ctx.exception))

    def test_not_an_image(self):
        path = self.dir / "fake.png"
        path.write_bytes(b"plain text")
        with self.assertRaises(UnsupportedFormatError):
            load_image(path)


if __name__ == "__main__":
    unittest.main()
