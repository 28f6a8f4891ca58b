import csv
import io
import logging
from datetime import datetime
from pathlib import Path
from typing import Iterable, List, Optional, Union

import aiofiles

from exceptions import ArtifactIOError
from models.schemas import ChannelRecovery, RunManifest, SweepCell, SweepTable, TraceSet

logger = logging.getLogger(__name__)

SWEEP_HEADER = [
    "axis", "axis_value", "algorithm", "n", "m", "alpha", "alpha_hat",
    "noise_p", "reps", "success_rate", "mean_rel_error", "median_rel_error",
]
TRACE_HEADER = ["algorithm", "noise_p", "iter", "rel_error"]
CDP_HEADER = [
    "image", "channel", "n", "K", "alpha", "alpha_hat",
    "relative_error", "iterations", "wall_time_ms",
]
MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """17 significant digits: enough for an exact float64 round trip."""
    return format(float(value), ".17g")


def _render(header: List[str], rows: Iterable[List[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_sweep_csv(table: SweepTable) -> str:
    return _render(SWEEP_HEADER, (
        [
            table.axis, format_float(c.axis_value), c.algorithm, str(c.n), str(c.m),
            format_float(c.alpha), format_float(c.alpha_hat), format_float(c.noise_p), str(c.reps),
            format_float(c.success_rate), format_float(c.mean_rel_error),
            format_float(c.median_rel_error),
        ]
        for c in table.cells
    ))


def render_trace_csv(traces: TraceSet) -> str:
    return _render(TRACE_HEADER, (
        [traces.algorithm, format_float(p), str(t), format_float(value)]
        for p, trace in traces.traces.items()
        for t, value in enumerate(trace)
    ))


def render_cdp_csv(image: str, channels: List[ChannelRecovery]) -> str:
    return _render(CDP_HEADER, (
        [
            image, c.channel, str(c.n), str(c.K), format_float(c.alpha), format_float(c.alpha_hat),
            format_float(c.relative_error), str(c.iterations), format_float(c.wall_time_ms),
        ]
        for c in channels
    ))


async def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    try:
        async with aiofiles.open(path, "w", newline="") as fh:
            await fh.write(text)
    except OSError as e:
        raise ArtifactIOError(path, f"cannot write: {e}") from e
    logger.info(f"Wrote {path}")
    return path


async def read_text(path: PathLike) -> str:
    try:
        async with aiofiles.open(path, "r", newline="") as fh:
            return await fh.read()
    except OSError as e:
        raise ArtifactIOError(path, f"cannot read: {e}") from e


async def emit_csv(data: Union[SweepTable, TraceSet], path: PathLike) -> Path:
    """Write a sweep table or a trace set in its CSV schema."""
    if isinstance(data, SweepTable):
        return await write_text(path, render_sweep_csv(data))
    return await write_text(path, render_trace_csv(data))


async def emit_trace_csv(traces: TraceSet, path: PathLike) -> Path:
    return await write_text(path, render_trace_csv(traces))


async def emit_cdp_csv(image: str, channels: List[ChannelRecovery], path: PathLike) -> Path:
    return await write_text(path, render_cdp_csv(image, channels))


def _rows(text: str, header: List[str], path: PathLike) -> List[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != header:
        raise ArtifactIOError(path, f"unexpected header {reader.fieldnames}")
    return list(reader)


async def read_sweep_csv(path: PathLike, axis: Optional[str] = None) -> SweepTable:
    """Read a sweep CSV back; ``axis`` names the axis of a header-only file."""
    rows = _rows(await read_text(path), SWEEP_HEADER, path)
    table = SweepTable(axis=rows[0]["axis"] if rows else (axis or "alpha"))
    for row in rows:
        table.cells.append(SweepCell(
            axis_value=float(row["axis_value"]),
            algorithm=row["algorithm"],
            n=int(row["n"]),
            m=int(row["m"]),
            alpha=float(row["alpha"]),
            alpha_hat=float(row["alpha_hat"]),
            noise_p=float(row["noise_p"]),
            reps=int(row["reps"]),
            success_rate=float(row["success_rate"]),
            mean_rel_error=float(row["mean_rel_error"]),
            median_rel_error=float(row["median_rel_error"]),
        ))
    return table


async def read_trace_csv(path: PathLike) -> TraceSet:
    rows = _rows(await read_text(path), TRACE_HEADER, path)
    traces = TraceSet(algorithm=rows[0]["algorithm"] if rows else "robust_wf")
    for row in rows:
        traces.traces.setdefault(float(row["noise_p"]), []).append(float(row["rel_error"]))
    return traces


def make_output_dir(root: PathLike, command: str, now: Optional[datetime] = None) -> Path:
    """Default layout: <root>/<timestamp>-<command>."""
    now = now or datetime.now()
    path = Path(root) / f"{now:%Y%m%d-%H%M%S}-{command}"
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(path, f"cannot create output directory: {e}") from e
    return path


async def write_manifest(manifest: RunManifest) -> Path:
    path = Path(manifest.output_dir) / MANIFEST_NAME
    return await write_text(path, manifest.model_dump_json(indent=2))


async def read_manifest(path: PathLike) -> RunManifest:
    try:
        return RunManifest.model_validate_json(await read_text(path))
    except ValueError as e:
        raise ArtifactIOError(path, f"corrupt manifest: {e}") from e


async def emit_gnuplot_script(csv_path: PathLike, kind: str, path: PathLike) -> Path:
    """Generic gnuplot script for a sweep (kind='sweep') or trace (kind='trace') CSV."""
    csv_name = Path(csv_path).name
    lines = ['set datafile separator ","', "set key autotitle columnhead"]
    if kind == "trace":
        lines += [
            "set logscale y",
            'set xlabel "iteration"',
            'set ylabel "relative error"',
            f"plot '{csv_name}' using 3:4 with lines title 'rel_error'",
        ]
    else:
        lines += [
            'set xlabel "axis value"',
            'set ylabel "success rate"',
            "set yrange [0:1.05]",
            f"plot '{csv_name}' using 2:10 with linespoints title 'success_rate'",
        ]
    return await write_text(path, "\n".join(lines) + "\n")
