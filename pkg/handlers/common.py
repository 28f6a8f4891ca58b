import argparse
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import config
from database import RunLedger
from exceptions import ArtifactIOError
from models.schemas import RunManifest, SolverConfig, SweepTable
from utils.artifacts import make_output_dir, write_manifest

logger = logging.getLogger(__name__)

# argparse bookkeeping that never belongs in a manifest
_INTERNAL_KEYS = {"func", "config"}


def algorithm_name(flag: str) -> str:
    """CLI spelling (robust-wf) to model spelling (robust_wf)."""
    return flag.replace("-", "_")


def solver_config(args: argparse.Namespace, alpha_hat: float, seed: int = 0) -> SolverConfig:
    return SolverConfig(
        step_size=args.mu,
        max_iters=args.iters,
        power_iters=args.power_iters,
        init_method=args.init,
        alpha_hat=alpha_hat,
        success_tol=config.SUCCESS_TOL,
        seed=seed,
    )


def resolved_config(args: argparse.Namespace, **extra: Any) -> Dict[str, Any]:
    resolved = {}
    for key, value in sorted(vars(args).items()):
        if key in _INTERNAL_KEYS:
            continue
        resolved[key] = str(value) if isinstance(value, Path) else value
    resolved.update(extra)
    return resolved


class RunSession:
    """Output directory, manifest and ledger entry of one CLI run.

    The manifest is written before any computation and rewritten with the
    output list on close. Ledger problems are logged and otherwise ignored.
    """

    def __init__(self, subcommand: str, argv: List[str], args: argparse.Namespace,
                 root_seed: int, resolved: Dict[str, Any], fast_mode: bool = False):
        self.subcommand = subcommand
        self.args = args
        out = getattr(args, "out", None)
        self.output_dir = Path(out) if out else make_output_dir(config.OUTPUT_ROOT, subcommand)
        self.manifest = RunManifest(
            command=list(argv),
            subcommand=subcommand,
            resolved_config=resolved,
            root_seed=root_seed,
            output_dir=str(self.output_dir),
            fast_mode=fast_mode,
        )
        self.ledger: Optional[RunLedger] = None
        if not getattr(args, "no_ledger", False):
            self.ledger = RunLedger(getattr(args, "ledger", None) or config.LEDGER_PATH)
        self.run_id: Optional[int] = None

    def path(self, name: str) -> Path:
        return self.output_dir / name

    async def __aenter__(self) -> "RunSession":
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactIOError(self.output_dir, f"cannot create output directory: {e}") from e
        await write_manifest(self.manifest)
        if self.ledger is not None:
            try:
                await self.ledger.init_db()
                self.run_id = await self.ledger.add_run(self.manifest)
            except Exception as e:
                logger.warning(f"Run ledger unavailable ({e}); continuing without it")
                self.ledger = None
        return self

    async def __aexit__(self, exc_type, exc, tb) -> bool:
        status = "finished" if exc_type is None else "error"
        self.manifest.finished_at = datetime.now()
        if exc_type is None:
            await write_manifest(self.manifest)
        if self.ledger is not None and self.run_id is not None:
            if exc is not None:
                await self.ledger.add_log(self.run_id, "error", f"{type(exc).__name__}: {exc}")
            await self.ledger.finish_run(self.run_id, status, self.manifest)
        return False

    def add_output(self, path: Path) -> None:
        self.manifest.outputs.append(str(path))

    async def log(self, action: str, details: str) -> None:
        if self.ledger is not None and self.run_id is not None:
            await self.ledger.add_log(self.run_id, action, details)

    async def record_sweep(self, table: SweepTable) -> None:
        if self.ledger is not None and self.run_id is not None:
            await self.ledger.add_sweep_cells(self.run_id, table)
