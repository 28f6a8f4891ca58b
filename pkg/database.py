import aiosqlite
import json
import logging
from datetime import datetime
from typing import List, Optional

from models.schemas import RunManifest, RunRecord, SweepCell, SweepTable
import config

logger = logging.getLogger(__name__)


class RunLedger:
    """SQLite record of every CLI run, its sweep cells and notable events."""

    def __init__(self, db_path: str = config.LEDGER_PATH):
        self.db_path = db_path

    async def init_db(self):
        """Create tables if they don't exist."""
        async with aiosqlite.connect(self.db_path) as db:
            await db.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    command TEXT NOT NULL,
                    started_at TIMESTAMP NOT NULL,
                    finished_at TIMESTAMP,
                    root_seed INTEGER NOT NULL,
                    status TEXT DEFAULT 'running',
                    output_dir TEXT,
                    manifest_json TEXT
                )
            """)

            await db.execute("""
                CREATE TABLE IF NOT EXISTS sweep_cells (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    axis TEXT NOT NULL,
                    axis_value REAL NOT NULL,
                    algorithm TEXT NOT NULL,
                    n INTEGER,
                    m INTEGER,
                    alpha REAL,
                    alpha_hat REAL,
                    noise_p REAL,
                    reps INTEGER,
                    success_rate REAL,
                    mean_rel_error REAL,
                    median_rel_error REAL,
                    FOREIGN KEY (run_id) REFERENCES runs (id)
                )
            """)

            await db.execute("""
                CREATE TABLE IF NOT EXISTS logs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER,
                    action TEXT NOT NULL,
                    details TEXT,
                    timestamp TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    FOREIGN KEY (run_id) REFERENCES runs (id)
                )
            """)

            await db.commit()

    async def add_run(self, manifest: RunManifest) -> Optional[int]:
        """Insert a run in status 'running' and return its id."""
        try:
            async with aiosqlite.connect(self.db_path) as db:
                cursor = await db.execute("""
                    INSERT INTO runs (command, started_at, root_seed, status, output_dir, manifest_json)
                    VALUES (?, ?, ?, 'running', ?, ?)
                """, (
                    manifest.subcommand,
                    manifest.started_at.isoformat(),
                    manifest.root_seed,
                    manifest.output_dir,
                    manifest.model_dump_json(),
                ))
                await db.commit()
                return cursor.lastrowid
        except Exception as e:
            logger.warning(f"Error adding run to ledger: {e}")
            return None

    async def finish_run(self, run_id: int, status: str, manifest: Optional[RunManifest] = None) -> bool:
        try:
            async with aiosqlite.connect(self.db_path) as db:
                finished_at = (manifest.finished_at if manifest and manifest.finished_at else datetime.now())
                if manifest is not None:
                    await db.execute(
                        "UPDATE runs SET status = ?, finished_at = ?, manifest_json = ? WHERE id = ?",
                        (status, finished_at.isoformat(), manifest.model_dump_json(), run_id),
                    )
                else:
                    await db.execute(
                        "UPDATE runs SET status = ?, finished_at = ? WHERE id = ?",
                        (status, finished_at.isoformat(), run_id),
                    )
                await db.commit()
                return True
        except Exception as e:
            logger.warning(f"Error finishing run {run_id}: {e}")
            return False

    async def add_sweep_cells(self, run_id: int, table: SweepTable) -> bool:
        try:
            async with aiosqlite.connect(self.db_path) as db:
                await db.executemany("""
                    INSERT INTO sweep_cells (run_id, axis, axis_value, algorithm, n, m, alpha, alpha_hat,
                                             noise_p, reps, success_rate, mean_rel_error, median_rel_error)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """, [
                    (run_id, table.axis, c.axis_value, c.algorithm, c.n, c.m, c.alpha, c.alpha_hat,
                     c.noise_p, c.reps, c.success_rate, c.mean_rel_error, c.median_rel_error)
                    for c in table.cells
                ])
                await db.commit()
                return True
        except Exception as e:
            logger.warning(f"Error adding sweep cells for run {run_id}: {e}")
            return False

    async def add_log(self, run_id: Optional[int], action: str, details: str = "") -> bool:
        try:
            async with aiosqlite.connect(self.db_path) as db:
                await db.execute(
                    "INSERT INTO logs (run_id, action, details, timestamp) VALUES (?, ?, ?, ?)",
                    (run_id, action, details, datetime.now().isoformat()),
                )
                await db.commit()
                return True
        except Exception as e:
            logger.warning(f"Error adding log: {e}")
            return False

    async def get_runs(self, since: Optional[datetime] = None, command: Optional[str] = None,
                       limit: int = 100) -> List[RunRecord]:
        """Runs newest first, optionally started at or after ``since`` and filtered by subcommand."""
        query = "SELECT * FROM runs WHERE 1 = 1"
        params: list = []
        if since is not None:
            query += " AND started_at >= ?"
            params.append(since.isoformat())
        if command:
            query += " AND command = ?"
            params.append(command)
        query += " ORDER BY started_at DESC, id DESC LIMIT ?"
        params.append(limit)

        async with aiosqlite.connect(self.db_path) as db:
            db.row_factory = aiosqlite.Row
            async with db.execute(query, params) as cursor:
                rows = await cursor.fetchall()
                return [RunRecord(**dict(row)) for row in rows]

    async def get_sweep_cells(self, run_id: int) -> List[SweepCell]:
        async with aiosqlite.connect(self.db_path) as db:
            db.row_factory = aiosqlite.Row
            async with db.execute("SELECT * FROM sweep_cells WHERE run_id = ? ORDER BY id", (run_id,)) as cursor:
                rows = await cursor.fetchall()
                fields = SweepCell.model_fields.keys()
                return [SweepCell(**{k: row[k] for k in fields}) for row in rows]

    async def get_logs(self, run_id: Optional[int] = None, limit: int = 100) -> List[dict]:
        async with aiosqlite.connect(self.db_path) as db:
            db.row_factory = aiosqlite.Row
            if run_id is not None:
                query = "SELECT * FROM logs WHERE run_id = ? ORDER BY id DESC LIMIT ?"
                params = (run_id, limit)
            else:
                query = "SELECT * FROM logs ORDER BY id DESC LIMIT ?"
                params = (limit,)
            async with db.execute(query, params) as cursor:
                return [dict(row) for row in await cursor.fetchall()]

    @staticmethod
    def manifest_of(record: RunRecord) -> Optional[RunManifest]:
        if not record.manifest_json:
            return None
        return RunManifest.model_validate(json.loads(record.manifest_json))
