import argparse
import logging
from typing import List

from dateutil import parser as date_parser

import config
from database import RunLedger
from exceptions import UsageError

logger = logging.getLogger(__name__)


def format_run(record) -> str:
    finished = record.finished_at.strftime("%Y-%m-%d %H:%M:%S") if record.finished_at else "-"
    return (f"#{record.id}  {record.command:<6} {record.status:<9} "
            f"started {record.started_at:%Y-%m-%d %H:%M:%S}  finished {finished}  "
            f"seed {record.root_seed}  {record.output_dir}")


async def cmd_history(args: argparse.Namespace, argv: List[str]) -> int:
    """List recorded runs, newest first."""
    since = None
    if args.since:
        try:
            since = date_parser.parse(args.since)
        except (ValueError, OverflowError) as e:
            raise UsageError(f"argument --since: cannot parse date {args.since!r}") from e

    ledger = RunLedger(args.ledger or config.LEDGER_PATH)
    await ledger.init_db()
    runs = await ledger.get_runs(since=since, command=args.command, limit=args.limit)
    if not runs:
        print(config.MESSAGES["no_runs"])
        return config.EXIT_OK

    for record in runs:
        print(format_run(record))
        if args.cells and record.command == "sweep":
            for cell in await ledger.get_sweep_cells(record.id):
                print(f"    {cell.algorithm:<9} axis_value={cell.axis_value:g} "
                      f"success_rate={cell.success_rate:.2f} median_rel_error={cell.median_rel_error:.3e}")
    return config.EXIT_OK
