#!/usr/bin/env python3
"""
Example: a small clean trial, a corrupted trial and a two-point alpha sweep,
run through the command-line front end with a throwaway output root and ledger.
"""

import os
import sys
import tempfile

workdir = tempfile.mkdtemp(prefix="robustpr-example-")

# Set before importing config; in practice these come from the environment
os.environ.update({
    "ROBUSTPR_OUTPUT_ROOT": os.path.join(workdir, "out"),
    "ROBUSTPR_LEDGER": os.path.join(workdir, "runs.db"),
    "ROBUSTPR_LOG_FILE": os.path.join(workdir, "robustpr.log"),
    "ROBUSTPR_SEED": "7",
})

from cli import main, setup_logging

EXAMPLES = [
    ["trial", "--n", "50", "--m", "500"],
    ["trial", "--n", "50", "--m", "500", "--alpha", "0.1", "--algo", "robust-wf"],
    ["trial", "--n", "50", "--m", "500", "--alpha", "0.1", "--algo", "rwf"],
    ["sweep", "--axis", "alpha", "--from", "0.05", "--to", "0.1", "--step", "0.05",
     "--n", "50", "--m", "500", "--fast", "--algo", "both"],
    ["history", "--cells"],
]

if __name__ == "__main__":
    setup_logging()
    print(f"Writing example outputs under {workdir}")
    for argv in EXAMPLES:
        print(f"\n$ robustpr {' '.join(argv)}")
        status = main(argv)
        if status != 0:
            print(f"exit status {status}")
            sys.exit(status)
