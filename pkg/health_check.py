#!/usr/bin/env python3
"""
Numerical self-check for the robust phase retrieval toolkit.

Checks:
1. Amplitude-loss gradient against central finite differences
2. CDP adjoint identity
3. Power iteration against a dense eigensolver
4. Hard thresholding against a sort-based oracle
5. Run ledger writability

Usage: python health_check.py
"""

import asyncio
import os
import sys
import tempfile
from typing import Tuple

import numpy as np

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cdp import CdpOperator, build_masks
from core import finite_difference_gradient, hard_threshold, loss
from database import RunLedger
from measure import make_rng, sample_ensemble, sample_signal
from models.schemas import RunManifest
from solver import grad_x, power_iteration

HEALTH_MESSAGES = {
    "title": "Robust phase retrieval self-check",
    "gradient": "Gradient vs finite differences",
    "adjoint": "CDP adjoint identity",
    "power": "Power iteration vs dense eigensolve",
    "threshold": "Hard threshold vs sort oracle",
    "ledger": "Run ledger writability",
    "test_passed": "PASS",
    "test_failed": "FAIL",
    "summary": "Summary",
    "all_passed": "All checks passed.",
    "some_failed": "Some checks failed.",
}


def print_header(title: str):
    print("\n" + "=" * 60)
    print(f"  {title}")
    print("=" * 60)


def print_test_result(test_name: str, success: bool, details: str = ""):
    status = HEALTH_MESSAGES["test_passed"] if success else HEALTH_MESSAGES["test_failed"]
    print(f"{test_name}: {status}")
    if details:
        print(f"   {details}")


def check_gradient(n: int = 10, m: int = 80, trials: int = 20) -> Tuple[bool, str]:
    rng = make_rng(11)
    A = sample_ensemble(n, m, 12)
    y = A.apply(sample_signal(n, 13)) + rng.uniform(0, 0.1, size=m)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(n)
        eta = np.zeros(m)
        eta[rng.choice(m, size=5, replace=False)] = rng.standard_normal(5)
        analytic = grad_x(y, A, x, eta)
        numeric = finite_difference_gradient(lambda v: loss(v, eta, y, A), x)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / np.linalg.norm(analytic)))
    return worst <= 1e-5, f"worst relative error {worst:.2e}"


def check_adjoint(n: int = 16, K: int = 4) -> Tuple[bool, str]:
    rng = make_rng(21)
    op = CdpOperator(build_masks(n, K, 22))
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w = rng.standard_normal(n * K) + 1j * rng.standard_normal(n * K)
    lhs = np.vdot(w, op.forward_linear(x))
    rhs = op.num_rows * np.vdot(op.adjoint_weighted(w), x)
    error = abs(lhs - rhs) / abs(lhs)
    return error <= 1e-10, f"relative mismatch {error:.2e}"


def check_power_iteration(n: int = 12) -> Tuple[bool, str]:
    rng = make_rng(31)
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigenvalues = np.linspace(0.1, 1.0, n)
    eigenvalues[-1] = 2.0
    matrix = basis @ np.diag(eigenvalues) @ basis.T

    result = power_iteration(lambda v: matrix @ v, n, 200, 32)
    expected = np.linalg.eigh(matrix)[1][:, -1]
    angle = float(np.arccos(min(1.0, abs(expected @ result.vector))))
    return angle <= 1e-6, f"angle {angle:.2e} rad"


def check_hard_threshold(trials: int = 200) -> Tuple[bool, str]:
    rng = make_rng(41)
    for _ in range(trials):
        length = int(rng.integers(1, 30))
        w = rng.integers(-4, 5, size=length).astype(float)
        s = int(rng.integers(0, length + 1))
        keep = np.argsort(-np.abs(w), kind="stable")[:s]
        oracle = np.zeros_like(w)
        oracle[keep] = w[keep]
        if not np.array_equal(hard_threshold(w, s), oracle):
            return False, f"mismatch for w={w.tolist()}, s={s}"
    return True, f"{trials} random vectors with ties"


async def check_ledger() -> Tuple[bool, str]:
    with tempfile.TemporaryDirectory() as tmp:
        ledger = RunLedger(os.path.join(tmp, "ledger.db"))
        await ledger.init_db()
        run_id = await ledger.add_run(RunManifest(command=["health_check"], subcommand="trial",
                                                  root_seed=0, output_dir=tmp))
        if run_id is None:
            return False, "could not insert a run"
        await ledger.finish_run(run_id, "finished")
        runs = await ledger.get_runs()
        if len(runs) != 1 or runs[0].status != "finished":
            return False, "run not read back"
    return True, "insert and read back"


async def main():
    print(HEALTH_MESSAGES["title"])
    results = {}

    for key, check in [
        ("gradient", check_gradient),
        ("adjoint", check_adjoint),
        ("power", check_power_iteration),
        ("threshold", check_hard_threshold),
    ]:
        print_header(HEALTH_MESSAGES[key])
        try:
            success, details = check()
        except Exception as e:
            success, details = False, f"unexpected error: {e}"
        print_test_result(HEALTH_MESSAGES[key], success, details)
        results[HEALTH_MESSAGES[key]] = success

    print_header(HEALTH_MESSAGES["ledger"])
    try:
        success, details = await check_ledger()
    except Exception as e:
        success, details = False, f"unexpected error: {e}"
    print_test_result(HEALTH_MESSAGES["ledger"], success, details)
    results[HEALTH_MESSAGES["ledger"]] = success

    print_header(HEALTH_MESSAGES["summary"])
    for test_name, success in results.items():
        status = HEALTH_MESSAGES["test_passed"] if success else HEALTH_MESSAGES["test_failed"]
        print(f"{test_name}: {status}")
    passed = sum(results.values())
    print(f"\n{passed}/{len(results)} checks passed")

    if passed == len(results):
        print(f"\n{HEALTH_MESSAGES['all_passed']}")
        return 0
    print(f"\n{HEALTH_MESSAGES['some_failed']}")
    return 1


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
