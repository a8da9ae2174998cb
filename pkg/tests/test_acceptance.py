"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines live; they
are also printed in the terminal summary.
"""

import pytest

from rggent.acceptance import CRITERIA, run_criterion

SEED = 20261014
LINES: list[str] = []


@pytest.mark.parametrize("number", [c.number for c in CRITERIA], ids=[f"criterion_{c.number:02d}" for c in CRITERIA])
def test_criterion(number):
    res = run_criterion(number, SEED)
    LINES.append(res.line())
    print("\n" + res.line())
    for v in res.verdicts:
        if not v.passed:
            print("    " + v.line())
    assert res.passed, res.line()
    assert res.seconds < res.budget_seconds, f"runtime {res.seconds:.1f}s over budget"

