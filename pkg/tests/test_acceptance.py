"""Acceptance suite: one test per criterion, one PASS/FAIL line per criterion.

The lines are printed when the module runs (``pytest -s`` or as a script)
and repeated in pytest's terminal summary.
"""

import json
import sys

import pytest

from genhopf import verify

LINES = []
NUMBERS = range(1, 12)


@pytest.fixture(scope="module")
def suite():
    criteria = {c.number: c for c in verify.run_suite(verify.SEED)}
    for c in criteria.values():
        LINES.append(c.line())
        print(c.line())
    return criteria


@pytest.mark.parametrize("number", NUMBERS)
def test_criterion(suite, number):
    c = suite[number]
    assert c.passed, f"criterion {number} ({c.name}) failed:\n" + json.dumps(
        c.to_dict()["details"], indent=2, sort_keys=True)


def test_report_covers_every_criterion(suite):
    report = verify.suite_report(list(suite.values()))
    assert [c["number"] for c in report["criteria"]] == list(NUMBERS)
    assert report["passed"] == all(c.passed for c in suite.values())
    json.dumps(report, allow_nan=False)


if __name__ == "__main__":
    results = verify.run_suite(verify.SEED)
    for c in results:
        print(c.line())
    sys.exit(0 if all(c.passed for c in results) else 1)
