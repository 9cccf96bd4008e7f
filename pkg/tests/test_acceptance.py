"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one pass/fail line; the lines are repeated in the
terminal summary. The Monte Carlo criteria take minutes on one core.
"""
import pytest

from susypt import acceptance

LINES = []


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    res = acceptance.run_criterion(number)
    line = res.line()
    LINES.append(line)
    print(line)
    assert res.passed, line
