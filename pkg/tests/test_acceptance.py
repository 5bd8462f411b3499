"""Acceptance criteria 1-9, one test each.

Each test prints a ``PASS/FAIL criterion N: title`` line, bypassing
output capture so it shows in a plain ``pytest -v`` run, and asserts the
criterion passed; the measured details go to the captured output. The checks share one
validator so the preset sweeps are computed once.
"""

import os

import pytest

from qdrelay.validation import Validator

CRITERIA = {
    1: "check_eq1",
    2: "check_eq2",
    3: "check_eq3",
    4: "check_eq4",
    5: "check_swap",
    6: "check_fig2_endpoints",
    7: "check_fig2_shapes",
    8: "check_state_validity",
    9: "check_determinism",
}


@pytest.fixture(scope="module")
def validator():
    return Validator(threads=max(2, min(4, os.cpu_count() or 2)))


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(validator, number, capsys):
    result = getattr(validator, CRITERIA[number])()
    with capsys.disabled():
        print(f"\n{result.line}")
    for d in result.details:
        print("   ", d)
    assert result.number == number
    assert result.passed, result.line
