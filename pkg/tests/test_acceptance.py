"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import pytest

from spinlz import acceptance

CRITERIA = {int(fn.__name__.split("_")[1]): fn for fn in acceptance.ALL}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
