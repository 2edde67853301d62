"""One test per acceptance criterion; each prints a PASS/FAIL line with its runtime."""

import pytest

from kahlerspec.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, f"{res.line()}\n{res.detail}"
