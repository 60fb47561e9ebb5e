"""One test per acceptance criterion; each prints a PASS/FAIL line (run with -s to see them)."""

import pytest

from siacalc.selftest import CRITERIA, DEFAULT_SEED, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, capsys):
    result = run_criterion(number, DEFAULT_SEED)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
