"""Runs every acceptance criterion at its stated tolerance.

Each criterion prints one ``[PASS]``/``[FAIL]`` line; the lines are also
collected and repeated in an "acceptance criteria" section of the terminal summary. The grid criteria take tens of
minutes in total; deselect them with ``-m "not slow"``.
"""
import pytest

from shakenlattice.harness.acceptance import CRITERIA

FAST = {"C1", "C2", "C3", "C4", "C11"}


def _marks(key):
    return [] if key in FAST else [pytest.mark.slow]


@pytest.mark.parametrize("key", [pytest.param(k, marks=_marks(k)) for k in CRITERIA])
def test_criterion(key, criterion_log):
    try:
        res = CRITERIA[key]()
    except Exception as exc:
        criterion_log.append(f"[FAIL] {key} raised {type(exc).__name__}: {exc}")
        raise
    criterion_log.append(res.line())
    print(res.line())
    assert res.passed, res.line()
