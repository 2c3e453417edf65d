"""Every acceptance criterion at its stated tolerance.

Each criterion prints one ``[PASS]``/``[FAIL]`` line. The lines are also
collected and repeated in the terminal summary so they appear in a plain
``pytest -v`` log.
"""

from __future__ import annotations

import pytest

from gaugechain.acceptance import CRITERIA

SUMMARY_LINES: list[str] = []


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n}")
def test_criterion(number):
    result = CRITERIA[number]()
    line = result.summary_line()
    SUMMARY_LINES.append(line)
    print(line)
    failing = [c for c in result.checks if not c.passed]
    assert not failing, line
