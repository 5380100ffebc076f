import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from qanho.bound import staged_ground_state


class _Run:
    def __init__(self, target):
        self.stage_contexts = []
        self.result = staged_ground_state(target, on_stage=lambda b, ctx, dt: self.stage_contexts.append(ctx))


@pytest.fixture(scope="session")
def run_120():
    return _Run(120)


@pytest.fixture(scope="session")
def record_run():
    return _Run(1184)


def pytest_terminal_summary(terminalreporter):
    from _oracles import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
