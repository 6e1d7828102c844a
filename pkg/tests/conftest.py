import pytest

# criterion id -> (passed, detail); filled by the acceptance suite
CRITERIA = {}


@pytest.fixture
def criterion():
    def record(cid, passed, detail):
        CRITERIA[cid] = (bool(passed), detail)
        print(f"criterion {cid}: {'PASS' if passed else 'FAIL'}  {detail}")
        return bool(passed)

    return record


def _order(cid):
    num = "".join(ch for ch in cid if ch.isdigit())
    return int(num or 0), cid


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(CRITERIA, key=_order):
        passed, detail = CRITERIA[cid]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {cid:<4} {detail}")
