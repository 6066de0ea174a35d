import pytest

# criterion id -> (passed, detail); filled by the acceptance tests
ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(cid, title, passed, detail=""):
        ACCEPTANCE[cid] = (title, bool(passed), detail)
        status = "PASS" if passed else "FAIL"
        print(f"[criterion {cid:>2}] {status}  {title}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(
            f"criterion {cid:>2}: {'PASS' if passed else 'FAIL'}  {title}  {detail}"
        )
