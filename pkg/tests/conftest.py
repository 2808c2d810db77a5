import pytest

_LINES = {}


class AcceptanceLog:
    """Collects one verdict per criterion; a criterion passes only if all its parts do."""

    def record(self, number, title, ok, detail=""):
        prev = _LINES.get(number)
        ok = bool(ok) and (prev is None or prev[1])
        details = ([prev[2]] if prev and prev[2] else []) + ([detail] if detail else [])
        _LINES[number] = (title, ok, "; ".join(details))
        print(f"criterion {number:>2} {'PASS' if bool(ok) else 'FAIL'}  {title}  {detail}")


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        title, ok, detail = _LINES[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
                                    + (f"  [{detail}]" if detail else ""))
