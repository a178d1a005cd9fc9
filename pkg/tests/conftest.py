import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "shortest-path emergence",
    2: "beta limit",
    3: "exploration/convergence trade-off",
    4: "slowing clocks",
    5: "recursive method accuracy",
    6: "auxiliary series",
    7: "lemma brackets and fixed point",
    8: "constant single-reward DAG survival",
}

_parts: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture(scope="session")
def record():
    """``record(criterion, part, passed, detail)`` collects one acceptance sub-check."""
    def _record(criterion: int, part: str, passed: bool, detail: str) -> bool:
        _parts.setdefault(criterion, []).append((part, bool(passed), detail))
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _parts:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_parts):
        parts = _parts[k]
        ok = all(p for _, p, _ in parts)
        body = "; ".join(f"{name} {'ok' if p else 'FAILED'} ({detail})" for name, p, detail in parts)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k} {CRITERIA[k]}: {body}")
