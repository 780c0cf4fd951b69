"""Print one PASS/FAIL line per acceptance criterion after the run."""

import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    if module is None:
        return
    labels = module.CRITERIA
    status: dict[str, str] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" in nodeid:
                name = nodeid.split("::")[-1]
                if name in labels:
                    status[name] = "PASS" if outcome == "passed" else "FAIL"
    if not status:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, label in labels.items():
        if name in status:
            terminalreporter.write_line(f"  {status[name]}  {label}")
