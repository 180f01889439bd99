import os
import re
import sys

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPT_RE = re.compile(r"::test_(a\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion (tests named test_aNN_*)."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            m = _ACCEPT_RE.search(report.nodeid)
            if not m:
                continue
            label, name = m.group(1).upper(), m.group(2).replace("_", " ")
            verdict = "PASS" if outcome == "passed" else "FAIL"
            if lines.get(label, ("", "PASS"))[1] != "FAIL":
                lines[label] = (name, verdict)
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for label in sorted(lines, key=lambda s: int(s[1:])):
            name, verdict = lines[label]
            terminalreporter.write_line(f"{label} ({name}): {verdict}")
