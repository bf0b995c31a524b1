import sys


def pytest_terminal_summary(terminalreporter):
    for name in ("test_acceptance", "tests.test_acceptance"):
        mod = sys.modules.get(name)
        if mod is not None and getattr(mod, "CRITERION_LINES", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.CRITERION_LINES:
                terminalreporter.write_line(line)
            break
