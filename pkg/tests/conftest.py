"""Prints one terminal line per acceptance criterion as it settles."""

import pytest


class _AcceptanceLines:
    def __init__(self, terminal):
        self._terminal = terminal

    def pytest_runtest_logreport(self, report):
        if report.when != "call" or "test_acceptance" not in report.nodeid:
            return
        name = report.nodeid.rsplit("::", 1)[-1]
        word = "PASS" if report.passed else "FAIL"
        self._terminal.write_line(f"[{word}] {name}")


@pytest.hookimpl(trylast=True)
def pytest_configure(config):
    terminal = config.pluginmanager.get_plugin("terminalreporter")
    if terminal is not None:
        config.pluginmanager.register(_AcceptanceLines(terminal), "acceptance-lines")
