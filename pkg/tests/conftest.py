import json
from pathlib import Path

import pytest
from hypothesis import settings

from qualfsub.cli import main

settings.register_profile("repo", max_examples=200, deadline=None, derandomize=True)
settings.load_profile("repo")

DATA = Path(__file__).parent / "data"


class Run:
    def __init__(self, code, out, err):
        self.code, self.out, self.err = code, out, err

    def json(self):
        return json.loads(self.out)


@pytest.fixture
def cli(capsys):
    """Run the command line in-process and capture what it prints."""

    def run(*argv):
        code = main([str(a) for a in argv])
        cap = capsys.readouterr()
        return Run(code, cap.out, cap.err)

    return run


@pytest.fixture
def data():
    return DATA


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # lets fixtures see whether the test body passed
    rep = (yield).get_result()
    if rep.when == "call":
        item.passed = rep.passed


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
