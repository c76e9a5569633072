import dataclasses
from pathlib import Path

import pytest

from chargenet.network import load_instance

DATA = Path(__file__).parent / "data"

VERDICTS = []


def record_verdict(line):
    """Remember an acceptance verdict for the end-of-run summary."""
    VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # replay the acceptance PASS/FAIL lines uncaptured, so they show up
    # even without -s
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


def scale_demand(inst, factor):
    """Copy of inst with every od intercept multiplied by factor."""
    ods = [dataclasses.replace(od,
                               intercepts=tuple(factor * g
                                                for g in od.intercepts))
           for od in inst.ods]
    return dataclasses.replace(inst, ods=ods).validate()


@pytest.fixture(scope="session")
def toy_a():
    return load_instance(DATA / "toy_a.txt")
