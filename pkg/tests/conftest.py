import numpy as np
import pytest

from qiral import ir, prelude
from qiral.oracle import Env, denote
from qiral.rewrite import rules_from_unit
from qiral.vm import random_gauge

SMALL = (2, 2, 2, 2)
MEDIUM = (4, 4, 4, 4)
KAPPA, MU = 0.15, 0.1


@pytest.fixture(scope="session")
def lattice():
    return ir.Lattice("L", SMALL)


@pytest.fixture(scope="session")
def unit(lattice):
    return prelude.load(lattice, with_goal=True)


@pytest.fixture(scope="session")
def rules(unit):
    return rules_from_unit(unit)


@pytest.fixture(scope="session")
def defs(unit):
    return dict(unit.defs)


@pytest.fixture(scope="session")
def gauge():
    return random_gauge(SMALL, 42)


@pytest.fixture(scope="session")
def dense_dirac(defs, gauge):
    return denote(defs["Dirac"], Env(gauge=gauge, scalars={"kappa": KAPPA, "mu": MU}))


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# acceptance criterion reporting -------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not (rep.failed or rep.skipped)):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "states": []})
    if hasattr(rep, "wasxfail"):
        entry["states"].append("XFAIL" if rep.skipped else "FAIL")
    elif rep.skipped:
        entry["states"].append("SKIP")
    else:
        entry["states"].append("PASS" if rep.passed else "FAIL")


def _verdict(states):
    for s in ("FAIL", "XFAIL", "PASS"):
        if s in states:
            return s
    return "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        verdict = _verdict(e["states"])
        note = " (known unattainable as stated; see README)" if verdict == "XFAIL" else ""
        tr.write_line(f"criterion {n:2d}: {verdict:5s} {e['title']}{note}")
