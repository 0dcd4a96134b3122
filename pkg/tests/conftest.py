import os

os.environ["JIVE_STRICT"] = "1"

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from jive import core  # noqa: E402

core.STRICT = True


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def audit_summary():
    """Worst monotonicity, orthogonality and closure figures over every audited run."""
    log = core.AUDIT_LOG
    finite = [e for e in log if np.isfinite(e["slack"])]
    least_squares = [e for e in log if not e["penalized"]]
    penalized = [e for e in log if e["penalized"]]
    return {
        "runs": len(log),
        "monotone_runs": len(finite),
        "max_rise": max((e["max_rise"] / e["scale"] for e in finite), default=0.0),
        "fits": len(core.FIT_RISES),
        "max_fit_rise": max(core.FIT_RISES, default=0.0),
        "max_cross": max((e["max_cross"] for e in log), default=0.0),
        "max_closure_ls": max((e["closure_pp"] for e in least_squares), default=0.0),
        "max_closure_penalized": max((e["closure_pp"] for e in penalized), default=0.0),
    }


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture
def report():
    """Record and print the pass/fail line of one acceptance criterion."""
    def write(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return write


def pytest_collection_modifyitems(items):
    # acceptance checks over the whole suite's audit log need every other run first
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    s = audit_summary()
    terminalreporter.write_line(
        f"audit: {s['runs']} decompositions, {s['fits']} internal fits; "
        f"max relative objective rise {s['max_rise']:.3e} over {s['monotone_runs']} "
        f"fixed-objective runs, {s['max_fit_rise']:.3e} over internal fits; "
        f"max |J A'| {s['max_cross']:.3e}; max closure gap {s['max_closure_ls']:.4f}pp "
        f"least squares, {s['max_closure_penalized']:.4f}pp penalized"
    )
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
