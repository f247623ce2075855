import numpy as np
import pytest

from stereocarto import build_bank
from stereocarto.kernels import HAVE_NUMBA

from _signals import SR

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])

_criteria = {}


@pytest.fixture(scope="session")
def bank():
    return build_bank(sample_rate=SR)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if not rep.passed:
        detail = f"{item.name}: " + (str(call.excinfo.value).splitlines() or [""])[0]
    prev = _criteria.get(number)
    if prev is not None:
        # several tests may share one criterion; it passes only if all do
        _, prev_ok, prev_detail = prev
        if not prev_ok:
            ok, detail = False, prev_detail
        elif not rep.passed:
            ok = False
        else:
            ok, detail = True, "; ".join(d for d in (prev_detail, detail) if d)
        _criteria[number] = (title, ok, detail)
    else:
        _criteria[number] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, detail = _criteria[number]
        line = f"AC{number} {'PASS' if ok else 'FAIL'}  {title}"
        tr.write_line(f"{line}  [{detail}]" if detail else line)
