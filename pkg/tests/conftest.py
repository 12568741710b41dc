import pytest

from typelab import asymptotics as asy
from typelab.model import classify_type, make_model
from typelab.verify import DEFAULT_ZOO


@pytest.fixture(scope="session")
def zoo():
    return [make_model(f, p) for f, p in DEFAULT_ZOO]


@pytest.fixture(scope="session")
def zoo_profiles(zoo):
    return {m.model_id: asy.profile(m) for m in zoo}


@pytest.fixture(scope="session")
def zoo_verdicts(zoo):
    return {m.model_id: classify_type(m) for m in zoo}


_cache = {}


@pytest.fixture(scope="session")
def profile_of():
    """Memoized profile for ``(family, params)``."""

    def get(family, **params):
        key = (family, tuple(sorted(params.items())))
        if key not in _cache:
            _cache[key] = asy.profile(make_model(family, params))
        return _cache[key]

    return get


# -- acceptance summary -------------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.failed or report.skipped:
        n, title = props["criterion"]
        entry = _criteria.setdefault(n, [title, True])
        entry[1] = entry[1] and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
