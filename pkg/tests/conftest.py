import numpy as np
import pytest

from simstruct.lattice_search import companion, spectral_split
from simstruct.metric_core import FlatTorus, MappingTorus, make_cone
from simstruct.presets import PLASTIC_POLY
from simstruct.pseudogroup import build_cover


@pytest.fixture(scope="session")
def mn_split():
    return spectral_split([[2, 1], [1, 1]])


@pytest.fixture(scope="session")
def mn(mn_split):
    return MappingTorus(mn_split)


@pytest.fixture(scope="session")
def plastic_split():
    return spectral_split(companion(PLASTIC_POLY))


@pytest.fixture(scope="session")
def plastic(plastic_split):
    return MappingTorus(plastic_split)


@pytest.fixture(scope="session")
def mn_wavy(mn_split):
    return MappingTorus(mn_split, fourier=[(0.15, -0.05), (0.02, 0.03)])


@pytest.fixture(scope="session")
def flat3():
    return FlatTorus(3)


@pytest.fixture(scope="session")
def cone1():
    return make_cone("sphere", 1.0)


@pytest.fixture(scope="session")
def cone2():
    return make_cone("sphere", 2.0)


@pytest.fixture(scope="session")
def mn_cover(mn):
    return build_cover(mn, 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance bookkeeping: tests marked @pytest.mark.criterion(n, title) add
# ("detail", text) to record_property; the summary prints one line per criterion.
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed:
        detail = (detail + "; " if detail else "") + str(rep.longrepr).strip().splitlines()[-1][:160]
    _CRITERIA[number] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
