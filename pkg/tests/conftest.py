import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from factorlat.lattice import LatticeSpec
from factorlat.model import ModelParams

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    # acceptance criteria print their own report; keep them last
    items.sort(key=lambda it: "test_acceptance" in it.nodeid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def chain10():
    return LatticeSpec.chain(10)


@pytest.fixture
def xyx_params():
    def make(lattice, dy=0.25, hz=0.0, **kw):
        return ModelParams.for_lattice(lattice, delta_y=dy, delta_z=1.0,
                                       field=(0.0, 0.0, hz), **kw)
    return make


def random_state(dim, rng, complex_=False):
    v = rng.normal(size=dim)
    if complex_:
        v = v + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def singlet():
    """(|ud> - |du>)/sqrt2 on two sites; index = bit0 site0, bit1 site1."""
    v = np.zeros(4)
    v[0b10] = 1 / np.sqrt(2)   # site0 up, site1 down
    v[0b01] = -1 / np.sqrt(2)
    return v


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")
