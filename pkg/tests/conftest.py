import numpy as np
import pytest

from aloof.decoherence import DecoherenceInput
from aloof.physics import BeamParams, InteractionGeometry, get_material


@pytest.fixture(scope="session")
def silicon():
    return get_material("silicon-n-doped")


@pytest.fixture(scope="session")
def gold():
    return get_material("gold")


@pytest.fixture(scope="session")
def beam():
    return BeamParams(1000.0, 0.377)


@pytest.fixture(scope="session")
def make_input(beam):
    def make(material, dx, plate_length=0.01, z0=0.0):
        return DecoherenceInput(material, beam, InteractionGeometry(plate_length, dx, z0))
    return make


def simpson(f, a, b, n):
    """Composite Simpson rule with n (even) panels."""
    if n % 2:
        n += 1
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record the verdict of one acceptance criterion: acceptance(n, ok, detail)."""
    def record(number, ok, detail):
        request.config.stash[_ACCEPTANCE][number] = (bool(ok), detail)
        print(f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
