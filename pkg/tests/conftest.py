import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kprojective.kscalar import Field

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

FIELDS = [Field.R, Field.C, Field.H]


def quat_to_c2(x):
    """2x2 complex matrix of a quaternion; an oracle independent of the mult table."""
    a, b, c, d = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
    z, w = a + 1j * b, c + 1j * d
    return np.stack([np.stack([z, w], -1), np.stack([-w.conj(), z.conj()], -1)], -2)


def c2_to_quat(m):
    z, w = m[..., 0, 0], m[..., 0, 1]
    return np.stack([z.real, z.imag, w.real, w.imag], -1)


def oracle_mul(x, y):
    return c2_to_quat(quat_to_c2(x) @ quat_to_c2(y))


finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def coeffs(field):
    r = field.r
    return st.lists(finite, min_size=r, max_size=r).map(lambda c: np.array(c + [0.0] * (4 - r)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=FIELDS, ids=lambda f: f.value)
def field(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for r in sorted(test_acceptance.RESULTS, key=lambda r: r.number):
            terminalreporter.write_line(r.line())
