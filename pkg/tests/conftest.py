import pytest


def central_diff(f, x, rel=1e-5):
    h = rel * max(abs(x), 1.0)
    return (f(x + h) - f(x - h)) / (2.0 * h)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@pytest.fixture(scope="session")
def builtin_eos_set():
    from cornerflow import eos
    return {
        "polytropic": (eos.polytropic(1.0, 2.0), 1.0),
        "two_constant": (eos.two_constant(0.5, 1.5, -1.4, -2.2), 1.0),
        "shallow_water": (eos.shallow_water(2.0, 1.0), 1.0),
        "magneto": (eos.magneto(1.0, 5.0 / 3.0, 1.0, 1.0), 1.0),
        "vdw": (eos.van_der_waals(0.28, 0.05), 8.0),
    }
