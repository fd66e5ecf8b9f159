import numpy as np
import pytest
from hypothesis import settings

from diracbie.geometry import build_preset_curve, build_sphere_grid
from diracbie.kernels import SpectralPoint
from diracbie.ops2d import Assembly2D
from diracbie.ops3d import Assembly3D

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

_ACCEPTANCE = {}


def record(number, title, ok, detail=""):
    """Store one acceptance line; a criterion fails if any of its parts fail."""
    prev = _ACCEPTANCE.get(number)
    ok = bool(ok) and (prev is None or prev[1])
    details = ([prev[2]] if prev and prev[2] else []) + ([detail] if detail else [])
    _ACCEPTANCE[number] = (title, ok, "; ".join(details))
    print(f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title} {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{number:>2}] {title}  ({detail})")


_ASM2D = {}


def _cached_2d(name, n, z=0.3, m=1.0, branch=1):
    key = (name, n, z, m, branch)
    if key not in _ASM2D:
        _ASM2D[key] = Assembly2D(build_preset_curve(name, n=n), SpectralPoint(z, m, branch))
    return _ASM2D[key]


@pytest.fixture(scope="session")
def asm2d():
    return _cached_2d


_ASM3D = {}


def _cached_3d(level, pv="polar", z=0.3, m=1.0):
    key = (level, pv, z, m)
    if key not in _ASM3D:
        a = Assembly3D(build_sphere_grid(level), SpectralPoint(z, m), pv=pv)
        if pv != "naive":
            a.prefetch()
        _ASM3D[key] = a
    return _ASM3D[key]


@pytest.fixture(scope="session")
def asm3d():
    return _cached_3d


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
