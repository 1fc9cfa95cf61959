import numpy as np
import pytest

from dwke import kernel
from dwke.integrator import IntegratorConfig, integrate
from dwke.spectrum import InitialData, Spectrum, make_spectrum

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the terminal summary."""

    def _report(label: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")

    return _report


@pytest.fixture(params=sorted(kernel.BACKENDS))
def backend(request):
    return request.param


def spectrum_of(values, K=None) -> Spectrum:
    v = np.zeros(K or len(values))
    v[: len(values)] = values
    return Spectrum(v)


@pytest.fixture(scope="session")
def reference_run():
    """M1 = m2 = 1/2 on 64 bins, integrated to t = 100 with unit sampling."""
    s0 = make_spectrum(InitialData(0.5, ((2, 0.5),)), 64).spectrum
    return integrate(s0, IntegratorConfig(t_end=100.0))
