import os

# single-threaded numerics keep runs bit-reproducible
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import numpy as np
import pytest

from chemotax.grid import DomainSpec
from chemotax.model import ModelParams

# criterion number -> list of (ok, detail); filled by the acceptance module
CRITERIA: dict[int, list[tuple[bool, str]]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    CRITERIA.setdefault(n, []).append((bool(ok), detail))
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        entries = CRITERIA[n]
        ok = all(e[0] for e in entries)
        details = "; ".join(e[1] for e in entries)
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {details}")


def passive_params(tau: float = 0.0) -> ModelParams:
    """Parameters with every sensitivity zero (pure diffusion).

    ModelParams rejects chi1 = chi2 = 0 for real runs; the heat-flow checks
    need exactly that case, so the validation is skipped here on purpose.
    """
    p = object.__new__(ModelParams)
    for name, val in dict(chi1=0.0, chi2=0.0, chi3=0.0, tau1=tau, tau2=tau).items():
        object.__setattr__(p, name, val)
    return p


@pytest.fixture
def unit64():
    return DomainSpec(1.0, 1.0, 64, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
