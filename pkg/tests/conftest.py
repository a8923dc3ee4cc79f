import sys
from pathlib import Path

import pytest

from phonon_optics.cli import parse_config
from phonon_optics.fock import ModeLayout
from phonon_optics.hamiltonians import TrapBeamConfig

ROOT = Path(__file__).resolve().parent.parent
PAPER_CFG = ROOT / "configs" / "paper_regime.cfg"


@pytest.fixture(scope="session")
def paper_run():
    return parse_config(PAPER_CFG)


@pytest.fixture(scope="session")
def paper(paper_run):
    return paper_run.trap


@pytest.fixture(scope="session")
def layout4():
    return ModeLayout(4)


@pytest.fixture(scope="session")
def layout3():
    return ModeLayout(3)


@pytest.fixture(scope="session")
def layout2():
    return ModeLayout(2)


def commensurate_config(base=1.0e5, multiples=(7, 4, 13, 9), **changes):
    """Trap frequencies that are integer multiples of ``base``, so H(t) has period 2 pi / base.

    The default multiples keep every pairwise difference distinct, so each
    element has exactly one resonant process.
    """
    mx, my, nx, ny = multiples
    fields = dict(
        m=1.1650347089159927e-26, w0=1.5e-6, mu_x=mx * base, mu_y=my * base,
        nu_x=nx * base, nu_y=ny * base, omega0=1e15, Omega=1e6,
    )
    fields.update(changes)
    return TrapBeamConfig(**fields)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    verdicts = getattr(acceptance, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        terminalreporter.write_line(verdicts[number])
