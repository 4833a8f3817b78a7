from pathlib import Path

import pytest

HERE = Path(__file__).resolve()
ROOT = HERE.parents[2]
KERNELS = ROOT / "kernels"
CONFIG = KERNELS / "config.json.qfg"
EXAMPLES = HERE.parents[1] / "examples"


@pytest.fixture
def fresh_session(monkeypatch, tmp_path):
    """A private client session so tests do not share module state."""
    import if_quingo
    session = if_quingo.ClientSession(workdir=tmp_path)
    session.configure("qvm", CONFIG, seed=7)
    return session


@pytest.fixture(scope="session")
def kernels():
    return KERNELS


@pytest.fixture(scope="session")
def config_path():
    return CONFIG


@pytest.fixture(scope="session")
def examples_dir():
    return EXAMPLES
