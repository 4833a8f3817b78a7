from pathlib import Path

import pytest

from qgrt.platform import parse_config
from qgrt.runtime import compile_kernel

from support import CONFIG_PATH, KERNELS, make_rtcfg


@pytest.fixture(scope="session")
def kernels() -> Path:
    return KERNELS


@pytest.fixture(scope="session")
def platform():
    return parse_config(CONFIG_PATH.read_text(), str(CONFIG_PATH))


@pytest.fixture
def rt():
    return make_rtcfg


@pytest.fixture
def compile_src(tmp_path):
    """Compile an inline kernel source against the fixture platform."""

    def go(source: str, op: str, args: list, **kw):
        path = tmp_path / "inline.qu"
        path.write_text(source)
        rtcfg = make_rtcfg(**kw)
        rtcfg.search_paths = [KERNELS]
        return compile_kernel(path, op, args, rtcfg)

    return go
