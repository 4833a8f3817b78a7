from pathlib import Path

from qgrt.runtime import RuntimeConfig

KERNELS = Path(__file__).resolve().parent.parent / "kernels"
CONFIG_PATH = KERNELS / "config.json.qfg"

INLINE_HEADER = "import config.json.*;\nimport operations.*;\n\n"


def make_rtcfg(seed: int = 0, **kw) -> RuntimeConfig:
    return RuntimeConfig(config_path=CONFIG_PATH, seed=seed, **kw)
