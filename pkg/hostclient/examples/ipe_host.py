# host.py: the host driver of the iterative phase estimation algorithm
from pathlib import Path

import if_quingo

ROOT = Path(__file__).resolve().parents[2]
KERNEL = ROOT / "kernels" / "ipe.qu"


def ipe(m: int, n: int) -> float:
    """Call the kernel n times and average the m-bit phase estimates."""
    res = 0.0
    for i in range(n):
        if_quingo.configure("qvm", ROOT / "kernels" / "config.json.qfg", seed=i)
        if not if_quingo.call_quingo(KERNEL, "ipe", m):
            raise SystemError("The execution of the quantum kernel fails.")
        res += if_quingo.read_result()
    return res / n


if __name__ == "__main__":
    print(ipe(3, 5))
