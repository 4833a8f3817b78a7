# host.py: sum a list on the compiler's desk, pick a random element on the QPU
from pathlib import Path

import if_quingo

ROOT = Path(__file__).resolve().parents[2]
kernel_file = ROOT / "kernels" / "kernel.qu"

if_quingo.configure("qvm", ROOT / "kernels" / "config.json.qfg", seed=7)
if not if_quingo.call_quingo(kernel_file, "sum_random", [2, 6, 8], False):
    raise SystemError("failed to call the quantum kernel.")

res = if_quingo.read_result()
print("result of add example is:", res)
