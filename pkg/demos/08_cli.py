"""
Driving the command line
========================

The ``mststream`` command wraps the estimators. Each call prints a JSON
report; this script runs a few of them in-process and shows the fields.
"""

import json
import subprocess
import sys


def mststream(*args):
    out = subprocess.run([sys.executable, "-m", "mststream.cli", *args], capture_output=True, text=True)
    return out.returncode, out.stdout, out.stderr


# exact MST of a generated instance
code, out, _ = mststream("oracle", "--gen", "cantor:n=16")
print("oracle:", out.strip())

# the grid estimator Z with three passes, next to the oracle
code, out, _ = mststream("estimate", "--gen", "uniform:n=40,d=2,Lambda=256", "--mode", "exact-Z",
                         "--passes", "3", "--threshold", "1e9", "--oracle", "--deterministic", "--seed", "5")
rep = json.loads(out)
print("estimate:", rep["estimate"], "oracle:", rep["oracle_mst"], "ratio:", rep["ratio"])

# bad flags are configuration errors (exit 2)
code, _, err = mststream("estimate", "--gen", "uniform:n=4", "--alpha", "1", "--passes", "4")
print("exit", code, "-", err.strip())

# quick invariant checks
code, out, _ = mststream("selftest")
print(out.strip(), "\nexit", code)
