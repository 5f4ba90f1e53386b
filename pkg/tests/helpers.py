"""Shared helpers for the test suite (CLI runner, canned inputs)."""

import subprocess
import sys

import numpy as np


def run_cli(*args, cwd=None):
    """Run the command-line tool in a subprocess; returns CompletedProcess.

    stdout/stderr are captured as bytes so determinism tests can compare
    outputs bitwise.
    """
    return subprocess.run(
        [sys.executable, "-m", "rpcusum", *map(str, args)],
        capture_output=True,
        cwd=cwd,
    )


def write_matrix_csv(path, values):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in np.asarray(values, dtype=np.float64):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def step_matrix(n=50, p=10, split=25, level=5.0):
    """Noiseless step input: rows 1..split zero, the rest at `level`."""
    x = np.zeros((n, p))
    x[split:] = level
    return x


def naive_bonferroni(p):
    return [min(1.0, len(p) * v) for v in p]


def naive_benjamini_hochberg(p):
    # direct transcription of the step-up definition, O(k^2)
    k = len(p)
    order = np.argsort(p, kind="stable")
    adjusted = [0.0] * k
    for pos, idx in enumerate(order):
        adjusted[idx] = min(
            1.0, min(k * p[order[h]] / (h + 1) for h in range(pos, k))
        )
    return adjusted
