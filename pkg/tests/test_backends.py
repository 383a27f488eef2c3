"""Compiled and pure-Python kernels must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest

from dynqueue import ServiceProfile, backend_name
from dynqueue import _kernels_py

compiled = pytest.importorskip(
    "dynqueue._kernels", reason="compiled kernel extension not built"
)

CASES = [
    # (profile, tau, lam, policy, threshold, x0, n0, horizon)
    (ServiceProfile("quadratic", (4.0, 0.5, 1.0)), 1.0, 0.6, 1, 0.63, 0.9, 5, 3000),
    (ServiceProfile("quadratic", (4.0, 0.5, 1.0)), 1.0, 0.754, 1, 0.63, 0.0, 0, 3000),
    (ServiceProfile("constant", (2.0,)), 1.0, 0.4, 0, 2.0, 0.57, 1, 1000),
    (ServiceProfile("affine", (1.0, 1.0)), 0.7, 0.45, 1, 0.8, 1.0, 10, 2000),
    (
        ServiceProfile("piecewise-linear", (0.0, 2.0, 0.5, 1.0, 1.0, 3.0)),
        2.0, 0.5, 1, 0.4, 0.2, 3, 2000,
    ),
    (ServiceProfile("quadratic", (9.0, 0.0, 1.0)), 1.0, 0.0, 0, 2.0, 0.8, 7, 100),
]


def test_backend_is_reported():
    assert backend_name() in ("compiled", "python")


@pytest.mark.parametrize("case", CASES, ids=range(len(CASES)))
@pytest.mark.parametrize("record_all", [True, False], ids=["events", "starts"])
def test_run_queue_bit_identical(case, record_all):
    profile, tau, lam, policy, threshold, x0, n0, horizon = case
    code, par = profile.kernel_spec()
    a = compiled.run_queue(code, par, tau, lam, policy, threshold,
                           x0, n0, horizon, record_all)
    b = _kernels_py.run_queue(code, par, tau, lam, policy, threshold,
                              x0, n0, horizon, record_all)
    for arr_a, arr_b in zip(a[:9], b[:9]):
        assert np.array_equal(np.asarray(arr_a), np.asarray(arr_b))
    assert a[9:] == b[9:]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumeration_bit_identical(n):
    profile = ServiceProfile("quadratic", (4.0, 0.5, 1.0))
    code, par = profile.kernel_spec()
    a = compiled.enumerate_min_schedule(code, par, 1.0, 0.45, n, 0.05, 1.5)
    b = _kernels_py.enumerate_min_schedule(code, par, 1.0, 0.45, n, 0.05, 1.5)
    assert a[0] == b[0]
    assert np.array_equal(np.asarray(a[1]), np.asarray(b[1]))
    assert a[2] == b[2]


def test_env_var_forces_pure_python():
    env = dict(os.environ, DYNQUEUE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import dynqueue; print(dynqueue.backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "python"
