import os
import subprocess
import sys

import numpy as np
import pytest

from beamsnr import kernels

BACKENDS = kernels.available_backends()
needs_c = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


def test_python_backend_always_present():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@needs_c
def test_scan_boundary_parity(rng):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    for _ in range(500):
        M = int(rng.choice([4, 16, 64]))
        p = np.sort(rng.exponential(1.0, M))
        if rng.random() < 0.5:
            p[-3:] *= 30
            p = np.sort(p)
        g = 2.0 ** rng.integers(-3, 4, M - 1).astype(float)
        assert py.scan_boundary(p, g) == cy.scan_boundary(p, g)


@needs_c
def test_scan_boundary_batch_parity(rng):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    P = np.sort(rng.exponential(1.0, (400, 32)), axis=1)
    P[::3, -2:] *= 50
    P = np.sort(P, axis=1)
    g = 2.0 ** rng.integers(-3, 4, 31).astype(float)
    for a, b in zip(py.scan_boundary_batch(P, g), cy.scan_boundary_batch(P, g)):
        np.testing.assert_array_equal(a, b)
    for i in range(0, 400, 37):
        m, hit, s, tot = py.scan_boundary(P[i], g)
        assert (m, hit) == (cy.scan_boundary_batch(P, g)[0][i], cy.scan_boundary_batch(P, g)[1][i])


@needs_c
def test_systolic_sort_parity(rng):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    for _ in range(300):
        raw = rng.integers(0, 2**40, int(rng.choice([1, 5, 64])))
        a, ca = py.systolic_sort(raw)
        b, cb = cy.systolic_sort(raw)
        np.testing.assert_array_equal(a, b)
        assert tuple(ca) == tuple(cb)


@needs_c
def test_separate_fx_parity(rng):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    for _ in range(500):
        M = int(rng.choice([4, 16, 64]))
        p = np.sort(rng.integers(0, 2**14, M))
        z = rng.integers(-4, 5, M - 1)
        sum_max = int(rng.choice([2**16 - 1, 2**20 - 1]))
        acc_max = int(rng.choice([2**18 - 1, 2**32 - 1]))
        assert tuple(py.separate_fx(p, z, sum_max, acc_max)) == tuple(cy.separate_fx(p, z, sum_max, acc_max))


def test_env_forces_python_backend():
    env = dict(os.environ, BEAMSNR_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from beamsnr import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
