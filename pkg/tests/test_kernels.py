import os
import subprocess
import sys

import numpy as np
import pytest

from vqkan import _kernels_py, backend
from vqkan.model import VqkanModel
from vqkan.pauli import generate_pool
from vqkan.qnn import QnnModel
from vqkan.spline import SplineGrid

from test_model import random_model

compiled = pytest.importorskip("vqkan._kernels", reason="compiled extension not built")


@pytest.mark.parametrize("encoding", ["sqrt_acos", "acos"])
@pytest.mark.parametrize("seed", range(4))
def test_vqkan_parity(encoding, seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, num_qubits=4, num_layers=int(rng.integers(1, 4)), grid=SplineGrid(), encoding=encoding)
    xs = np.vstack([rng.uniform(size=(20, 2)), [[0, 0], [1, 1], [0, 1]]])
    args = m._kernel_args()
    out = [np.zeros((m.num_layers + 1, len(xs), 2)) for _ in range(2)]
    a = compiled.vqkan_forward(xs, *args, out[0])
    b = _kernels_py.vqkan_forward(xs, *args, out[1])
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(out[0], out[1], atol=1e-12)


def test_vqkan_parity_every_pool_member():
    m = VqkanModel(num_qubits=4, input_dim=2)
    for op in generate_pool(4, "extended"):
        m.add_term(op)
    m.coeffs[:] = np.random.default_rng(1).normal(scale=0.3, size=m.coeffs.shape)
    xs = np.random.default_rng(2).uniform(size=(5, 2))
    args = m._kernel_args()
    np.testing.assert_allclose(compiled.vqkan_forward(xs, *args), _kernels_py.vqkan_forward(xs, *args), atol=1e-12)


def test_qnn_parity():
    for seed in range(4):
        m = QnnModel(seed=seed, num_layers=seed + 1)
        u = np.random.default_rng(seed).uniform(size=(15, 4))
        args = (np.ascontiguousarray(m.rx_angles(u)), m.thetas, m.num_layers, *m._ham)
        np.testing.assert_allclose(compiled.qnn_forward(*args), _kernels_py.qnn_forward(*args), atol=1e-12)


def test_backend_prefers_compiled():
    if os.environ.get("VQKAN_PURE_PYTHON") == "1":
        pytest.skip("pure Python forced")
    assert backend.NAME == "cython"


def test_env_forces_pure_python():
    env = dict(os.environ, VQKAN_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from vqkan import backend; print(backend.NAME)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
