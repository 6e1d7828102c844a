"""Time the compiled forward kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--rows 50] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from vqkan import _kernels_py
from vqkan.model import VqkanModel
from vqkan.pauli import generate_pool
from vqkan.qnn import QnnModel

try:
    from vqkan import _kernels as compiled
except ImportError:
    compiled = None


def vqkan_case(num_terms, rows, seed=0):
    rng = np.random.default_rng(seed)
    model = VqkanModel(num_qubits=4, input_dim=4)
    pool = generate_pool(4)
    for i in range(num_terms):
        model.add_term(pool[int(rng.integers(len(pool)))])
    model.coeffs[:] = rng.normal(scale=0.3, size=model.coeffs.shape)
    return rng.uniform(size=(rows, 4)), model._kernel_args()


def qnn_case(rows, seed=0):
    rng = np.random.default_rng(seed)
    model = QnnModel(seed=seed)
    angles = np.ascontiguousarray(model.rx_angles(rng.uniform(size=(rows, 4))))
    return (angles, model.thetas, model.num_layers, *model._ham)


def best_time(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--rows", type=int, default=50, help="inputs per forward call")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return

    cases = [(f"vqkan, {t} terms", *vqkan_case(t, args.rows)) for t in (1, 4, 15)]
    print(f"{'case':<20} {'numpy (ms)':>11} {'cython (ms)':>12} {'speedup':>8}")
    for name, xs, kargs in cases:
        ref = _kernels_py.vqkan_forward(xs, *kargs)
        assert np.allclose(compiled.vqkan_forward(xs, *kargs), ref, atol=1e-12)
        py = best_time(lambda: _kernels_py.vqkan_forward(xs, *kargs), args.repeat)
        cy = best_time(lambda: compiled.vqkan_forward(xs, *kargs), args.repeat)
        print(f"{name:<20} {py * 1e3:>11.3f} {cy * 1e3:>12.3f} {py / cy:>7.1f}x")
    qargs = qnn_case(args.rows)
    assert np.allclose(compiled.qnn_forward(*qargs), _kernels_py.qnn_forward(*qargs), atol=1e-12)
    py = best_time(lambda: _kernels_py.qnn_forward(*qargs), args.repeat)
    cy = best_time(lambda: compiled.qnn_forward(*qargs), args.repeat)
    print(f"{'qnn, 3 layers':<20} {py * 1e3:>11.3f} {cy * 1e3:>12.3f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
