"""Pure numpy implementation of the batched forward kernels.

Mirrors ``_kernels.pyx`` argument for argument; used when the compiled
extension is unavailable (or ``VQKAN_PURE_PYTHON=1``).
"""
import numpy as np

DEGREE = 3


def _spans_and_basis(knots, num_basis, x):
    """Vectorised Cox-de Boor over an array ``x``: returns spans and (..., 4) values."""
    x = np.asarray(x, dtype=float)
    spans = np.searchsorted(knots, x, side="right") - 1
    spans = np.where(x >= knots[num_basis], num_basis - 1, spans)
    vals = np.zeros(x.shape + (DEGREE + 1,))
    left = np.zeros(x.shape + (DEGREE + 1,))
    right = np.zeros(x.shape + (DEGREE + 1,))
    vals[..., 0] = 1.0
    for j in range(1, DEGREE + 1):
        left[..., j] = x - knots[spans + 1 - j]
        right[..., j] = knots[spans + j] - x
        saved = np.zeros(x.shape)
        for r in range(j):
            temp = vals[..., r] / (right[..., r + 1] + left[..., j - r])
            vals[..., r] = saved + right[..., r + 1] * temp
            saved = left[..., j - r] * temp
        vals[..., j] = saved
    return spans, vals


def _silu(x):
    # inputs live in [0, 1] here
    return x / (np.exp(-x) + 1.0)


def _product_state(angles):
    """Batch of Ry(angles[:, j]) on |0...0>, little-endian."""
    m, n = angles.shape
    c = np.cos(angles / 2.0)
    s = np.sin(angles / 2.0)
    idx = np.arange(1 << n)
    psi = np.ones((m, 1 << n), dtype=np.complex128)
    for j in range(n):
        bit = ((idx >> j) & 1).astype(bool)
        psi *= np.where(bit[None, :], s[:, j : j + 1], c[:, j : j + 1])
    return psi


def _encode(inputs, num_qubits, encoding):
    d = inputs.shape[1]
    cols = inputs[:, [j % d for j in range(num_qubits)]]
    if encoding == 0:
        return 2.0 * np.arccos(np.sqrt(cols))
    return 2.0 * np.arccos(cols)


def _apply_exp(psi, flip, phase, c, s):
    # psi <- c psi + i s P psi, with (P psi)[k ^ flip] = phase[k] psi[k]
    idx = np.arange(psi.shape[1])
    p_psi = np.empty_like(psi)
    p_psi[:, idx ^ flip] = phase[None, :] * psi
    return c[:, None] * psi + (1j * s)[:, None] * p_psi


def _z_readout(psi, qubits):
    probs = psi.real ** 2 + psi.imag ** 2
    idx = np.arange(psi.shape[1])
    out = np.empty((psi.shape[0], len(qubits)))
    for i, q in enumerate(qubits):
        sign = 1.0 - 2.0 * ((idx >> q) & 1)
        out[:, i] = probs @ sign
    return out


def _hamiltonian(psi, ham_flip, ham_phase, ham_coef):
    idx = np.arange(psi.shape[1])
    total = np.zeros(psi.shape[0])
    for h in range(len(ham_coef)):
        val = np.sum(np.conj(psi[:, idx ^ ham_flip[h]]) * (ham_phase[h][None, :] * psi), axis=1)
        total += ham_coef[h] * val.real
    return total


def vqkan_forward(
    inputs,
    num_qubits,
    encoding,
    layer_offsets,
    term_flip,
    term_phase,
    coeffs,
    knots,
    readout,
    ham_flip,
    ham_phase,
    ham_coef,
    layer_inputs_out=None,
):
    """Hamiltonian expectation for every row of ``inputs``.

    ``layer_inputs_out`` (shape ``(num_layers + 1, M, d)``) receives the input
    vector seen by each layer plus the final readout, if given.
    """
    inputs = np.ascontiguousarray(inputs, dtype=float)
    num_basis = len(knots) - DEGREE - 1
    psi = _product_state(_encode(inputs, num_qubits, encoding))
    x = inputs
    num_layers = len(layer_offsets) - 1
    for n in range(num_layers):
        if layer_inputs_out is not None:
            layer_inputs_out[n] = x
        lo, hi = layer_offsets[n], layer_offsets[n + 1]
        if hi > lo:
            spans, vals = _spans_and_basis(knots, num_basis, x)
            base = _silu(x)
            gather = spans[..., None] - DEGREE + np.arange(DEGREE + 1)
            for t in range(lo, hi):
                act = base + np.sum(coeffs[t][gather] * vals, axis=-1)
                act = np.clip(act, -1.0, 1.0)
                phi = np.sum(2.0 * np.arccos(act), axis=1)
                psi = _apply_exp(psi, term_flip[t], term_phase[t], np.cos(phi), np.sin(phi))
        x = 0.5 * (_z_readout(psi, readout) + 1.0)
    if layer_inputs_out is not None:
        layer_inputs_out[num_layers] = x
    return _hamiltonian(psi, ham_flip, ham_phase, ham_coef)


def _apply_1q(psi, q, m00, m01, m10, m11):
    """Per-row 2x2 matrices (arrays of length M) on qubit ``q``."""
    dim = psi.shape[1]
    idx = np.arange(dim)
    lo = idx[((idx >> q) & 1) == 0]
    hi = lo | (1 << q)
    a0 = psi[:, lo].copy()
    a1 = psi[:, hi].copy()
    psi[:, lo] = m00[:, None] * a0 + m01[:, None] * a1
    psi[:, hi] = m10[:, None] * a0 + m11[:, None] * a1


def _cz_chain(psi, num_qubits):
    idx = np.arange(psi.shape[1])
    sign = np.ones(psi.shape[1])
    for q in range(num_qubits - 1):
        both = ((idx >> q) & 1) & ((idx >> (q + 1)) & 1)
        sign *= 1.0 - 2.0 * both
    psi *= sign[None, :]


def qnn_forward(rx_angles, thetas, num_layers, ham_flip, ham_phase, ham_coef):
    """Layered Ry / CZ-chain / Rx(data) / Ry / CZ-chain circuit, one row per sample."""
    rx_angles = np.ascontiguousarray(rx_angles, dtype=float)
    m, n = rx_angles.shape
    psi = np.zeros((m, 1 << n), dtype=np.complex128)
    psi[:, 0] = 1.0
    ones = np.ones(m)
    for layer in range(num_layers):
        base = 2 * n * layer
        for q in range(n):
            c, s = np.cos(thetas[base + q] / 2.0), np.sin(thetas[base + q] / 2.0)
            _apply_1q(psi, q, c * ones, -s * ones, s * ones, c * ones)
        _cz_chain(psi, n)
        for q in range(n):
            c, s = np.cos(rx_angles[:, q] / 2.0), np.sin(rx_angles[:, q] / 2.0)
            _apply_1q(psi, q, c + 0j, -1j * s, -1j * s, c + 0j)
        for q in range(n):
            c, s = np.cos(thetas[base + n + q] / 2.0), np.sin(thetas[base + n + q] / 2.0)
            _apply_1q(psi, q, c * ones, -s * ones, s * ones, c * ones)
        _cz_chain(psi, n)
    return _hamiltonian(psi, ham_flip, ham_phase, ham_coef)
