# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched forward kernels (same contract as ``_kernels_py``)."""
import numpy as np

from libc.math cimport acos, cos, sin, exp, sqrt
from libc.stdlib cimport malloc, free

cdef enum:
    DEGREE = 3


cdef inline Py_ssize_t _find_span(const double[::1] knots, Py_ssize_t num_basis, double x) nogil:
    cdef Py_ssize_t lo, hi, mid
    if x >= knots[num_basis]:
        return num_basis - 1
    # largest i with knots[i] <= x
    lo = 0
    hi = knots.shape[0]
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if knots[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline void _basis(const double[::1] knots, Py_ssize_t span, double x, double* vals) nogil:
    cdef double left[DEGREE + 1]
    cdef double right[DEGREE + 1]
    cdef double saved, temp
    cdef int j, r
    vals[0] = 1.0
    for j in range(1, DEGREE + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            temp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        vals[j] = saved


cdef inline double _hamiltonian(double complex* psi, Py_ssize_t dim,
                                const long[::1] ham_flip,
                                const double complex[:, ::1] ham_phase,
                                const double[::1] ham_coef) nogil:
    cdef double total = 0.0, acc
    cdef double complex v, a
    cdef Py_ssize_t h, k
    cdef long f
    for h in range(ham_coef.shape[0]):
        f = ham_flip[h]
        acc = 0.0
        for k in range(dim):
            # Re(conj(psi[k ^ f]) * phase[k] * psi[k])
            v = ham_phase[h, k] * psi[k]
            a = psi[k ^ f]
            acc += a.real * v.real + a.imag * v.imag
        total += ham_coef[h] * acc
    return total


def vqkan_forward(
    inputs,
    int num_qubits,
    int encoding,
    const long[::1] layer_offsets,
    const long[::1] term_flip,
    const double complex[:, ::1] term_phase,
    const double[:, ::1] coeffs,
    const double[::1] knots,
    const long[::1] readout,
    const long[::1] ham_flip,
    const double complex[:, ::1] ham_phase,
    const double[::1] ham_coef,
    layer_inputs_out=None,
):
    cdef const double[:, ::1] x_in = np.ascontiguousarray(inputs, dtype=np.float64)
    cdef Py_ssize_t m_count = x_in.shape[0]
    cdef Py_ssize_t d = x_in.shape[1]
    cdef Py_ssize_t dim = 1 << num_qubits
    cdef Py_ssize_t num_basis = knots.shape[0] - DEGREE - 1
    cdef Py_ssize_t num_layers = layer_offsets.shape[0] - 1
    cdef double[::1] out = np.empty(m_count)
    cdef double[:, :, ::1] li
    cdef bint keep = layer_inputs_out is not None
    if keep:
        li = layer_inputs_out

    cdef double complex* psi = <double complex*> malloc(dim * sizeof(double complex))
    cdef double complex* tmp = <double complex*> malloc(dim * sizeof(double complex))
    cdef double* x = <double*> malloc(d * sizeof(double))
    cdef double* base = <double*> malloc(d * sizeof(double))
    cdef Py_ssize_t* spans = <Py_ssize_t*> malloc(d * sizeof(Py_ssize_t))
    cdef double* vals = <double*> malloc(d * (DEGREE + 1) * sizeof(double))
    cdef double* cs = <double*> malloc(num_qubits * sizeof(double))
    cdef double* sn = <double*> malloc(num_qubits * sizeof(double))

    cdef Py_ssize_t m, j, k, n, t, i, r
    cdef double a, u, act, phi, c, s, zr, p
    cdef long f
    cdef double complex amp

    try:
        with nogil:
            for m in range(m_count):
                for i in range(d):
                    x[i] = x_in[m, i]
                # product state of Ry rotations, qubit j reads x[j % d]
                for j in range(num_qubits):
                    u = x[j % d]
                    if encoding == 0:
                        a = 2.0 * acos(sqrt(u))
                    else:
                        a = 2.0 * acos(u)
                    cs[j] = cos(a / 2.0)
                    sn[j] = sin(a / 2.0)
                for k in range(dim):
                    p = 1.0
                    for j in range(num_qubits):
                        if (k >> j) & 1:
                            p = p * sn[j]
                        else:
                            p = p * cs[j]
                    psi[k] = p
                for n in range(num_layers):
                    if keep:
                        for i in range(d):
                            li[n, m, i] = x[i]
                    if layer_offsets[n + 1] > layer_offsets[n]:
                        for i in range(d):
                            spans[i] = _find_span(knots, num_basis, x[i])
                            _basis(knots, spans[i], x[i], &vals[i * (DEGREE + 1)])
                            base[i] = x[i] / (exp(-x[i]) + 1.0)
                    for t in range(layer_offsets[n], layer_offsets[n + 1]):
                        phi = 0.0
                        for i in range(d):
                            act = base[i]
                            for r in range(DEGREE + 1):
                                act = act + coeffs[t, spans[i] - DEGREE + r] * vals[i * (DEGREE + 1) + r]
                            if act > 1.0:
                                act = 1.0
                            elif act < -1.0:
                                act = -1.0
                            phi = phi + 2.0 * acos(act)
                        c = cos(phi)
                        s = sin(phi)
                        f = term_flip[t]
                        # psi <- c psi + i s P psi
                        for k in range(dim):
                            tmp[k ^ f] = term_phase[t, k] * psi[k]
                        for k in range(dim):
                            amp = tmp[k]
                            psi[k] = c * psi[k] + (-s * amp.imag + 1j * (s * amp.real))
                    for i in range(d):
                        zr = 0.0
                        for k in range(dim):
                            p = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
                            if (k >> readout[i]) & 1:
                                zr = zr - p
                            else:
                                zr = zr + p
                        x[i] = 0.5 * (zr + 1.0)
                if keep:
                    for i in range(d):
                        li[num_layers, m, i] = x[i]
                out[m] = _hamiltonian(psi, dim, ham_flip, ham_phase, ham_coef)
    finally:
        free(psi)
        free(tmp)
        free(x)
        free(base)
        free(spans)
        free(vals)
        free(cs)
        free(sn)
    return np.asarray(out)


cdef inline void _apply_1q(double complex* psi, Py_ssize_t dim, int q,
                           double complex m00, double complex m01,
                           double complex m10, double complex m11) nogil:
    cdef Py_ssize_t k, k1
    cdef Py_ssize_t bit = 1 << q
    cdef double complex a0, a1
    for k in range(dim):
        if k & bit:
            continue
        k1 = k | bit
        a0 = psi[k]
        a1 = psi[k1]
        psi[k] = m00 * a0 + m01 * a1
        psi[k1] = m10 * a0 + m11 * a1


cdef inline void _cz_chain(double complex* psi, Py_ssize_t dim, int n) nogil:
    cdef Py_ssize_t k
    cdef int q
    for k in range(dim):
        for q in range(n - 1):
            if ((k >> q) & 1) and ((k >> (q + 1)) & 1):
                psi[k] = -psi[k]


def qnn_forward(
    rx_angles,
    const double[::1] thetas,
    int num_layers,
    const long[::1] ham_flip,
    const double complex[:, ::1] ham_phase,
    const double[::1] ham_coef,
):
    cdef const double[:, ::1] ang = np.ascontiguousarray(rx_angles, dtype=np.float64)
    cdef Py_ssize_t m_count = ang.shape[0]
    cdef int n = <int> ang.shape[1]
    cdef Py_ssize_t dim = 1 << n
    cdef double[::1] out = np.empty(m_count)
    cdef double complex* psi = <double complex*> malloc(dim * sizeof(double complex))
    cdef Py_ssize_t m, k, b
    cdef int layer, q
    cdef double c, s
    try:
        with nogil:
            for m in range(m_count):
                for k in range(dim):
                    psi[k] = 0.0
                psi[0] = 1.0
                for layer in range(num_layers):
                    b = 2 * n * layer
                    for q in range(n):
                        c = cos(thetas[b + q] / 2.0)
                        s = sin(thetas[b + q] / 2.0)
                        _apply_1q(psi, dim, q, c, -s, s, c)
                    _cz_chain(psi, dim, n)
                    for q in range(n):
                        c = cos(ang[m, q] / 2.0)
                        s = sin(ang[m, q] / 2.0)
                        _apply_1q(psi, dim, q, c, -1j * s, -1j * s, c)
                    for q in range(n):
                        c = cos(thetas[b + n + q] / 2.0)
                        s = sin(thetas[b + n + q] / 2.0)
                        _apply_1q(psi, dim, q, c, -s, s, c)
                    _cz_chain(psi, dim, n)
                out[m] = _hamiltonian(psi, dim, ham_flip, ham_phase, ham_coef)
    finally:
        free(psi)
    return np.asarray(out)
