# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the dense numeric kernels.

Algorithm-for-algorithm mirror of ``_kernels_py`` with scalar C loops;
selected as the default backend when importable.
"""

import numpy as np

from libc.math cimport fabs, sqrt, ceil, log2, pow, isinf

from .errors import EigenConvergenceError

BACKEND = "c"

cdef double EPS = 2.220446049250313e-16


cdef double _frob(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t i, j, n = a.shape[0], m = a.shape[1]
    cdef double s = 0.0
    for i in range(n):
        for j in range(m):
            s += a[i, j] * a[i, j]
    return sqrt(s)


def sym_eigvals(a_in):
    """Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi."""
    a_arr = np.array(a_in, dtype=np.float64, order="C")
    a_arr = 0.5 * (a_arr + a_arr.T)
    cdef Py_ssize_t n = a_arr.shape[0]
    if n == 0:
        return np.empty(0)
    if n == 1:
        return np.array([a_arr[0, 0]])
    cdef double[:, ::1] a = np.ascontiguousarray(a_arr)
    cdef double frob0 = _frob(a)
    cdef double stop = EPS * frob0
    cdef double off, tresh, apq, app, aqq, g, h, t, theta, c, s
    cdef double cp, cq, rp, rq
    cdef Py_ssize_t sweep, p, q, r
    for sweep in range(1, 101):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += fabs(a[p, q])
        if off <= stop:
            return np.sort(np.diagonal(np.asarray(a)).copy())
        tresh = 0.2 * off / (n * n) if sweep < 4 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * fabs(apq)
                app = a[p, p]
                aqq = a[q, q]
                if sweep > 4 and g <= EPS * fabs(app) and g <= EPS * fabs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                if fabs(apq) <= tresh:
                    continue
                h = aqq - app
                if g <= EPS * fabs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for r in range(n):
                    cp = a[r, p]
                    cq = a[r, q]
                    a[r, p] = c * cp - s * cq
                    a[r, q] = s * cp + c * cq
                for r in range(n):
                    rp = a[p, r]
                    rq = a[q, r]
                    a[p, r] = c * rp - s * rq
                    a[q, r] = s * rp + c * rq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise EigenConvergenceError("Jacobi sweep limit reached", iterations=100)


cdef void _hessenberg(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double xnorm, below, alpha, beta, dot
    for k in range(n - 2):
        xnorm = 0.0
        below = 0.0
        for i in range(k + 1, n):
            xnorm += a[i, k] * a[i, k]
        xnorm = sqrt(xnorm)
        for i in range(k + 2, n):
            below += fabs(a[i, k])
        if xnorm == 0.0 or below == 0.0:
            continue
        alpha = -xnorm if a[k + 1, k] >= 0.0 else xnorm
        # v overwrites the column it eliminates
        a[k + 1, k] -= alpha
        beta = 0.0
        for i in range(k + 1, n):
            beta += a[i, k] * a[i, k]
        beta = 2.0 / beta
        for j in range(k + 1, n):
            dot = 0.0
            for i in range(k + 1, n):
                dot += a[i, k] * a[i, j]
            dot *= beta
            for i in range(k + 1, n):
                a[i, j] -= dot * a[i, k]
        for i in range(n):
            dot = 0.0
            for j in range(k + 1, n):
                dot += a[i, j] * a[j, k]
            dot *= beta
            for j in range(k + 1, n):
                a[i, j] -= dot * a[j, k]
        a[k + 1, k] = alpha
        for i in range(k + 2, n):
            a[i, k] = 0.0


cdef inline double _sign(double a, double b) noexcept nogil:
    return fabs(a) if b >= 0.0 else -fabs(a)


def eigvals(a_in):
    """All eigenvalues of a real square matrix (complex array, unordered)."""
    a_arr = np.array(a_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a_arr.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.complex128)
    cdef double[:, ::1] a = a_arr
    cdef double scale = _frob(a)
    if isinf(scale) or scale == 0.0:
        # the sum of squares over- or underflowed; max |a_ij| cannot
        scale = np.max(np.abs(a_arr))
    if scale == 0.0:
        return np.zeros(n, dtype=np.complex128)
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            a[i, j] /= scale
    _hessenberg(a)

    wr_arr = np.zeros(n)
    wi_arr = np.zeros(n)
    cdef double[::1] wr = wr_arr
    cdef double[::1] wi = wi_arr

    cdef double anorm = 0.0
    cdef Py_ssize_t lo
    for i in range(n):
        lo = i - 1 if i >= 1 else 0
        for j in range(lo, n):
            anorm += fabs(a[i, j])

    cdef Py_ssize_t nn = n - 1
    cdef Py_ssize_t its, total_its = 0
    cdef Py_ssize_t l, ll, m, mm, k, mmin, jhi
    cdef double t = 0.0
    cdef double x, y, w, s, p, q, z, r, u, v, pv

    while nn >= 0:
        its = 0
        while True:
            l = 0
            for ll in range(nn, 0, -1):
                s = fabs(a[ll - 1, ll - 1]) + fabs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if fabs(a[ll, ll - 1]) <= EPS * s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = sqrt(fabs(q))
                x += t
                if q >= 0.0:
                    z = p + _sign(z, p)
                    wr[nn - 1] = x + z
                    wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = 0.0
                    wi[nn] = 0.0
                else:
                    wr[nn - 1] = x + p
                    wr[nn] = x + p
                    wi[nn] = z
                    wi[nn - 1] = -z
                nn -= 2
                break
            if its == 40:
                raise EigenConvergenceError(
                    "QR iteration did not converge", iterations=total_its
                )
            if its == 10 or its == 20 or its == 30:
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = fabs(a[nn, nn - 1]) + fabs(a[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            total_its += 1
            m = l
            for mm in range(nn - 2, l - 1, -1):
                z = a[mm, mm]
                r = x - z
                s = y - z
                p = (r * s - w) / a[mm + 1, mm] + a[mm, mm + 1]
                q = a[mm + 1, mm + 1] - z - r - s
                r = a[mm + 2, mm + 1]
                s = fabs(p) + fabs(q) + fabs(r)
                p /= s
                q /= s
                r /= s
                if mm == l:
                    m = mm
                    break
                u = fabs(a[mm, mm - 1]) * (fabs(q) + fabs(r))
                v = fabs(p) * (fabs(a[mm - 1, mm - 1]) + fabs(z) + fabs(a[mm + 1, mm + 1]))
                if u <= EPS * v:
                    m = mm
                    break
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i > m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = fabs(p) + fabs(q) + fabs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = _sign(sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                jhi = nn + 1
                if k != nn - 1:
                    for j in range(k, jhi):
                        pv = a[k, j] + q * a[k + 1, j] + r * a[k + 2, j]
                        a[k + 2, j] -= pv * z
                        a[k + 1, j] -= pv * y
                        a[k, j] -= pv * x
                else:
                    for j in range(k, jhi):
                        pv = a[k, j] + q * a[k + 1, j]
                        a[k + 1, j] -= pv * y
                        a[k, j] -= pv * x
                mmin = nn if nn < k + 3 else k + 3
                if k != nn - 1:
                    for i in range(l, mmin + 1):
                        pv = x * a[i, k] + y * a[i, k + 1] + z * a[i, k + 2]
                        a[i, k + 2] -= pv * r
                        a[i, k + 1] -= pv * q
                        a[i, k] -= pv
                else:
                    for i in range(l, mmin + 1):
                        pv = x * a[i, k] + y * a[i, k + 1]
                        a[i, k + 1] -= pv * q
                        a[i, k] -= pv
    return (wr_arr + 1j * wi_arr) * scale


cdef void _matmul(double[:, ::1] out, double[:, ::1] a, double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double r
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
        for k in range(n):
            r = a[i, k]
            for j in range(n):
                out[i, j] += r * b[k, j]


def expm(a_in):
    """Matrix exponential by scaling and squaring of a Taylor series."""
    a_arr = np.array(a_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a_arr.shape[0]
    if n == 0:
        return np.empty((0, 0))
    cdef double[:, ::1] a = a_arr
    cdef double nrm = _frob(a)
    cdef int s = 0
    if isinf(nrm):
        # Frobenius overflowed; bound it by n * max|a_ij| in log space
        s = <int>ceil(log2(np.max(np.abs(a_arr))) + log2(<double>n) + 1.0)
    elif nrm > 0.5:
        s = <int>ceil(log2(nrm / 0.5))
    x_arr = a_arr * pow(2.0, -s)
    e_arr = np.eye(n) + x_arr
    term_arr = x_arr.copy()
    work_arr = np.empty((n, n))
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] e = e_arr
    cdef double[:, ::1] term = term_arr
    cdef double[:, ::1] work = work_arr
    cdef double[:, ::1] tmp
    cdef Py_ssize_t k, i, j
    cdef double inv_k
    for k in range(2, 31):
        _matmul(work, term, x)
        inv_k = 1.0 / k
        for i in range(n):
            for j in range(n):
                work[i, j] *= inv_k
                e[i, j] += work[i, j]
        tmp = term
        term = work
        work = tmp
        if _frob(term) <= EPS * _frob(e):
            break
    for k in range(s):
        _matmul(work, e, e)
        for i in range(n):
            for j in range(n):
                e[i, j] = work[i, j]
    return np.asarray(e).copy()


def rk4(b_in, k_in, z0_in, double h, Py_ssize_t n_steps, double limit):
    """Classical fixed-step RK4 for dz/dt = b z + k with divergence guard."""
    b_arr = np.ascontiguousarray(b_in, dtype=np.float64)
    k_arr = np.ascontiguousarray(k_in, dtype=np.float64)
    z_arr = np.array(z0_in, dtype=np.float64)
    cdef Py_ssize_t dim = z_arr.shape[0]
    out_arr = np.empty((n_steps + 1, dim))
    out_arr[0] = z_arr
    cdef double[:, ::1] b = b_arr
    cdef double[::1] kv = k_arr
    cdef double[:, ::1] out = out_arr
    k1_a = np.empty(dim); k2_a = np.empty(dim)
    k3_a = np.empty(dim); k4_a = np.empty(dim)
    stage_a = np.empty(dim)
    cdef double[::1] z = z_arr
    cdef double[::1] k1 = k1_a
    cdef double[::1] k2 = k2_a
    cdef double[::1] k3 = k3_a
    cdef double[::1] k4 = k4_a
    cdef double[::1] stage = stage_a
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t step, i, j
    cdef Py_ssize_t completed = n_steps
    cdef bint diverged = False
    cdef bint has_nan
    cdef double acc, mx
    with nogil:
        for step in range(1, n_steps + 1):
            for i in range(dim):
                acc = kv[i]
                for j in range(dim):
                    acc += b[i, j] * z[j]
                k1[i] = acc
            for i in range(dim):
                stage[i] = z[i] + half * k1[i]
            for i in range(dim):
                acc = kv[i]
                for j in range(dim):
                    acc += b[i, j] * stage[j]
                k2[i] = acc
            for i in range(dim):
                stage[i] = z[i] + half * k2[i]
            for i in range(dim):
                acc = kv[i]
                for j in range(dim):
                    acc += b[i, j] * stage[j]
                k3[i] = acc
            for i in range(dim):
                stage[i] = z[i] + h * k3[i]
            for i in range(dim):
                acc = kv[i]
                for j in range(dim):
                    acc += b[i, j] * stage[j]
                k4[i] = acc
            mx = 0.0
            has_nan = False
            for i in range(dim):
                z[i] = z[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                out[step, i] = z[i]
                if z[i] != z[i]:
                    has_nan = True
                elif fabs(z[i]) > mx:
                    mx = fabs(z[i])
            if has_nan or not mx <= limit:
                completed = step
                diverged = True
                break
    return out_arr[: completed + 1], completed, diverged
