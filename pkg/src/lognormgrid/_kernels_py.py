"""Pure-numpy implementations of the dense numeric kernels.

Same algorithms and contracts as the compiled extension ``_kernels_c``;
used as the fallback backend when the extension is not built.  Row/column
sweeps are expressed as numpy slice operations, everything else is scalar.
"""

import numpy as np

from .errors import EigenConvergenceError

BACKEND = "python"

_EPS = 2.220446049250313e-16


def _frob(a):
    # overflow to inf is expected for huge inputs and handled by callers
    with np.errstate(over="ignore"):
        return float(np.sqrt(np.sum(a * a)))


def sym_eigvals(a):
    """Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi.

    The input is symmetrized as (a + a.T)/2 before sweeping, so slightly
    asymmetric inputs measure their symmetric part.
    """
    a = np.array(a, dtype=np.float64)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 0:
        return np.empty(0)
    if n == 1:
        return np.array([a[0, 0]])

    frob0 = _frob(a)
    stop = _EPS * frob0
    for sweep in range(1, 101):
        off = float(np.sum(np.abs(np.triu(a, 1))))
        if off <= stop:
            return np.sort(np.diagonal(a).copy())
        # damp tiny rotations during the first sweeps only
        tresh = 0.2 * off / (n * n) if sweep < 4 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                app = a[p, p]
                aqq = a[q, q]
                if sweep > 4 and g <= _EPS * abs(app) and g <= _EPS * abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                if abs(apq) <= tresh:
                    continue
                h = aqq - app
                if g <= _EPS * abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                # analytic values for the rotated 2x2 block
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise EigenConvergenceError("Jacobi sweep limit reached", iterations=100)


def _hessenberg(a):
    """Reduce a to upper Hessenberg form in place (Householder)."""
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1 :, k]
        xnorm = float(np.sqrt(np.sum(x * x)))
        if xnorm == 0.0 or float(np.sum(np.abs(x[1:]))) == 0.0:
            continue
        alpha = -xnorm if x[0] >= 0.0 else xnorm
        v = x.copy()
        v[0] -= alpha
        beta = 2.0 / float(np.sum(v * v))
        # A <- H A, then A <- A H with H = I - beta v v^T
        a[k + 1 :, k:] -= beta * np.outer(v, v @ a[k + 1 :, k:])
        a[:, k + 1 :] -= beta * np.outer(a[:, k + 1 :] @ v, v)
        a[k + 1, k] = alpha
        a[k + 2 :, k] = 0.0
    return a


def _sign(a, b):
    return abs(a) if b >= 0.0 else -abs(a)


def eigvals(a):
    """All eigenvalues of a real square matrix (complex array, unordered).

    Householder reduction to Hessenberg form followed by the shifted
    double-step QR iteration with deflation and exceptional shifts.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.complex128)
    scale = _frob(a)
    if np.isinf(scale) or scale == 0.0:
        # the sum of squares over- or underflowed; max |a_ij| cannot
        scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return np.zeros(n, dtype=np.complex128)
    a /= scale
    _hessenberg(a)
    wr = np.zeros(n)
    wi = np.zeros(n)

    anorm = 0.0
    for i in range(n):
        anorm += float(np.sum(np.abs(a[i, max(i - 1, 0) :])))

    total_its = 0
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            # locate a negligible subdiagonal element
            l = 0
            for ll in range(nn, 0, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) <= _EPS * s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                # one real root
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                # roots of the trailing 2x2 block
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + _sign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn] = z
                    wi[nn - 1] = -z
                nn -= 2
                break
            # no root yet: one double QR step
            if its == 40:
                raise EigenConvergenceError(
                    "QR iteration did not converge", iterations=total_its
                )
            if its == 10 or its == 20 or its == 30:
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            total_its += 1
            # find two consecutive small subdiagonals
            m = l
            for mm in range(nn - 2, l - 1, -1):
                z = a[mm, mm]
                r = x - z
                s = y - z
                p = (r * s - w) / a[mm + 1, mm] + a[mm, mm + 1]
                q = a[mm + 1, mm + 1] - z - r - s
                r = a[mm + 2, mm + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if mm == l:
                    m = mm
                    break
                u = abs(a[mm, mm - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[mm - 1, mm - 1]) + abs(z) + abs(a[mm + 1, mm + 1]))
                if u <= _EPS * v:
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
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = _sign(np.sqrt(p * p + q * q + r * r), p)
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
                # row modification
                jhi = nn + 1
                if k != nn - 1:
                    pv = a[k, k:jhi] + q * a[k + 1, k:jhi] + r * a[k + 2, k:jhi]
                    a[k + 2, k:jhi] -= pv * z
                else:
                    pv = a[k, k:jhi] + q * a[k + 1, k:jhi]
                a[k + 1, k:jhi] -= pv * y
                a[k, k:jhi] -= pv * x
                # column modification
                mmin = min(nn, k + 3)
                lo = l
                hi = mmin + 1
                if k != nn - 1:
                    pv = (
                        x * a[lo:hi, k]
                        + y * a[lo:hi, k + 1]
                        + z * a[lo:hi, k + 2]
                    )
                    a[lo:hi, k + 2] -= pv * r
                else:
                    pv = x * a[lo:hi, k] + y * a[lo:hi, k + 1]
                a[lo:hi, k + 1] -= pv * q
                a[lo:hi, k] -= pv
    return (wr + 1j * wi) * scale


def expm(a):
    """Matrix exponential by scaling and squaring of a Taylor series.

    The scaling exponent keeps the scaled norm at or below 0.5, where the
    series remainder after the break test is below roundoff.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n == 0:
        return np.empty((0, 0))
    nrm = _frob(a)
    s = 0
    if np.isinf(nrm):
        # Frobenius overflowed; bound it by n * max|a_ij| in log space
        s = int(np.ceil(np.log2(np.max(np.abs(a))) + np.log2(n) + 1.0))
    elif nrm > 0.5:
        s = int(np.ceil(np.log2(nrm / 0.5)))
    x = a * float(2.0**-s)
    e = np.eye(n) + x
    term = x.copy()
    for k in range(2, 31):
        term = (term @ x) / float(k)
        e += term
        if _frob(term) <= _EPS * _frob(e):
            break
    # squaring may legitimately saturate to inf; callers flag non-finite results
    with np.errstate(over="ignore"):
        for _ in range(s):
            e = e @ e
    return e


def rk4(b, k, z0, h, n_steps, limit):
    """Classical fixed-step RK4 for dz/dt = b z + k.

    Returns (trajectory, completed_steps, diverged); the trajectory holds
    completed_steps+1 rows and integration stops once any state magnitude
    stops being <= limit (NaN counts as divergence).
    """
    b = np.asarray(b, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    z = np.array(z0, dtype=np.float64)
    dim = z.shape[0]
    out = np.empty((n_steps + 1, dim))
    out[0] = z
    completed = n_steps
    diverged = False
    half = 0.5 * h
    sixth = h / 6.0
    for step in range(1, n_steps + 1):
        k1 = b @ z + k
        k2 = b @ (z + half * k1) + k
        k3 = b @ (z + half * k2) + k
        k4 = b @ (z + h * k3) + k
        z = z + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[step] = z
        mx = float(np.max(np.abs(z))) if dim else 0.0
        if not mx <= limit:
            completed = step
            diverged = True
            break
    return out[: completed + 1], completed, diverged
