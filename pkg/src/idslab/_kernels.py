"""Compiled inner loops for the spectral primitives."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def ldlt_negcount(band, shift, pivmin, work):
    """Negative pivots of ``LDL^T = A - shift*I`` for a lower-band matrix.

    Returns ``(count, ok)``; ``ok`` is False on a pivot with ``|d| <= pivmin``.
    ``work`` must have the shape of ``band`` and is overwritten.
    """
    bw = band.shape[0] - 1
    n = band.shape[1]
    for k in range(bw + 1):
        for j in range(n):
            work[k, j] = band[k, j]
    for j in range(n):
        work[0, j] -= shift
    neg = 0
    for j in range(n):
        d = work[0, j]
        if not (abs(d) > pivmin):
            return neg, False
        if d < 0.0:
            neg += 1
        m = min(bw, n - 1 - j)
        # work[i, j] holds A[j+i, j] = L[j+i, j] * d before scaling
        for i in range(1, m + 1):
            li = work[i, j] / d
            if li == 0.0:
                continue
            for k in range(1, i + 1):
                work[i - k, j + k] -= li * work[k, j]
        for i in range(1, m + 1):
            work[i, j] /= d
    return neg, True


@njit(cache=True, nogil=True)
def ldlt_negcount_grid(band, shifts, pivmin):
    counts = np.zeros(shifts.shape[0], dtype=np.int64)
    ok = np.zeros(shifts.shape[0], dtype=np.bool_)
    work = np.empty_like(band)
    for e in range(shifts.shape[0]):
        c, good = ldlt_negcount(band, shifts[e], pivmin, work)
        counts[e] = c
        ok[e] = good
    return counts, ok


@njit(cache=True, nogil=True)
def sturm_negcount(diag, off, shift, pivmin):
    """Sign changes of the Sturm pivot recurrence for a symmetric tridiagonal matrix."""
    n = diag.shape[0]
    neg = 0
    d = diag[0] - shift
    for i in range(n):
        if i > 0:
            d = (diag[i] - shift) - off[i - 1] * off[i - 1] / d
        if not (abs(d) > pivmin):
            return neg, False
        if d < 0.0:
            neg += 1
    return neg, True


@njit(cache=True, nogil=True)
def sturm_negcount_grid(diag, off, shifts, pivmin):
    counts = np.zeros(shifts.shape[0], dtype=np.int64)
    ok = np.zeros(shifts.shape[0], dtype=np.bool_)
    for e in range(shifts.shape[0]):
        c, good = sturm_negcount(diag, off, shifts[e], pivmin)
        counts[e] = c
        ok[e] = good
    return counts, ok


@njit(cache=True, nogil=True)
def jacobi_eigen(a, max_sweeps, rel_tol, want_vectors):
    """Cyclic Jacobi diagonalisation of a symmetric matrix (overwrites ``a``).

    Returns ``(eigenvalues, vectors, sweeps, converged)``; eigenvalues are in
    diagonal order, not sorted. Converged means the off-diagonal Frobenius
    norm fell below ``rel_tol`` times the Frobenius norm of the input.
    """
    n = a.shape[0]
    v = np.eye(n) if want_vectors else np.zeros((1, 1))
    frob2 = 0.0
    for i in range(n):
        for j in range(n):
            frob2 += a[i, j] * a[i, j]
    target = rel_tol * rel_tol * frob2
    sweeps = 0
    converged = False
    while sweeps <= max_sweeps:
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += 2.0 * a[p, q] * a[p, q]
        if off2 <= target:
            converged = True
            break
        if sweeps == max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                # negligible against both diagonal entries after the early sweeps
                if sweeps > 3 and abs(apq) < 1e-18 * min(abs(app), abs(aqq)):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    if r == p or r == q:
                        continue
                    arp = a[p, r]
                    arq = a[q, r]
                    nrp = c * arp - s * arq
                    nrq = s * arp + c * arq
                    a[p, r] = nrp
                    a[q, r] = nrq
                    a[r, p] = nrp
                    a[r, q] = nrq
                if want_vectors:
                    for r in range(n):
                        vrp = v[r, p]
                        vrq = v[r, q]
                        v[r, p] = c * vrp - s * vrq
                        v[r, q] = s * vrp + c * vrq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps, converged
