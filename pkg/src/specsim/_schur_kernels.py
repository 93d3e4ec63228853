"""Compiled kernels for RSK shape sampling and Schur-polynomial logs.

Complete homogeneous sums and the Jacobi-Trudi determinant are evaluated in
double-double arithmetic (Dekker/Bailey error-free transforms): the h
recurrence over distinct variable values is subtraction-free, and the
determinant uses row-scaled LU with partial pivoting, accumulating pivot
logarithms so no intermediate under- or overflows.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1


@njit(cache=True, inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True, inline="always")
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


@njit(cache=True, inline="always")
def _dd_add(ahi, alo, bhi, blo):
    s, e = _two_sum(ahi, bhi)
    e += alo + blo
    return _quick_two_sum(s, e)


@njit(cache=True, inline="always")
def _dd_sub(ahi, alo, bhi, blo):
    return _dd_add(ahi, alo, -bhi, -blo)


@njit(cache=True, inline="always")
def _dd_mul(ahi, alo, bhi, blo):
    p, e = _two_prod(ahi, bhi)
    e += ahi * blo + alo * bhi
    return _quick_two_sum(p, e)


@njit(cache=True, inline="always")
def _dd_div(ahi, alo, bhi, blo):
    q1 = ahi / bhi
    phi, plo = _dd_mul(q1, 0.0, bhi, blo)
    rhi, rlo = _dd_sub(ahi, alo, phi, plo)
    q2 = (rhi + rlo) / bhi
    return _quick_two_sum(q1, q2)


@njit(cache=True)
def h_scaled_dd(values, counts, m_max):
    """Complete homogeneous sums h_0..h_m_max of a positive multiset.

    ``values`` are the distinct variable values (scaled so the largest is 1)
    with multiplicities ``counts``.  Built value by value through the
    generating-function convolution; every term is nonnegative, so the
    recurrence is subtraction-free.
    """
    h_hi = np.zeros(m_max + 1)
    h_lo = np.zeros(m_max + 1)
    h_hi[0] = 1.0
    w_hi = np.empty(m_max + 1)
    w_lo = np.empty(m_max + 1)
    new_hi = np.empty(m_max + 1)
    new_lo = np.empty(m_max + 1)
    for t in range(values.size):
        v = values[t]
        c = counts[t]
        # w_j = C(j + c - 1, c - 1) v^j via w_j = w_{j-1} * v * (j + c - 1)/j
        w_hi[0] = 1.0
        w_lo[0] = 0.0
        for j in range(1, m_max + 1):
            fhi, flo = _dd_mul(w_hi[j - 1], w_lo[j - 1], v, 0.0)
            fhi, flo = _dd_mul(fhi, flo, float(j + c - 1), 0.0)
            w_hi[j], w_lo[j] = _dd_div(fhi, flo, float(j), 0.0)
        for m in range(m_max + 1):
            acc_hi = 0.0
            acc_lo = 0.0
            for j in range(m + 1):
                phi, plo = _dd_mul(w_hi[j], w_lo[j], h_hi[m - j], h_lo[m - j])
                acc_hi, acc_lo = _dd_add(acc_hi, acc_lo, phi, plo)
            new_hi[m] = acc_hi
            new_lo[m] = acc_lo
        for m in range(m_max + 1):
            h_hi[m] = new_hi[m]
            h_lo[m] = new_lo[m]
    return h_hi, h_lo


@njit(cache=True)
def jt_logdet(parts, nrows, h_hi, h_lo):
    """log |det| and sign of the Jacobi-Trudi matrix (h_{lambda_i - i + j}).

    Rows are pre-scaled by their largest entry and each pivot row is
    renormalized after elimination, with all scale logs accumulated, so the
    working entries stay near unit magnitude.  Returns (logdet, sign); sign 0
    flags an exactly singular pivot (LU breakdown).
    """
    ell = nrows
    mhi = np.empty((ell, ell))
    mlo = np.empty((ell, ell))
    for i in range(ell):
        for j in range(ell):
            idx = parts[i] - (i + 1) + (j + 1)
            if idx < 0:
                mhi[i, j] = 0.0
                mlo[i, j] = 0.0
            else:
                mhi[i, j] = h_hi[idx]
                mlo[i, j] = h_lo[idx]
    logdet = 0.0
    sign = 1
    for i in range(ell):
        rowmax = 0.0
        for j in range(ell):
            a = abs(mhi[i, j])
            if a > rowmax:
                rowmax = a
        if rowmax == 0.0:
            return -np.inf, 0
        logdet += math.log(rowmax)
        for j in range(ell):
            mhi[i, j], mlo[i, j] = _dd_div(mhi[i, j], mlo[i, j], rowmax, 0.0)
    for k in range(ell):
        piv_row = k
        best = abs(mhi[k, k])
        for i in range(k + 1, ell):
            if abs(mhi[i, k]) > best:
                best = abs(mhi[i, k])
                piv_row = i
        if best == 0.0:
            return -np.inf, 0
        if piv_row != k:
            for j in range(ell):
                mhi[k, j], mhi[piv_row, j] = mhi[piv_row, j], mhi[k, j]
                mlo[k, j], mlo[piv_row, j] = mlo[piv_row, j], mlo[k, j]
            sign = -sign
        phi = mhi[k, k]
        plo = mlo[k, k]
        if phi < 0.0:
            sign = -sign
        logdet += math.log(abs(phi)) + math.log1p(plo / phi)
        for j in range(k, ell):
            mhi[k, j], mlo[k, j] = _dd_div(mhi[k, j], mlo[k, j], phi, plo)
        for i in range(k + 1, ell):
            fhi = mhi[i, k]
            flo = mlo[i, k]
            if fhi != 0.0 or flo != 0.0:
                for j in range(k, ell):
                    qhi, qlo = _dd_mul(fhi, flo, mhi[k, j], mlo[k, j])
                    mhi[i, j], mlo[i, j] = _dd_sub(mhi[i, j], mlo[i, j], qhi, qlo)
    return logdet, sign


@njit(cache=True)
def rsk_shape(word, rows, lens):
    """Shape of RSK row insertion of a word (0-based letters).

    ``rows``/``lens`` are scratch buffers with enough rows for the alphabet;
    returns the number of rows, with row lengths in ``lens``.
    """
    nrows = 0
    for idx in range(word.size):
        cur = word[idx]
        r = 0
        while True:
            if r == nrows:
                rows[r, 0] = cur
                lens[r] = 1
                nrows += 1
                break
            lo = 0
            hi = lens[r]
            while lo < hi:
                mid = (lo + hi) >> 1
                if rows[r, mid] > cur:
                    hi = mid
                else:
                    lo = mid + 1
            if lo == lens[r]:
                rows[r, lo] = cur
                lens[r] += 1
                break
            cur, rows[r, lo] = rows[r, lo], cur
            r += 1
    return nrows


@njit(cache=True)
def batch_log_ratio(
    words,
    max_rows,
    ha_hi,
    ha_lo,
    na_pos,
    hb_hi,
    hb_lo,
    nb_pos,
):
    """log s_shape(alpha) - log s_shape(beta) for the RSK shape of each word.

    Shapes with more rows than a spectrum's support get log-likelihood -inf
    on that side.  Returns +/-inf accordingly; both sides -inf cannot happen
    for words drawn from either spectrum.
    """
    m = words.shape[0]
    n = words.shape[1]
    out = np.empty(m)
    rows = np.empty((max_rows, n), dtype=np.int64)
    lens = np.zeros(max_rows, dtype=np.int64)
    parts = np.empty(max_rows, dtype=np.int64)
    for s in range(m):
        for r in range(max_rows):
            lens[r] = 0
        nrows = rsk_shape(words[s], rows, lens)
        for r in range(nrows):
            parts[r] = lens[r]
        la_inf = nrows > na_pos
        lb_inf = nrows > nb_pos
        if la_inf and lb_inf:
            out[s] = np.nan
            continue
        if la_inf:
            out[s] = -np.inf
            continue
        if lb_inf:
            out[s] = np.inf
            continue
        la, sa = jt_logdet(parts[:nrows], nrows, ha_hi, ha_lo)
        lb, sb = jt_logdet(parts[:nrows], nrows, hb_hi, hb_lo)
        if sa <= 0 or sb <= 0:
            out[s] = np.nan
            continue
        out[s] = la - lb
    return out
