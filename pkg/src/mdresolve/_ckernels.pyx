# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled similarity kernels; mirrors ``_pykernels`` operation for operation."""

from cpython.mem cimport PyMem_Malloc, PyMem_Free
from libc.string cimport memset

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double WINKLER_SCALE = 0.1
cdef Py_ssize_t WINKLER_MAX_PREFIX = 4


cdef double _jaro(str a, str b) except -1.0:
    cdef Py_ssize_t la, lb, window, i, j, lo, hi, k, m, half_t
    cdef unsigned char* a_flags
    cdef unsigned char* b_flags
    cdef Py_UCS4 ch
    cdef double fm
    if a > b:
        a, b = b, a
    la = len(a)
    lb = len(b)
    if la == 0 or lb == 0:
        return 0.0
    if a == b:
        return 1.0
    window = (la if la > lb else lb) // 2 - 1
    if window < 0:
        window = 0
    a_flags = <unsigned char*> PyMem_Malloc(la + lb)
    if a_flags == NULL:
        raise MemoryError()
    b_flags = a_flags + la
    memset(a_flags, 0, la + lb)
    m = 0
    try:
        for i in range(la):
            ch = a[i]
            lo = i - window if i > window else 0
            hi = i + window + 1
            if hi > lb:
                hi = lb
            for j in range(lo, hi):
                if not b_flags[j] and b[j] == ch:
                    a_flags[i] = 1
                    b_flags[j] = 1
                    m += 1
                    break
        if m == 0:
            return 0.0
        half_t = 0
        k = 0
        for i in range(la):
            if a_flags[i]:
                while not b_flags[k]:
                    k += 1
                if a[i] != b[k]:
                    half_t += 1
                k += 1
    finally:
        PyMem_Free(a_flags)
    fm = <double> m
    return (fm / la + fm / lb + (fm - half_t / 2.0) / fm) / 3.0


cdef Py_ssize_t _common_prefix(str a, str b):
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t i = 0
    if len(b) < n:
        n = len(b)
    if WINKLER_MAX_PREFIX < n:
        n = WINKLER_MAX_PREFIX
    while i < n and a[i] == b[i]:
        i += 1
    return i


cdef double _jaro_winkler(str a, str b) except -1.0:
    cdef double j = _jaro(a, b)
    if j == 0.0 or j == 1.0:
        return j
    return j + _common_prefix(a, b) * WINKLER_SCALE * (1.0 - j)


cdef double _jw_upper_bound(str a, str b):
    cdef Py_ssize_t la = len(a), lb = len(b)
    cdef double s, ub
    if la == 0 or lb == 0:
        return 0.0
    s = <double> (la if la < lb else lb)
    ub = (s / la + s / lb + 1.0) / 3.0
    return ub + _common_prefix(a, b) * WINKLER_SCALE * (1.0 - ub)


cdef Py_ssize_t _levenshtein(str a, str b) except -1:
    cdef Py_ssize_t la, lb, i, j, cost, best
    cdef Py_ssize_t* prev
    cdef Py_ssize_t* cur
    cdef Py_ssize_t* tmp
    cdef Py_UCS4 ca
    if len(a) < len(b):
        a, b = b, a
    la = len(a)
    lb = len(b)
    if lb == 0:
        return la
    prev = <Py_ssize_t*> PyMem_Malloc(2 * (lb + 1) * sizeof(Py_ssize_t))
    if prev == NULL:
        raise MemoryError()
    cur = prev + (lb + 1)
    try:
        for j in range(lb + 1):
            prev[j] = j
        for i in range(1, la + 1):
            cur[0] = i
            ca = a[i - 1]
            for j in range(1, lb + 1):
                cost = 0 if ca == b[j - 1] else 1
                best = prev[j - 1] + cost
                if prev[j] + 1 < best:
                    best = prev[j] + 1
                if cur[j - 1] + 1 < best:
                    best = cur[j - 1] + 1
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[lb]
    finally:
        # prev/cur may have been swapped; free the lower address
        PyMem_Free(prev if prev < cur else cur)


cdef double _numeric_edit(str a, str b) except -1.0:
    cdef Py_ssize_t longest
    if a == b:
        return 1.0
    longest = len(a) if len(a) > len(b) else len(b)
    if longest == 0:
        return 1.0
    return 1.0 - _levenshtein(a, b) / <double> longest


def jaro(str a, str b):
    return _jaro(a, b)


def jaro_winkler(str a, str b):
    return _jaro_winkler(a, b)


def common_prefix(str a, str b, Py_ssize_t limit=4):
    cdef Py_ssize_t n = min(len(a), len(b), limit)
    cdef Py_ssize_t i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def levenshtein(str a, str b):
    return _levenshtein(a, b)


def numeric_edit(str a, str b):
    return _numeric_edit(a, b)


def jw_pairs(values, double threshold, bint length_filter=False):
    cdef list vals = list(values)
    cdef Py_ssize_t n = len(vals), i, j
    cdef str a, b
    cdef double w
    cdef list out = []
    for i in range(n):
        a = vals[i]
        for j in range(i + 1, n):
            b = vals[j]
            if length_filter and _jw_upper_bound(a, b) < threshold:
                continue
            w = _jaro_winkler(a, b)
            if w >= threshold:
                out.append((i, j, w))
    return out


def edit_pairs(values, double threshold, bint length_filter=False):
    cdef list vals = list(values)
    cdef Py_ssize_t n = len(vals), i, j, la, lb, longest
    cdef str a, b
    cdef double w
    cdef list out = []
    for i in range(n):
        a = vals[i]
        la = len(a)
        for j in range(i + 1, n):
            b = vals[j]
            if length_filter:
                lb = len(b)
                longest = la if la > lb else lb
                if longest and 1.0 - (la - lb if la > lb else lb - la) / <double> longest < threshold:
                    continue
            w = _numeric_edit(a, b)
            if w >= threshold:
                out.append((i, j, w))
    return out


def cosine_pairs(indptr_in, indices_in, data_in, signature_in, double threshold):
    cdef cnp.int64_t[::1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int64)
    cdef cnp.int64_t[::1] indices = np.ascontiguousarray(indices_in, dtype=np.int64)
    cdef double[::1] data = np.ascontiguousarray(data_in, dtype=np.float64)
    cdef cnp.int64_t[::1] signature = np.ascontiguousarray(signature_in, dtype=np.int64)
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t vocab = 0, i, j, k, p, t, doc
    cdef double w
    cdef cnp.int64_t si
    cdef list out = []
    if n <= 0:
        return out
    for k in range(indices.shape[0]):
        if indices[k] + 1 > vocab:
            vocab = indices[k] + 1
    # postings in CSC layout, documents in ascending order per token
    cdef cnp.int64_t[::1] pstart = np.zeros(vocab + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] pfill = np.zeros(vocab, dtype=np.int64)
    cdef cnp.int64_t[::1] pdoc = np.zeros(indices.shape[0], dtype=np.int64)
    cdef double[::1] pw = np.zeros(indices.shape[0], dtype=np.float64)
    for k in range(indices.shape[0]):
        pstart[indices[k] + 1] += 1
    for t in range(vocab):
        pstart[t + 1] += pstart[t]
    for doc in range(n):
        for k in range(indptr[doc], indptr[doc + 1]):
            t = indices[k]
            p = pstart[t] + pfill[t]
            pdoc[p] = doc
            pw[p] = data[k]
            pfill[t] += 1
    cdef double[::1] acc = np.zeros(n, dtype=np.float64)
    cdef unsigned char[::1] touched = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            w = data[k]
            t = indices[k]
            for p in range(pstart[t], pstart[t + 1]):
                j = pdoc[p]
                if j > i:
                    if touched[j]:
                        acc[j] = acc[j] + w * pw[p]
                    else:
                        acc[j] = 0.0 + w * pw[p]
                        touched[j] = 1
        si = signature[i]
        for j in range(i + 1, n):
            if si >= 0 and signature[j] == si:
                w = 1.0
            elif touched[j]:
                w = acc[j]
                if w < 0.0:
                    w = 0.0
                elif w > 1.0:
                    w = 1.0
            elif threshold <= 0.0:
                w = 0.0
            else:
                continue
            if w >= threshold:
                out.append((i, j, w))
        for j in range(i + 1, n):
            touched[j] = 0
            acc[j] = 0.0
    return out
