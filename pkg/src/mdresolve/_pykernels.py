"""Pure-Python similarity kernels.

Reference twin of ``_ckernels.pyx``: same functions, same argument order,
same floating-point operation order, so both backends return identical
weights.  ``mdresolve.kernels`` picks one at import time.
"""
from __future__ import annotations

WINKLER_SCALE = 0.1
WINKLER_MAX_PREFIX = 4


def jaro(a: str, b: str) -> float:
    if a > b:
        a, b = b, a
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    if a == b:
        return 1.0
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    a_flags = [False] * la
    b_flags = [False] * lb
    m = 0
    for i in range(la):
        ch = a[i]
        lo = i - window if i > window else 0
        hi = i + window + 1
        if hi > lb:
            hi = lb
        for j in range(lo, hi):
            if not b_flags[j] and b[j] == ch:
                a_flags[i] = True
                b_flags[j] = True
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
    fm = float(m)
    return (fm / la + fm / lb + (fm - half_t / 2.0) / fm) / 3.0


def common_prefix(a: str, b: str, limit: int = WINKLER_MAX_PREFIX) -> int:
    n = min(len(a), len(b), limit)
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def jaro_winkler(a: str, b: str) -> float:
    j = jaro(a, b)
    if j == 0.0 or j == 1.0:
        return j
    p = common_prefix(a, b)
    return j + p * WINKLER_SCALE * (1.0 - j)


def _jw_upper_bound(a: str, b: str) -> float:
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    s = float(min(la, lb))
    ub = (s / la + s / lb + 1.0) / 3.0
    return ub + common_prefix(a, b) * WINKLER_SCALE * (1.0 - ub)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    lb = len(b)
    if lb == 0:
        return len(a)
    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, len(a) + 1):
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
        prev, cur = cur, prev
    return prev[lb]


def numeric_edit(a: str, b: str) -> float:
    """Edit similarity of two decimal renderings: 1 - L(a, b) / max(|a|, |b|)."""
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / float(longest)


def jw_pairs(values, threshold: float, length_filter: bool = False) -> list:
    """All ``(i, j, w)`` with ``i < j`` and ``jaro_winkler(values[i], values[j]) >= threshold``."""
    out = []
    n = len(values)
    for i in range(n):
        a = values[i]
        for j in range(i + 1, n):
            b = values[j]
            if length_filter and _jw_upper_bound(a, b) < threshold:
                continue
            w = jaro_winkler(a, b)
            if w >= threshold:
                out.append((i, j, w))
    return out


def edit_pairs(values, threshold: float, length_filter: bool = False) -> list:
    out = []
    n = len(values)
    for i in range(n):
        a = values[i]
        la = len(a)
        for j in range(i + 1, n):
            b = values[j]
            if length_filter:
                lb = len(b)
                longest = la if la > lb else lb
                if longest and 1.0 - abs(la - lb) / float(longest) < threshold:
                    continue
            w = numeric_edit(a, b)
            if w >= threshold:
                out.append((i, j, w))
    return out


def _clamp(w: float) -> float:
    if w < 0.0:
        return 0.0
    if w > 1.0:
        return 1.0
    return w


def cosine_pairs(indptr, indices, data, signature, threshold: float) -> list:
    """Pairs of unit-normalised sparse rows (CSR) with cosine >= threshold.

    Rows sharing a non-negative ``signature`` are token-identical and score
    exactly 1.0; a signature of -1 marks a row with no tokens.
    """
    n = len(indptr) - 1
    postings: dict[int, list[tuple[int, float]]] = {}
    for doc in range(n):
        for k in range(indptr[doc], indptr[doc + 1]):
            postings.setdefault(int(indices[k]), []).append((doc, float(data[k])))
    groups: dict[int, list[int]] = {}
    for doc in range(n):
        if signature[doc] >= 0:
            groups.setdefault(int(signature[doc]), []).append(doc)
    out = []
    for i in range(n):
        acc: dict[int, float] = {}
        for k in range(indptr[i], indptr[i + 1]):
            w = float(data[k])
            for j, wj in postings[int(indices[k])]:
                if j > i:
                    acc[j] = acc.get(j, 0.0) + w * wj
        si = signature[i]
        if threshold <= 0.0:
            candidates = range(i + 1, n)
        else:
            same = [j for j in groups.get(int(si), ()) if j > i] if si >= 0 else []
            candidates = sorted(set(acc).union(same))
        for j in candidates:
            if si >= 0 and signature[j] == si:
                w = 1.0
            else:
                w = _clamp(acc.get(j, 0.0))
            if w >= threshold:
                out.append((i, j, w))
    return out
