"""numba versions of the hot kernels; int64 numerators only."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _parity(m1, m2):
    par = 0
    y = 0
    while m2 >> y:
        if (m2 >> y) & 1:
            rest = m1 >> (y + 1)
            while rest:
                par ^= rest & 1
                rest >>= 1
        y += 1
    return par


@njit(cache=True, nogil=True)
def block_product(mono1, mask1, num1, mono2, mask2, num2, guard):
    n1 = mono1.shape[0]
    n2 = mono2.shape[0]
    cap = n1 * n2
    out_mask = np.empty(cap, dtype=np.int64)
    out_mono = np.empty(cap, dtype=np.int64)
    out_num = np.empty(cap, dtype=np.int64)
    k = 0
    overflow = False
    for i in range(n1):
        a = mask1[i]
        for j in range(n2):
            b = mask2[j]
            if a & b:
                continue
            mono = mono1[i] + mono2[j]
            if mono & guard:
                overflow = True
            v = num1[i] * num2[j]
            if _parity(a, b):
                v = -v
            out_mask[k] = a | b
            out_mono[k] = mono
            out_num[k] = v
            k += 1
    return out_mask[:k], out_mono[:k], out_num[:k], overflow


@njit(cache=True, nogil=True)
def reduce_terms(hdr, mono, num):
    n = hdr.shape[0]
    if n == 0:
        return hdr, mono, num
    # sort by header, then by monomial inside each run of equal headers
    order = np.argsort(hdr)
    h_sorted = hdr[order]
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and h_sorted[stop] == h_sorted[start]:
            stop += 1
        if stop - start > 1:
            run = order[start:stop]
            order[start:stop] = run[np.argsort(mono[run])]
        start = stop
    out_hdr = np.empty(n, dtype=np.int64)
    out_mono = np.empty(n, dtype=np.int64)
    out_num = np.empty(n, dtype=np.int64)
    k = 0
    cur_h = hdr[order[0]]
    cur_m = mono[order[0]]
    acc = num[order[0]]
    for idx in range(1, n):
        o = order[idx]
        h = hdr[o]
        m = mono[o]
        if h == cur_h and m == cur_m:
            acc += num[o]
        else:
            if acc != 0:
                out_hdr[k] = cur_h
                out_mono[k] = cur_m
                out_num[k] = acc
                k += 1
            cur_h = h
            cur_m = m
            acc = num[o]
    if acc != 0:
        out_hdr[k] = cur_h
        out_mono[k] = cur_m
        out_num[k] = acc
        k += 1
    return out_hdr[:k], out_mono[:k], out_num[:k]
