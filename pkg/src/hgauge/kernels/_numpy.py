"""Vectorised numpy kernels. These also serve object-dtype (big integer) inputs."""
import numpy as np

_PARITY16 = np.zeros(1 << 16, dtype=np.int64)
for _b in range(16):
    _PARITY16 ^= (np.arange(1 << 16, dtype=np.int64) >> _b) & 1


def swap_parity(m1, m2):
    """Parity of the shuffle placing grassmann set ``m1`` before ``m2``."""
    par = np.zeros(np.broadcast(m1, m2).shape, dtype=np.int64)
    top = int(max(m2.max(initial=0), 1)).bit_length()
    for y in range(top):
        bit = (m2 >> y) & 1
        par ^= bit & _PARITY16[(m1 >> (y + 1)) & 0xFFFF]
    return par


def block_product(mono1, mask1, num1, mono2, mask2, num2, guard):
    ok = (mask1[:, None] & mask2[None, :]) == 0
    i, j = np.nonzero(ok)
    m1 = mask1[i]
    m2 = mask2[j]
    mono = mono1[i] + mono2[j]
    overflow = bool((mono & guard).any()) if guard else False
    num = num1[i] * num2[j]
    par = swap_parity(m1, m2).astype(bool)
    if par.any():
        num[par] = -num[par]
    return m1 | m2, mono, num, overflow


def reduce_terms(hdr, mono, num):
    n = hdr.shape[0]
    if n == 0:
        return hdr, mono, num
    order = np.lexsort((mono, hdr))
    hdr = hdr[order]
    mono = mono[order]
    num = num[order]
    new = np.empty(n, dtype=bool)
    new[0] = True
    new[1:] = (hdr[1:] != hdr[:-1]) | (mono[1:] != mono[:-1])
    starts = np.flatnonzero(new)
    sums = np.add.reduceat(num, starts)
    keep = (sums != 0).astype(bool)
    return hdr[starts][keep], mono[starts][keep], sums[keep]
