"""Compiled move kernel for the switching chain.

Every step consumes exactly one uint64 word.  Draws are peeled off it by
fixed-point range extraction (``_take``): the word is read as a fraction
``u`` in [0, 1), the draw is ``floor(u*r)`` and the word becomes the
fractional part of ``u*r``.  The pure-Python reference in
``switching.step_from_word`` decodes identically.
Adjacency rows are kept sorted so edge labels match ``BiregularGraph``.
"""
import numpy as np
from numba import njit

MODE_SWITCHING = 0
MODE_MIXED = 1

# non-identity permutations of (0, 1, 2), itertools order
PERMS = np.array(
    [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]], dtype=np.int64
)


_LO = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


@njit(cache=True, inline="always", _nrt=False)
def _take(word, r):
    # r < 2**32; high 64 bits of the 128-bit product word*r
    r = np.uint64(r)
    hi = (word >> _S32) * r + (((word & _LO) * r) >> _S32)
    return np.int64(hi >> _S32), word * r


@njit(cache=True, inline="always", _nrt=False)
def _replace_sorted(adj, a, old, new):
    # swap value old -> new in sorted row adj[a], keeping it sorted
    d = adj.shape[1]
    k = 0
    while adj[a, k] != old:
        k += 1
    if new > old:
        while k + 1 < d and adj[a, k + 1] < new:
            adj[a, k] = adj[a, k + 1]
            k += 1
    else:
        while k > 0 and adj[a, k - 1] > new:
            adj[a, k] = adj[a, k - 1]
            k -= 1
    adj[a, k] = new


@njit(cache=True, inline="always", _nrt=False)
def _double_swap(black, white, A, word, d_b):
    E = black.shape[0] * d_b
    if E < 2:
        return 0
    i, word = _take(word, E)
    j, word = _take(word, E - 1)
    if j >= i:
        j += 1
    a = i // d_b
    x = black[a, i % d_b]
    b = j // d_b
    y = black[b, j % d_b]
    if a == b or x == y or A[a, y] != 0 or A[b, x] != 0:
        return 0
    A[a, x] = 0
    A[b, y] = 0
    A[a, y] = 1
    A[b, x] = 1
    _replace_sorted(black, a, x, y)
    _replace_sorted(black, b, y, x)
    _replace_sorted(white, x, a, b)
    _replace_sorted(white, y, b, a)
    return 1


@njit(cache=True, inline="always", _nrt=False)
def _local_switch(black, white, A, word, M, N, d_b, d_w):
    E = M * d_b
    g, word = _take(word, M + N)
    is_black = g < M
    if is_black:
        v = g
        deg = d_b
    else:
        v = g - M
        deg = d_w
    mu, word = _take(word, deg)
    K = E - deg
    if K < 2:
        return 0
    i, word = _take(word, K)
    j, word = _take(word, K - 1)
    if j >= i:
        j += 1
    if is_black:
        b0 = v
        w0 = black[v, mu]
        fi = i if i < v * d_b else i + d_b
        fj = j if j < v * d_b else j + d_b
        b1 = fi // d_b
        w1 = black[b1, fi % d_b]
        b2 = fj // d_b
        w2 = black[b2, fj % d_b]
    else:
        w0 = v
        b0 = white[v, mu]
        fi = i if i < v * d_w else i + d_w
        fj = j if j < v * d_w else j + d_w
        w1 = fi // d_w
        b1 = white[w1, fi % d_w]
        w2 = fj // d_w
        b2 = white[w2, fj % d_w]
    clash = (b0 == b1) | (b0 == b2) | (b1 == b2) | (w0 == w1) | (w0 == w2) | (w1 == w2)
    if clash:
        return 0
    # e_tk: black t already adjacent to white k
    e01 = A[b0, w1] != 0
    e02 = A[b0, w2] != 0
    e10 = A[b1, w0] != 0
    e12 = A[b1, w2] != 0
    e20 = A[b2, w0] != 0
    e21 = A[b2, w1] != 0
    # permutation r sends black t to white PERMS[r, t]
    ok0 = not (e12 | e21)
    ok1 = not (e01 | e10)
    ok2 = not (e01 | e12 | e20)
    ok3 = not (e02 | e10 | e21)
    ok4 = not (e02 | e20)
    n = int(ok0) + int(ok1) + int(ok2) + int(ok3) + int(ok4)
    if n == 0:
        return 0
    c, word = _take(word, n)
    valid = (ok0, ok1, ok2, ok3, ok4)
    r = -1
    for q in range(5):
        if valid[q]:
            if c == 0:
                r = q
                break
            c -= 1
    k0 = PERMS[r, 0]
    k1 = PERMS[r, 1]
    k2 = PERMS[r, 2]
    ws = (w0, w1, w2)
    bs = (b0, b1, b2)
    nw0 = ws[k0]
    nw1 = ws[k1]
    nw2 = ws[k2]
    if k0 != 0:
        A[b0, w0] = 0
    if k1 != 1:
        A[b1, w1] = 0
    if k2 != 2:
        A[b2, w2] = 0
    if k0 != 0:
        A[b0, nw0] = 1
        _replace_sorted(black, b0, w0, nw0)
        _replace_sorted(white, nw0, bs[k0], b0)
    if k1 != 1:
        A[b1, nw1] = 1
        _replace_sorted(black, b1, w1, nw1)
        _replace_sorted(white, nw1, bs[k1], b1)
    if k2 != 2:
        A[b2, nw2] = 1
        _replace_sorted(black, b2, w2, nw2)
        _replace_sorted(white, nw2, bs[k2], b2)
    return 1


@njit(cache=True, _nrt=False)
def run_words(black, white, A, words, mode, M, N, d_b, d_w):
    """Apply one move per word in place; return the number of non-identity moves."""
    moved = 0
    for t in range(words.shape[0]):
        word = words[t]
        if mode == MODE_MIXED:
            coin, word = _take(word, 2)
            if coin == 0:
                moved += _double_swap(black, white, A, word, d_b)
                continue
        moved += _local_switch(black, white, A, word, M, N, d_b, d_w)
    return moved
