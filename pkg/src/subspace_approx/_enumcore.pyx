# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled primitive-vector enumeration.

Same order contract as enumkernel._enumpy: ascending first coordinate, the
zero-lead block recurses into dimension n-1, suffix coordinates run from -s
to s in nested lexicographic order.  Coordinates are bounded by sqrt(r2)
which must fit in int64.
"""

from libc.math cimport sqrt


cdef long long _igcd(long long a, long long b) noexcept:
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        a, b = b, a % b
    return a


cdef long long _isqrt(long long x) noexcept:
    if x < 0:
        return -1
    cdef long long r = <long long> sqrt(<double> x)
    while r * r > x:
        r -= 1
    while (r + 1) * (r + 1) <= x:
        r += 1
    return r


cdef void _suffix(int remaining, long long budget, long long[::1] buf, int pos,
                  long long g, list out, int n) noexcept:
    cdef long long s, x
    cdef int i
    if remaining == 0:
        if g == 1:
            out.append(tuple([buf[i] for i in range(n)]))
        return
    s = _isqrt(budget)
    for x in range(-s, s + 1):
        buf[pos] = x
        _suffix(remaining - 1, budget - x * x, buf, pos + 1, _igcd(g, x), out, n)


def primitive_vectors(int n, long long r2):
    return primitive_vectors_chunk(n, r2, 0, _isqrt(r2) + 1)


def primitive_vectors_chunk(int n, long long r2, long long lead_lo, long long lead_hi):
    cdef list out = []
    cdef long long x0, budget
    cdef int i
    import array
    if n == 1:
        if lead_lo <= 1 < lead_hi and r2 >= 1:
            out.append((1,))
        return out
    cdef long long[::1] buf = array.array("q", [0] * n)
    x0 = lead_lo if lead_lo > 0 else 0
    while x0 < lead_hi:
        budget = r2 - x0 * x0
        if budget < 0:
            break
        if x0 == 0:
            for w in primitive_vectors(n - 1, r2):
                out.append((0,) + w)
        else:
            buf[0] = x0
            _suffix(n - 1, budget, buf, 1, x0, out, n)
        x0 += 1
    return out
