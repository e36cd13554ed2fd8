"""Pure-Python primitive-vector enumeration (reference semantics).

Order contract shared with the compiled kernel: ascending first coordinate;
the zero-lead block recurses into dimension n-1; suffix coordinates run from
-s to s in nested lexicographic order.
"""

from math import gcd, isqrt


def primitive_vectors(n, r2):
    return primitive_vectors_chunk(n, r2, 0, isqrt(r2) + 1)


def primitive_vectors_chunk(n, r2, lead_lo, lead_hi):
    out = []
    if n == 1:
        if lead_lo <= 1 < lead_hi and r2 >= 1:
            out.append((1,))
        return out
    for x0 in range(max(lead_lo, 0), lead_hi):
        budget = r2 - x0 * x0
        if budget < 0:
            break
        if x0 == 0:
            out.extend((0,) + w for w in primitive_vectors(n - 1, r2))
            continue
        _suffix(n - 1, budget, (x0,), x0, out)
    return out


def _suffix(remaining, budget, prefix, g, out):
    if remaining == 0:
        if g == 1:
            out.append(prefix)
        return
    s = isqrt(budget)
    for x in range(-s, s + 1):
        _suffix(remaining - 1, budget - x * x, prefix + (x,), gcd(g, x), out)
