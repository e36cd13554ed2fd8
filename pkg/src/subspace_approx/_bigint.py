"""gmpy2-backed big-integer helpers with a pure-int fallback.

Exact wedge products on deep truncations multiply integers with 10^5..10^7
bits; gmpy2's GMP multiplication is asymptotically faster than CPython's.
All public functions accept and return plain Python ints.
"""

from __future__ import annotations

try:
    import gmpy2

    _mpz = gmpy2.mpz
    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = int
    HAVE_GMPY2 = False

# below this size plain ints win on conversion overhead
_MPZ_CUTOFF_BITS = 2048


def maybe_mpz(x: int):
    if HAVE_GMPY2 and x.bit_length() > _MPZ_CUTOFF_BITS:
        return _mpz(x)
    return x


def mpz_matrix(rows):
    if not HAVE_GMPY2:
        return [list(map(int, r)) for r in rows]
    big = any(int(x).bit_length() > _MPZ_CUTOFF_BITS for r in rows for x in r)
    if not big:
        return [list(map(int, r)) for r in rows]
    return [[_mpz(x) for x in r] for r in rows]


def powint(base: int, exp: int) -> int:
    """base**exp for huge exponents, via GMP when available."""
    if HAVE_GMPY2 and exp * base.bit_length() > _MPZ_CUTOFF_BITS:
        return int(_mpz(base) ** exp)
    return base**exp


def int_str(x: int) -> str:
    """Decimal string of x; GMP's subquadratic conversion for big values.

    CPython's int-to-str is quadratic (minutes beyond ~10^6 digits), which
    matters because heights of deep family members are serialized as decimal
    strings.
    """
    x = int(x)
    if HAVE_GMPY2 and x.bit_length() > 20000:
        return _mpz(x).digits()
    return str(x)
