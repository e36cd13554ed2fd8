"""Primitive-vector enumeration kernel.

The compiled Cython core is used when the extension built; otherwise the
pure-Python implementation with identical semantics takes over.  Both return
sign-canonical primitive integer vectors (first nonzero entry positive,
gcd 1) with squared norm <= r2, in identical deterministic order.
"""

from . import _enumpy

try:
    from subspace_approx import _enumcore as _impl

    kernel_name = "cython"
except ImportError:  # pragma: no cover - exercised when the ext is absent
    _impl = _enumpy
    kernel_name = "python"


def primitive_vectors(n: int, r2: int) -> list:
    if n < 1 or r2 < 0:
        raise ValueError("need n >= 1 and r2 >= 0")
    return _impl.primitive_vectors(n, r2)


def primitive_vectors_chunk(n: int, r2: int, lead_lo: int, lead_hi: int) -> list:
    """Vectors whose first coordinate lies in [lead_lo, lead_hi).

    Chunks over disjoint ranges partition the full enumeration, so parallel
    workers can split [0, floor(sqrt(r2)) + 1) and concatenate results in
    range order to reproduce primitive_vectors exactly.
    """
    if n < 1 or r2 < 0:
        raise ValueError("need n >= 1 and r2 >= 0")
    return _impl.primitive_vectors_chunk(n, r2, lead_lo, lead_hi)


def primitive_vectors_python(n: int, r2: int) -> list:
    return _enumpy.primitive_vectors(n, r2)
