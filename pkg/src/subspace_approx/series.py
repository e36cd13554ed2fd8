"""Exact schedules and truncated lacunary series sigma(theta, u, alpha).

All schedule data is rational so that floors of the alpha sequence are exact
integers.  The sigma truncations are exact Fractions whose denominators
divide theta^floor(alpha_N).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from ._bigint import powint

__all__ = [
    "GOLDEN_DEFAULT_BETA",
    "BetaSchedule",
    "AlphaSequence",
    "SupportAssignment",
    "USequence",
    "SigmaTruncation",
    "choose_u",
    "sigma_trunc",
    "tail_bound",
    "tail_bound_fraction",
    "exceeds_golden_bound",
    "is_prime",
    "check_theta",
    "parse_rational",
    "schedule_config_from_dict",
]

# smallest admissible growth ratio is 2 + (sqrt(5)-1)/2; any rational used as
# a padding value must exceed it.  131/50 = 2.62 > 2.6180...
GOLDEN_DEFAULT_BETA = Fraction(131, 50)


def exceeds_golden_bound(x: Fraction) -> bool:
    """Exact test x >= 2 + (sqrt(5)-1)/2, decided by squaring (2x-3 vs sqrt5)."""
    x = Fraction(x)
    t = 2 * x - 3
    if t < 0:
        return False
    return t * t >= 5


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


def check_theta(theta: int) -> int:
    if theta < 5 or not is_prime(theta):
        raise ValueError(f"theta must be a prime >= 5, got {theta}")
    return theta


def parse_rational(text) -> Fraction:
    """Parse "p/q" / "p" decimal strings (or pass through numbers) exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise ValueError("floats are not exact; pass rationals as 'p/q' strings")
    return Fraction(str(text).strip())


@dataclass(frozen=True)
class BetaSchedule:
    """Periodic sequence of exact rational growth ratios, indexed from k = 1."""

    betas: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.betas:
            raise ValueError("empty schedule")
        object.__setattr__(self, "betas", tuple(Fraction(b) for b in self.betas))

    @property
    def period(self) -> int:
        return len(self.betas)

    def beta(self, k: int) -> Fraction:
        if k < 1:
            raise ValueError("beta is indexed from 1")
        return self.betas[(k - 1) % self.period]

    def require_golden(self) -> None:
        for i, b in enumerate(self.betas):
            if not exceeds_golden_bound(b):
                raise ValueError(
                    f"beta[{i + 1}] = {b} violates the bound 2 + (sqrt(5)-1)/2"
                )

    def max_window_product(self, e: int) -> Fraction:
        """max over i in [0, T-1] of beta_{i+1} ... beta_{i+e}."""
        best = None
        for i in range(self.period):
            prod = Fraction(1)
            for j in range(1, e + 1):
                prod *= self.beta(i + j)
            if best is None or prod > best:
                best = prod
        return best

    def argmax_window(self, e: int, limit: int | None = None) -> int:
        """Smallest offset L in [0, limit) attaining the window-product max."""
        limit = self.period if limit is None else limit
        best, best_i = None, 0
        for i in range(limit):
            prod = Fraction(1)
            for j in range(1, e + 1):
                prod *= self.beta(i + j)
            if best is None or prod > best:
                best, best_i = prod, i
        return best_i


class AlphaSequence:
    """alpha_0 = 1, alpha_{k+1} = beta_{k+1} * alpha_k, exact with exact floors.

    The memo list is append-only, so concurrent readers always observe
    consistent prefixes; worst case they recompute a tail.
    """

    def __init__(self, schedule: BetaSchedule):
        self.schedule = schedule
        self._values: list[Fraction] = [Fraction(1)]

    def alpha(self, k: int) -> Fraction:
        if k < 0:
            raise ValueError("k must be >= 0")
        while len(self._values) <= k:
            j = len(self._values)
            self._values.append(self.schedule.beta(j) * self._values[-1])
        return self._values[k]

    def floor_alpha(self, k: int) -> int:
        a = self.alpha(k)
        return a.numerator // a.denominator

    def check_floor_gaps(self, upto: int) -> None:
        for k in range(upto):
            if self.floor_alpha(k + 1) - self.floor_alpha(k) < 1:
                raise ValueError(f"floor gap < 1 at k = {k}")


@dataclass(frozen=True)
class SupportAssignment:
    """Which sequence index is active at step k.

    variant "cyclic": phi(k) = k mod n_seq, sequences indexed 0..n_seq-1
    (used by the line and first-angle builders with n_seq = n - d).
    variant "strided": sequences carry a second index j in [1, d]; the active
    row at step k for column j is (k + (j-1)*q) mod (q*d) (last-angle builder).
    """

    variant: str
    n_seq: int
    d: int = 1
    q: int = 1

    def active_index(self, k: int, j: int = 1) -> int:
        if self.variant == "cyclic":
            return k % self.n_seq
        if self.variant == "strided":
            return (k + (j - 1) * self.q) % (self.q * self.d)
        raise ValueError(f"unknown support variant {self.variant!r}")

    def is_supported(self, i: int, k: int, j: int = 1) -> bool:
        return self.active_index(k, j) == i


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass(frozen=True)
class USequence:
    """Deterministic coefficient sequences on a prescribed support.

    A "good" choice of u exists by a counting argument that is
    non-constructive; here the choice is a seeded pseudo-random pick from
    value_set, which fixes every finite truncation reproducibly.  All
    downstream measurements only ever evaluate finite data.
    """

    support: SupportAssignment
    value_set: tuple[int, ...]
    seed: int
    picker: Callable[[int, int, int], int] | None = field(default=None, compare=False)

    def value(self, i: int, k: int, j: int = 1) -> int:
        if not self.support.is_supported(i, k, j):
            return 0
        if self.picker is not None:
            return self.picker(i, k, j)
        h = self.seed & 0xFFFFFFFFFFFFFFFF
        for part in (i, k, j):
            h = _splitmix64(h ^ (part & 0xFFFFFFFFFFFFFFFF))
        return self.value_set[h % len(self.value_set)]


def choose_u(seed: int, support: SupportAssignment, value_set: Sequence[int]) -> USequence:
    vs = tuple(sorted(set(int(v) for v in value_set)))
    if len(vs) < 2:
        raise ValueError("value set must contain at least two values")
    if any(v <= 0 for v in vs):
        raise ValueError("u values must be positive")
    return USequence(support, vs, int(seed))


@dataclass(frozen=True)
class SigmaTruncation:
    theta: int
    depth: int
    value: Fraction


def sigma_trunc(
    theta: int,
    u: USequence,
    alphas: AlphaSequence,
    n_terms: int,
    i: int,
    j: int = 1,
) -> SigmaTruncation:
    """sum_{k=0}^{N} u_k / theta^{floor(alpha_k)} as an exact Fraction.

    Computed over the common denominator theta^{floor(alpha_N)} so the
    invariant "denominator divides theta^{floor(alpha_N)}" is structural.
    """
    if n_terms < 0:
        raise ValueError("truncation depth must be >= 0")
    f_n = alphas.floor_alpha(n_terms)
    num = 0
    for k in range(n_terms + 1):
        uk = u.value(i, k, j)
        if uk:
            num += uk * powint(theta, f_n - alphas.floor_alpha(k))
    return SigmaTruncation(theta, n_terms, Fraction(num, powint(theta, f_n)))


def tail_bound(theta: int, alphas: AlphaSequence, n_terms: int, max_u: int) -> mpmath.mpf:
    """Upper bound on |sigma - sigma_N|: (max_u theta^2/(theta-1)) theta^(-alpha_{N+1}).

    The constant generalizes the max_u = 2 case by scaling linearly in max_u.
    Returned as an mpf with a small upward safety factor so it stays a bound
    after rounding.
    """
    a = alphas.alpha(n_terms + 1)
    with mpmath.workprec(80):
        c = mpmath.mpf(max_u * theta * theta) / (theta - 1)
        val = c * mpmath.power(theta, -mpmath.mpf(a.numerator) / a.denominator)
        return val * (1 + mpmath.mpf(2) ** -40)


def tail_bound_fraction(theta: int, alphas: AlphaSequence, n_terms: int, max_u: int) -> Fraction:
    """Exact rational upper bound max_u * theta/(theta-1) * theta^(-floor(alpha_{N+1}))."""
    f = alphas.floor_alpha(n_terms + 1)
    return Fraction(max_u * theta, (theta - 1) * powint(theta, f))


def schedule_config_from_dict(doc: dict) -> dict:
    """Validate the shared series configuration block.

    Schema: {theta, betas: ["p/q", ...], period, support_variant, seed,
    value_set}.  Returns normalized values; rejects non-rational betas.
    """
    theta = check_theta(int(doc["theta"]))
    betas = [parse_rational(b) for b in doc["betas"]]
    period = int(doc.get("period", len(betas)))
    if period != len(betas):
        raise ValueError("period must equal the number of betas")
    seed = int(doc.get("seed", 0))
    value_set = tuple(int(v) for v in doc.get("value_set", (1, 2)))
    variant = doc.get("support_variant", "cyclic")
    if variant not in ("cyclic", "strided"):
        raise ValueError(f"unknown support variant {variant!r}")
    return {
        "theta": theta,
        "betas": betas,
        "period": period,
        "seed": seed,
        "value_set": value_set,
        "support_variant": variant,
    }


def schedule_config_to_json(cfg: dict) -> str:
    doc = dict(cfg)
    doc["betas"] = [str(b) for b in cfg["betas"]]
    doc["value_set"] = list(cfg["value_set"])
    return json.dumps(doc, sort_keys=True)
