"""Exact rational arithmetic helpers.

Uses gmpy2's mpq when available (much faster for the large graded sums the
brackets produce), with fractions.Fraction as a drop-in fallback.
"""

from .errors import ParseError

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q

Q0 = Q(0)
Q1 = Q(1)


def qstr(q):
    """Render a rational as "numerator/denominator" in lowest terms."""
    return f"{int(q.numerator)}/{int(q.denominator)}"


def parse_q(text, path=""):
    """Parse "p/q" produced by qstr.  Enforces lowest terms and q > 0."""
    if not isinstance(text, str):
        raise ParseError(f"expected rational string, got {text!r}", path)
    num, sep, den = text.partition("/")
    if not sep:
        raise ParseError(f"rational {text!r} lacks '/'", path)
    try:
        n, d = int(num), int(den)
    except ValueError:
        raise ParseError(f"rational {text!r} is not integer/integer", path) from None
    if d <= 0:
        raise ParseError(f"rational {text!r} has non-positive denominator", path)
    q = Q(n, d)
    if int(q.numerator) != n or int(q.denominator) != d:
        raise ParseError(f"rational {text!r} is not in lowest terms", path)
    return q


_BERNOULLI_CACHE = {0: Q1}


def bernoulli(n):
    """Exact Bernoulli number B_n (convention B_1 = -1/2).

    Computed from the defining recurrence sum_{k=0}^{n} binom(n+1,k) B_k = 0.
    """
    if n < 0:
        raise ValueError("Bernoulli index must be non-negative")
    if n not in _BERNOULLI_CACHE:
        top = max(_BERNOULLI_CACHE) + 1
        for m in range(top, n + 1):
            acc = Q0
            binom = 1  # binom(m+1, k), built incrementally
            for k in range(m):
                acc += binom * _BERNOULLI_CACHE[k]
                binom = binom * (m + 1 - k) // (k + 1)
            _BERNOULLI_CACHE[m] = -acc / (m + 1)
    return _BERNOULLI_CACHE[n]
