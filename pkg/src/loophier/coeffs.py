"""Coefficient field: Gaussian rationals times monomials in formal parameters.

Internally the ring layer stores a term's numeric part as a plain (re, im)
pair of rationals and keeps the parameter exponents in the term key; the
Coefficient class below is the boundary type used by operator tables,
constants tables, scaling APIs and serialization.
"""

from .rat import Q, Q0, Q1, qstr, parse_q
from .errors import ParseError

# ---------------------------------------------------------------------------
# raw (re, im) pair helpers, used in hot loops

CZERO = (Q0, Q0)
CONE = (Q1, Q0)


def cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def csub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def cneg(a):
    return (-a[0], -a[1])


def cmul(a, b):
    ar, ai = a
    br, bi = b
    return (ar * br - ai * bi, ar * bi + ai * br)


def cscale(a, q):
    return (a[0] * q, a[1] * q)


def cdiv(a, b):
    br, bi = b
    n = br * br + bi * bi
    if n == 0:
        raise ZeroDivisionError("division by zero coefficient")
    ar, ai = a
    return ((ar * br + ai * bi) / n, (ai * br - ar * bi) / n)


def is_czero(a):
    return not a[0] and not a[1]


# ---------------------------------------------------------------------------
# parameter monomials: sorted tuples of (name, positive exponent)


def merge_params(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for name, e in b:
        d[name] = d.get(name, 0) + e
    return tuple(sorted(d.items()))


def params_from_map(m, path=""):
    out = []
    for name, e in m.items():
        if not isinstance(name, str) or not name:
            raise ParseError(f"bad parameter name {name!r}", path)
        if not isinstance(e, int) or e <= 0:
            raise ParseError(f"parameter exponent must be a positive int, got {e!r}",
                             path)
        out.append((name, e))
    return tuple(sorted(out))


class Coefficient:
    """A Gaussian rational multiplied by a monomial in the declared parameters."""

    __slots__ = ("re", "im", "params")

    def __init__(self, re=0, im=0, params=()):
        self.re = Q(re)
        self.im = Q(im)
        self.params = tuple(params)

    @classmethod
    def one(cls):
        return cls(1)

    @classmethod
    def i(cls):
        return cls(0, 1)

    @classmethod
    def param(cls, name, exp=1):
        return cls(1, 0, ((name, exp),))

    def is_zero(self):
        return not self.re and not self.im

    def pair(self):
        return (self.re, self.im)

    def __mul__(self, other):
        if isinstance(other, Coefficient):
            re, im = cmul((self.re, self.im), (other.re, other.im))
            return Coefficient(re, im, merge_params(self.params, other.params))
        re, im = cscale((self.re, self.im), Q(other))
        return Coefficient(re, im, self.params)

    __rmul__ = __mul__

    def __neg__(self):
        return Coefficient(-self.re, -self.im, self.params)

    def __add__(self, other):
        if not isinstance(other, Coefficient):
            other = Coefficient(other)
        if self.params != other.params:
            raise ValueError("cannot add coefficients with different parameter parts")
        return Coefficient(self.re + other.re, self.im + other.im, self.params)

    def __sub__(self, other):
        return self + (-other)

    def __truediv__(self, other):
        if isinstance(other, Coefficient):
            if other.params:
                raise ValueError("cannot divide by a parameter-carrying coefficient")
            re, im = cdiv((self.re, self.im), (other.re, other.im))
            return Coefficient(re, im, self.params)
        return self * (Q1 / Q(other))

    def __eq__(self, other):
        if not isinstance(other, Coefficient):
            if self.params or self.im:
                return NotImplemented
            return self.re == other
        return (self.re == other.re and self.im == other.im
                and self.params == other.params)

    def __hash__(self):
        return hash((self.re, self.im, self.params))

    def __repr__(self):
        core = f"{self.re}"
        if self.im:
            core += f"{'+' if self.im > 0 else ''}{self.im}i"
        for name, e in self.params:
            core += f"*{name}" + (f"^{e}" if e > 1 else "")
        return f"Coefficient({core})"
