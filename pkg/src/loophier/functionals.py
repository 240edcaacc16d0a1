"""Local functionals: densities modulo total x-derivatives and constants.

The quotient is effective because the kernel of the variational derivative
is exactly Im(dx) + constants.  Canonical representatives come from a peel
reduction: as long as the maximal term (letters compared by derivative
order, then variable index) has a removable top letter, subtract the total
derivative of its obvious preimage.  What remains is the unique reduced
density of the class.
"""

from .rat import Q, Q1
from .coeffs import cadd, cneg, cscale, is_czero
from .errors import NotExact
from .ring import (DiffPoly, dx_pow, partial, d_weight_inverse,
                   serialize, pretty)

__all__ = ["var_deriv", "LocalFunctional", "integrate", "dx_inverse",
           "split_exact", "reduce_density", "d_minus_one_inverse", "d_inverse"]


def var_deriv(f, alpha):
    """Variational derivative sum_k (-dx)^k of d f / d u^alpha_k."""
    kmax = -1
    for key in f.terms:
        for al, k, _ in key[3]:
            if al == alpha and k > kmax:
                kmax = k
    out = f.ring.zero()
    for k in range(kmax + 1):
        g = partial(f, alpha, k)
        if g.is_zero():
            continue
        g = dx_pow(g, k)
        out = out + (g if k % 2 == 0 else -g)
    return out


def _term_sort_key(key):
    e, h, p, fac = key
    letters = tuple(sorted(((k, al) for al, k, pw in fac
                            for _ in range(pw)), reverse=True))
    return (letters, e, h, p)


def _peel(f):
    """Split f as dx(m) + r + c with r reduced and c the constant part.

    Returns (m, r, c) as DiffPolys.  r contains no term whose top letter is
    a first-or-higher derivative occurring to the first power, and no
    constants; such terms are exactly the ones a total derivative can have
    as its leading term.
    """
    ring = f.ring
    work = dict(f.terms)
    pre = {}
    residue = {}
    const = {}

    def _acc(d, key, val):
        cur = d.get(key)
        if cur is None:
            d[key] = val
        else:
            s = cadd(cur, val)
            if is_czero(s):
                del d[key]
            else:
                d[key] = s

    while work:
        key = max(work, key=_term_sort_key)
        val = work[key]
        e, h, p, fac = key
        if not fac:
            const[key] = work.pop(key)
            continue
        kstar, astar = max((k, al) for al, k, _ in fac)
        pw_top = next(pw for al, k, pw in fac if al == astar and k == kstar)
        rest_top = max(((k, al) for al, k, _ in fac
                        if (k, al) != (kstar, astar)), default=(-1, 0))
        # t is the leading term of dx(M) only when M = t with its top letter
        # lowered still has that lowered letter on top
        if kstar == 0 or pw_top != 1 or rest_top > (kstar - 1, astar):
            residue[key] = work.pop(key)
            continue
        lowered = {(al, k): pw for al, k, pw in fac}
        del lowered[(astar, kstar)]
        lowered[(astar, kstar - 1)] = lowered.get((astar, kstar - 1), 0) + 1
        mult = lowered[(astar, kstar - 1)]
        mfac = tuple((al, k, pw) for (al, k), pw in sorted(lowered.items()))
        mval = cscale(val, Q1 / Q(mult))
        mkey = (e, h, p, mfac)
        _acc(pre, mkey, mval)
        # subtract dx of the candidate monomial term-by-term
        for al, k, pw in mfac:
            raised = dict(lowered)
            raised[(al, k)] -= 1
            raised[(al, k + 1)] = raised.get((al, k + 1), 0) + 1
            rfac = tuple((a, kk, q) for (a, kk), q in sorted(raised.items())
                         if q)
            _acc(work, (e, h, p, rfac), cneg(cscale(mval, pw)))
    return (DiffPoly(ring, pre, f.exact_u),
            DiffPoly(ring, residue, f.exact_u),
            DiffPoly(ring, const, f.exact_u))


def split_exact(f):
    """f = dx(m) + r + c with r the reduced density, c constant."""
    return _peel(f)


def reduce_density(f):
    """Canonical representative of f modulo Im(dx) and constants."""
    return _peel(f)[1]


def dx_inverse(f):
    """Preimage under dx.  Raises NotExact when none exists.

    Obstructions above a windowed input's tracked reliability are junk
    from the truncation, not genuine failures; they are discarded.
    """
    if f.is_zero():
        return f
    for alpha in range(1, f.ring.n_vars + 1):
        if not var_deriv(f, alpha).within_window().is_zero():
            raise NotExact(
                f"variational derivative in direction {alpha} is nonzero")
    m, r, c = _peel(f)
    if not c.is_zero():
        raise NotExact("constant part obstructs integration")
    if not r.within_window().is_zero():
        raise NotExact("reduced residue is nonzero")
    return m


def d_minus_one_inverse(f):
    """Inverse of (D - 1) where D is the weight operator euler_D."""
    return d_weight_inverse(f, shift=1)


def d_inverse(f):
    """Inverse of the weight operator euler_D."""
    return d_weight_inverse(f, shift=0)


class LocalFunctional:
    """A density considered up to total derivatives and constants."""

    __slots__ = ("ring", "density", "_vd", "_reduced")

    def __init__(self, density):
        self.ring = density.ring
        self.density = density
        self._vd = {}
        self._reduced = None

    def var_deriv(self, alpha):
        if alpha not in self._vd:
            self._vd[alpha] = var_deriv(self.density, alpha)
        return self._vd[alpha]

    def reduced(self):
        """Canonical reduced density of the class."""
        if self._reduced is None:
            self._reduced = reduce_density(self.density)
        return self._reduced

    def is_zero(self):
        """True when every variational derivative vanishes.

        u-degrees beyond a density's tracked reliability are ignored, so a
        windowed computation is judged only on what it actually determined.
        """
        return all(self.var_deriv(a).within_window().is_zero()
                   for a in range(1, self.ring.n_vars + 1))

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        self.ring.check(other.ring)
        return all((self.var_deriv(a) - other.var_deriv(a))
                   .within_window().is_zero()
                   for a in range(1, self.ring.n_vars + 1))

    __hash__ = None

    def __add__(self, other):
        if isinstance(other, LocalFunctional):
            return LocalFunctional(self.density + other.density)
        return LocalFunctional(self.density + other)

    def __sub__(self, other):
        if isinstance(other, LocalFunctional):
            return LocalFunctional(self.density - other.density)
        return LocalFunctional(self.density - other)

    def __neg__(self):
        return LocalFunctional(-self.density)

    def __mul__(self, c):
        return LocalFunctional(self.density * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return LocalFunctional(self.density / c)

    def serialize(self):
        doc = serialize(self.reduced())
        doc["functional"] = True
        return doc

    def __repr__(self):
        return f"<LocalFunctional int({pretty(self.reduced())}) dx>"


def integrate(density):
    """Wrap a density as a local functional."""
    return LocalFunctional(density)
