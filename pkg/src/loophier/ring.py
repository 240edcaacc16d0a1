"""Graded ring of differential polynomials.

Variables u^alpha_k (alpha = 1..n_vars, k >= 0 the x-derivative order) over
Gaussian rationals with optional formal parameters, together with the two
formal series variables eps (one per genus expansion step) and, on quantum
rings, hbar.  Gradings used throughout:

    degree:   sum k*pow  - eps_pow - 2*hbar_pow
    D-weight: sum pow    + eps_pow + 2*hbar_pow

A term is keyed by (eps_pow, hbar_pow, params, factors) where factors is a
sorted tuple of (alpha, k, pow) and params a sorted tuple of (name, exp);
the value is the (re, im) pair of rationals.  Polynomials are immutable and
always canonical: no zero values, no duplicate keys.
"""

from .rat import Q, Q0, Q1, qstr, parse_q
from .coeffs import (Coefficient, CZERO, CONE, cadd, cmul, cneg, cscale, cdiv,
                     is_czero, merge_params, params_from_map)
from .errors import ContextMismatch, ModeMismatch, ParseError

__all__ = [
    "TruncationWindow", "RingContext", "DiffPoly",
    "dx", "partial", "euler_D", "substitute", "serialize", "parse",
    "pretty", "parse_pretty",
]


def emin(*vals):
    """Minimum where None means unbounded."""
    got = [v for v in vals if v is not None]
    return min(got) if got else None


def merge_factors(a, b):
    if not a:
        return b
    if not b:
        return a
    d = {}
    for al, k, p in a:
        d[(al, k)] = p
    for al, k, p in b:
        d[(al, k)] = d.get((al, k), 0) + p
    return tuple((al, k, p) for (al, k), p in sorted(d.items()))


def key_udeg(key):
    return sum(f[2] for f in key[3])


def key_xdeg(key):
    return sum(f[1] * f[2] for f in key[3])


def key_genus(key):
    return key[0] + 2 * key[1]


def key_degree(key):
    return key_xdeg(key) - key_genus(key)


def key_weight(key):
    return key_udeg(key) + key_genus(key)


class TruncationWindow:
    """Hard truncation bounds for ring operations.  None means unbounded."""

    __slots__ = ("genus_cutoff", "u_degree_cutoff")

    def __init__(self, genus_cutoff=None, u_degree_cutoff=None):
        for v in (genus_cutoff, u_degree_cutoff):
            if v is not None and (not isinstance(v, int) or v < 0):
                raise ValueError("cutoffs must be None or non-negative ints")
        self.genus_cutoff = genus_cutoff
        self.u_degree_cutoff = u_degree_cutoff

    def __eq__(self, other):
        return (isinstance(other, TruncationWindow)
                and self.genus_cutoff == other.genus_cutoff
                and self.u_degree_cutoff == other.u_degree_cutoff)

    def __repr__(self):
        return (f"TruncationWindow(genus_cutoff={self.genus_cutoff}, "
                f"u_degree_cutoff={self.u_degree_cutoff})")


def _coerce_eta(eta, n):
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            v = eta[i][j]
            if isinstance(v, Coefficient):
                if v.params:
                    raise ValueError("eta entries must be parameter-free")
                row.append((v.re, v.im))
            elif isinstance(v, tuple):
                row.append((Q(v[0]), Q(v[1])))
            else:
                row.append((Q(v), Q0))
        rows.append(tuple(row))
    for i in range(n):
        for j in range(n):
            if rows[i][j] != rows[j][i]:
                raise ValueError("eta must be symmetric")
    return tuple(rows)


def _invert_matrix(m, n):
    """Exact inverse of an n x n matrix of (re, im) pairs."""
    a = [[m[i][j] for j in range(n)] + [CONE if i == j else CZERO for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not is_czero(a[r][col])), None)
        if piv is None:
            raise ValueError("eta is not invertible")
        a[col], a[piv] = a[piv], a[col]
        inv = cdiv(CONE, a[col][col])
        a[col] = [cmul(x, inv) for x in a[col]]
        for r in range(n):
            if r != col and not is_czero(a[r][col]):
                f = a[r][col]
                a[r] = [csub_pair(x, cmul(f, y)) for x, y in zip(a[r], a[col])]
    return tuple(tuple(a[i][n + j] for j in range(n)) for i in range(n))


def csub_pair(a, b):
    return (a[0] - b[0], a[1] - b[1])


class RingContext:
    """Shared, immutable description of the ring all polynomials live in."""

    def __init__(self, n_vars=1, var_names=None, eta=None, params=(),
                 mode="classical", window=None):
        if mode not in ("classical", "quantum"):
            raise ValueError("mode must be 'classical' or 'quantum'")
        if n_vars < 1:
            raise ValueError("need at least one variable")
        self.n_vars = n_vars
        if var_names is None:
            var_names = tuple(f"u{a}" for a in range(1, n_vars + 1)) \
                if n_vars > 1 else ("u",)
        if len(var_names) != n_vars:
            raise ValueError("var_names length must equal n_vars")
        self.var_names = tuple(var_names)
        self.params = tuple(params)
        if len(set(self.params)) != len(self.params):
            raise ValueError("duplicate parameter names")
        self.mode = mode
        if eta is None:
            eta = [[1 if i == j else 0 for j in range(n_vars)]
                   for i in range(n_vars)]
        self.eta = _coerce_eta(eta, n_vars)
        self.eta_inv = _invert_matrix(self.eta, n_vars)
        self.window = window if window is not None else TruncationWindow()

    # -- compatibility ----------------------------------------------------

    def compatible(self, other):
        return self is other or (
            isinstance(other, RingContext)
            and self.n_vars == other.n_vars
            and self.params == other.params
            and self.mode == other.mode
            and self.eta == other.eta
            and self.window == other.window)

    def check(self, other):
        if not self.compatible(other):
            raise ContextMismatch("operands use different ring contexts")

    def __eq__(self, other):
        return self.compatible(other)

    # -- construction -----------------------------------------------------

    def zero(self):
        return DiffPoly(self, {})

    def one(self):
        return DiffPoly(self, {(0, 0, (), ()): CONE})

    def const(self, value, eps=0, hbar=0):
        """Constant term.  value: rational, (re, im) pair, or Coefficient."""
        return self.monomial(value, eps=eps, hbar=hbar)

    def u(self, alpha=1, k=0, pow=1):
        if not 1 <= alpha <= self.n_vars:
            raise ValueError(f"variable index {alpha} out of range")
        if k < 0 or pow < 1:
            raise ValueError("bad derivative order or power")
        return DiffPoly(self, {(0, 0, (), ((alpha, k, pow),)): CONE})

    def param(self, name, exp=1):
        if name not in self.params:
            raise ValueError(f"parameter {name!r} not declared in this ring")
        return DiffPoly(self, {(0, 0, ((name, exp),), ()): CONE})

    def monomial(self, coeff, eps=0, hbar=0, factors=(), params=()):
        if isinstance(coeff, Coefficient):
            params = merge_params(tuple(params), coeff.params)
            val = (coeff.re, coeff.im)
        elif isinstance(coeff, tuple):
            val = (Q(coeff[0]), Q(coeff[1]))
        else:
            val = (Q(coeff), Q0)
        if hbar and self.mode == "classical":
            raise ModeMismatch("hbar term in a classical ring")
        if eps < 0 or hbar < 0:
            raise ValueError("eps and hbar exponents must be non-negative")
        for name, _ in params:
            if name not in self.params:
                raise ValueError(f"parameter {name!r} not declared in this ring")
        factors = tuple(sorted(tuple(f) for f in factors))
        seen = set()
        for al, k, p in factors:
            if not 1 <= al <= self.n_vars or k < 0 or p < 1:
                raise ValueError(f"bad factor {(al, k, p)}")
            if (al, k) in seen:
                raise ValueError(f"duplicate factor variable {(al, k)}")
            seen.add((al, k))
        key = (eps, hbar, tuple(params), factors)
        if is_czero(val) or self._clipped(key):
            return self.zero()
        return DiffPoly(self, {key: val})

    def _clipped(self, key):
        w = self.window
        if w.genus_cutoff is not None and key_genus(key) > w.genus_cutoff:
            return True
        if w.u_degree_cutoff is not None and key_udeg(key) > w.u_degree_cutoff:
            return True
        return False

    def eta_pair(self, i, j):
        return self.eta[i - 1][j - 1]

    def eta_inv_pair(self, i, j):
        return self.eta_inv[i - 1][j - 1]


class DiffPoly:
    """Immutable differential polynomial.

    exact_u: the u-degree through which the value is known to be exact, or
    None when exact at every degree.  Ring operations propagate it.
    """

    __slots__ = ("ring", "terms", "exact_u")

    def __init__(self, ring, terms, exact_u=None):
        self.ring = ring
        self.terms = terms
        self.exact_u = exact_u

    # -- inspection -------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def val_u(self):
        """Minimal u-degree over the support (0 for the zero polynomial)."""
        if not self.terms:
            return 0
        return min(key_udeg(k) for k in self.terms)

    def udeg_max(self):
        if not self.terms:
            return 0
        return max(key_udeg(k) for k in self.terms)

    def xorder_max(self):
        out = 0
        for key in self.terms:
            for _, k, _ in key[3]:
                if k > out:
                    out = k
        return out

    def genus_max(self):
        if not self.terms:
            return 0
        return max(key_genus(k) for k in self.terms)

    def support_vars(self):
        out = set()
        for key in self.terms:
            for al, k, _ in key[3]:
                out.add((al, k))
        return out

    def is_homogeneous(self):
        degs = {key_degree(k) for k in self.terms}
        return len(degs) <= 1

    def degree(self):
        """Degree of a homogeneous polynomial (None for zero)."""
        degs = {key_degree(k) for k in self.terms}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError("polynomial is not degree-homogeneous")
        return degs.pop()

    def top_degree(self):
        if not self.terms:
            return None
        return max(key_degree(k) for k in self.terms)

    def constant_part(self):
        """Terms with no u-factors (any eps/hbar/params)."""
        out = {k: v for k, v in self.terms.items() if not k[3]}
        return DiffPoly(self.ring, out, self.exact_u)

    def without_constants(self):
        out = {k: v for k, v in self.terms.items() if k[3]}
        return DiffPoly(self.ring, out, self.exact_u)

    def coefficient_of(self, eps=0, hbar=0, factors=(), params=()):
        key = (eps, hbar, tuple(sorted(params)),
               tuple(sorted(tuple(f) for f in factors)))
        v = self.terms.get(key)
        if v is None:
            return Coefficient(0)
        return Coefficient(v[0], v[1], key[2])

    # -- selections -------------------------------------------------------

    def eps_zero(self):
        return DiffPoly(self.ring,
                        {k: v for k, v in self.terms.items() if k[0] == 0},
                        self.exact_u)

    def hbar_zero(self):
        return DiffPoly(self.ring,
                        {k: v for k, v in self.terms.items() if k[1] == 0},
                        self.exact_u)

    def divide_hbar(self, n=1):
        out = {}
        for (e, h, p, f), v in self.terms.items():
            if h < n:
                raise ValueError("polynomial is not divisible by hbar^%d" % n)
            out[(e, h - n, p, f)] = v
        return DiffPoly(self.ring, out, self.exact_u)

    def genus_part(self, g):
        """Terms with eps_pow + 2*hbar_pow == g."""
        return DiffPoly(self.ring,
                        {k: v for k, v in self.terms.items()
                         if key_genus(k) == g},
                        self.exact_u)

    def truncate_u(self, d):
        out = {k: v for k, v in self.terms.items() if key_udeg(k) <= d}
        return DiffPoly(self.ring, out, emin(self.exact_u, d))

    def within_window(self):
        """Restriction to the reliable part: u-degrees above exact_u dropped."""
        if self.exact_u is None:
            return self
        return self.truncate_u(self.exact_u)

    def with_exact_u(self, e):
        return DiffPoly(self.ring, self.terms, e)

    # -- arithmetic -------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, DiffPoly):
            return NotImplemented
        self.ring.check(other.ring)
        return self.terms == other.terms

    __hash__ = None

    def __add__(self, other):
        if not isinstance(other, DiffPoly):
            other = _scalar_to_poly(self.ring, other)
            if other is NotImplemented:
                return NotImplemented
        self.ring.check(other.ring)
        if not other.terms:
            return DiffPoly(self.ring, self.terms,
                            emin(self.exact_u, other.exact_u))
        out = dict(self.terms)
        for k, v in other.terms.items():
            cur = out.get(k)
            if cur is None:
                out[k] = v
            else:
                s = cadd(cur, v)
                if is_czero(s):
                    del out[k]
                else:
                    out[k] = s
        return DiffPoly(self.ring, out, emin(self.exact_u, other.exact_u))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, DiffPoly)
                       else _scalar_to_poly(self.ring, other).__neg__())

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return DiffPoly(self.ring, {k: cneg(v) for k, v in self.terms.items()},
                        self.exact_u)

    def __mul__(self, other):
        if not isinstance(other, DiffPoly):
            return self.scale(other)
        self.ring.check(other.ring)
        ring = self.ring
        gc = ring.window.genus_cutoff
        uc = ring.window.u_degree_cutoff
        out = {}
        dropped = False
        for (e1, h1, p1, f1), v1 in self.terms.items():
            for (e2, h2, p2, f2), v2 in other.terms.items():
                e, h = e1 + e2, h1 + h2
                if gc is not None and e + 2 * h > gc:
                    continue
                fac = merge_factors(f1, f2)
                if uc is not None and sum(f[2] for f in fac) > uc:
                    dropped = True
                    continue
                key = (e, h, merge_params(p1, p2), fac)
                v = cmul(v1, v2)
                cur = out.get(key)
                if cur is None:
                    out[key] = v
                else:
                    s = cadd(cur, v)
                    if is_czero(s):
                        del out[key]
                    else:
                        out[key] = s
        cands = []
        if self.exact_u is not None:
            cands.append(self.exact_u + other.val_u())
        if other.exact_u is not None:
            cands.append(other.exact_u + self.val_u())
        if dropped:
            cands.append(uc)
        return DiffPoly(ring, out, min(cands) if cands else None)

    def scale(self, c):
        """Multiply by a scalar: rational, int, (re, im) pair, or Coefficient."""
        params = ()
        if isinstance(c, Coefficient):
            params = c.params
            val = (c.re, c.im)
        elif isinstance(c, tuple):
            val = (Q(c[0]), Q(c[1]))
        else:
            try:
                val = (Q(c), Q0)
            except TypeError:
                return NotImplemented
        if is_czero(val):
            return DiffPoly(self.ring, {}, self.exact_u)
        for name, _ in params:
            if name not in self.ring.params:
                raise ValueError(f"parameter {name!r} not declared in this ring")
        out = {}
        for (e, h, p, f), v in self.terms.items():
            out[(e, h, merge_params(p, params), f)] = cmul(v, val)
        return DiffPoly(self.ring, out, self.exact_u)

    __rmul__ = __mul__

    def __truediv__(self, c):
        if isinstance(c, Coefficient):
            return self.scale(Coefficient(1) / c)
        return self.scale(Q1 / Q(c))

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("powers must be non-negative ints")
        out = self.ring.one()
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        s = pretty(self)
        return f"<DiffPoly {s if len(s) <= 60 else s[:57] + '...'}>"


def _scalar_to_poly(ring, value):
    if isinstance(value, (int, Coefficient)) or type(value) is type(Q1):
        return ring.const(value)
    return NotImplemented


# ---------------------------------------------------------------------------
# derivations


def dx(f):
    """Total x-derivative: sum_k u^alpha_{k+1} d/du^alpha_k."""
    out = {}
    for (e, h, p, fac), v in f.terms.items():
        for i, (al, k, pw) in enumerate(fac):
            rest = {(a, kk): q for a, kk, q in fac}
            rest[(al, k)] = pw - 1
            rest[(al, k + 1)] = rest.get((al, k + 1), 0) + 1
            nf = tuple((a, kk, q) for (a, kk), q in sorted(rest.items()) if q)
            key = (e, h, p, nf)
            v2 = cscale(v, pw)
            cur = out.get(key)
            if cur is None:
                out[key] = v2
            else:
                s = cadd(cur, v2)
                if is_czero(s):
                    del out[key]
                else:
                    out[key] = s
    return DiffPoly(f.ring, out, f.exact_u)


def dx_pow(f, n):
    for _ in range(n):
        f = dx(f)
    return f


def partial(f, alpha, k):
    """Partial derivative with respect to the variable u^alpha_k."""
    out = {}
    for (e, h, p, fac), v in f.terms.items():
        for i, (al, kk, pw) in enumerate(fac):
            if al == alpha and kk == k:
                if pw == 1:
                    nf = fac[:i] + fac[i + 1:]
                else:
                    nf = fac[:i] + ((al, kk, pw - 1),) + fac[i + 1:]
                key = (e, h, p, nf)
                v2 = cscale(v, pw)
                cur = out.get(key)
                if cur is None:
                    out[key] = v2
                else:
                    s = cadd(cur, v2)
                    if is_czero(s):
                        del out[key]
                    else:
                        out[key] = s
                break
    e = f.exact_u
    return DiffPoly(f.ring, out, None if e is None else e - 1)


def euler_D(f):
    """Weight operator: eps d/deps + 2 hbar d/dhbar + sum u^alpha_k d/du^alpha_k.

    Acts term-wise as multiplication by the D-weight.  On classical rings the
    hbar part is vacuous since no term carries hbar.
    """
    out = {}
    for key, v in f.terms.items():
        w = key_weight(key)
        if w:
            out[key] = cscale(v, w)
    return DiffPoly(f.ring, out, f.exact_u)


def d_weight_inverse(f, shift=0):
    """Divide each term by (D-weight - shift); raises on weight == shift."""
    from .errors import WeightOneComponent, WeightZeroComponent
    out = {}
    for key, v in f.terms.items():
        w = key_weight(key) - shift
        if w == 0:
            if shift == 1:
                raise WeightOneComponent(
                    "monomial of D-weight one cannot be inverted")
            raise WeightZeroComponent(
                "constant (weight zero) monomial cannot be inverted")
        out[key] = cscale(v, Q1 / Q(w))
    return DiffPoly(f.ring, out, f.exact_u)


def substitute(f, images):
    """Simultaneous substitution u^alpha_k -> dx^k(images[alpha]).

    images: dict alpha -> DiffPoly, all in one common ring with the same
    number of variables as f's ring.  Missing alphas default to the identity
    image u^alpha of the target ring.
    """
    ring = f.ring
    target = None
    for g in images.values():
        if target is None:
            target = g.ring
        else:
            target.check(g.ring)
    if target is None:
        target = ring
    if target.n_vars != ring.n_vars:
        raise ContextMismatch("substitution target has a different variable count")
    ders = {}

    def der(al, k):
        if (al, k) not in ders:
            if k == 0:
                ders[(al, 0)] = images.get(al, target.u(al))
            else:
                ders[(al, k)] = dx(der(al, k - 1))
        return ders[(al, k)]

    out = target.zero()
    img_exacts = [g.exact_u for g in images.values() if g.exact_u is not None]
    for (e, h, p, fac), v in f.terms.items():
        if h and target.mode == "classical":
            raise ModeMismatch("hbar term substituted into a classical ring")
        acc = DiffPoly(target, {(e, h, p, ()): v})
        for al, k, pw in fac:
            d = der(al, k)
            for _ in range(pw):
                acc = acc * d
        out = out + acc
    exact = emin(f.exact_u, *img_exacts) if img_exacts else f.exact_u
    return out.with_exact_u(emin(exact, out.exact_u))


# ---------------------------------------------------------------------------
# serialization


def serialize(f):
    terms = []
    for key in sorted(f.terms):
        e, h, p, fac = key
        re, im = f.terms[key]
        terms.append({
            "re": qstr(re),
            "im": qstr(im),
            "params": {name: exp for name, exp in p},
            "eps": e,
            "hbar": h,
            "factors": [list(x) for x in fac],
        })
    return {
        "ring": {"n_vars": f.ring.n_vars, "params": list(f.ring.params)},
        "terms": terms,
    }


def parse(doc, ring=None):
    """Parse a formula document.  Errors carry the JSON path of the problem.

    If ring is given, the document must be compatible with it; otherwise a
    fresh context is built from the document's ring header (mode is quantum
    exactly when some term carries hbar).
    """
    if not isinstance(doc, dict):
        raise ParseError("expected an object", "$")
    head = doc.get("ring")
    if not isinstance(head, dict):
        raise ParseError("missing or invalid 'ring' header", "$.ring")
    n_vars = head.get("n_vars")
    if not isinstance(n_vars, int) or n_vars < 1:
        raise ParseError("n_vars must be a positive int", "$.ring.n_vars")
    pnames = head.get("params", [])
    if (not isinstance(pnames, list)
            or any(not isinstance(x, str) for x in pnames)):
        raise ParseError("params must be a list of strings", "$.ring.params")
    raw = doc.get("terms")
    if not isinstance(raw, list):
        raise ParseError("missing or invalid 'terms'", "$.terms")

    if ring is not None:
        if ring.n_vars != n_vars:
            raise ParseError(
                f"ring has {ring.n_vars} variables, document has {n_vars}",
                "$.ring.n_vars")
        for name in pnames:
            if name not in ring.params:
                raise ParseError(f"parameter {name!r} not declared in ring",
                                 "$.ring.params")

    any_hbar = any(isinstance(t, dict) and t.get("hbar", 0) for t in raw)
    if ring is None:
        ring = RingContext(n_vars=n_vars, params=tuple(pnames),
                           mode="quantum" if any_hbar else "classical")
    elif any_hbar and ring.mode == "classical":
        raise ParseError("document carries hbar but ring is classical",
                         "$.terms")

    out = {}
    for i, t in enumerate(raw):
        path = f"$.terms[{i}]"
        if not isinstance(t, dict):
            raise ParseError("term must be an object", path)
        re = parse_q(t.get("re", "0/1"), path + ".re")
        im = parse_q(t.get("im", "0/1"), path + ".im")
        if not re and not im:
            raise ParseError("zero coefficient not allowed in canonical form",
                             path)
        e = t.get("eps", 0)
        h = t.get("hbar", 0)
        if not isinstance(e, int) or e < 0:
            raise ParseError("eps must be a non-negative int", path + ".eps")
        if not isinstance(h, int) or h < 0:
            raise ParseError("hbar must be a non-negative int", path + ".hbar")
        pmap = t.get("params", {})
        if not isinstance(pmap, dict):
            raise ParseError("params must be an object", path + ".params")
        p = params_from_map(pmap, path + ".params")
        for name, _ in p:
            if name not in ring.params:
                raise ParseError(f"undeclared parameter {name!r}",
                                 path + ".params")
        rawfac = t.get("factors", [])
        if not isinstance(rawfac, list):
            raise ParseError("factors must be a list", path + ".factors")
        fac = []
        for j, x in enumerate(rawfac):
            fpath = f"{path}.factors[{j}]"
            if (not isinstance(x, list) or len(x) != 3
                    or any(not isinstance(y, int) for y in x)):
                raise ParseError("factor must be [alpha, k, pow] of ints", fpath)
            al, k, pw = x
            if not 1 <= al <= n_vars:
                raise ParseError(f"variable index {al} out of range", fpath)
            if k < 0 or pw < 1:
                raise ParseError("bad derivative order or power", fpath)
            fac.append((al, k, pw))
        sfac = tuple(sorted(fac))
        if len({(a, k) for a, k, _ in sfac}) != len(sfac):
            raise ParseError("duplicate factor variable", path + ".factors")
        key = (e, h, p, sfac)
        if key in out:
            raise ParseError("duplicate term key", path)
        out[key] = (re, im)
    return DiffPoly(ring, out)


# ---------------------------------------------------------------------------
# pretty rendering and its inverse


def _pretty_ufactor(ring, al, k, pw):
    s = "u" if ring.n_vars == 1 else f"u{al}"
    if k:
        s += f"_{k}"
    if pw > 1:
        s += f"^{pw}"
    return s


def _pretty_term(ring, key, val):
    e, h, p, fac = key
    re, im = val
    units = []
    if re and im:
        mixed = True
        sign = ""
        rs = str(re) if re.denominator == 1 else qstr(re)
        issign = "+" if im > 0 else "-"
        ia = abs(im)
        istr = str(ia) if ia.denominator == 1 else qstr(ia)
        num = f"({rs} {issign} {istr} i)"
        mag = None
    else:
        mixed = False
        if im:
            units.append("i")
            mag, neg = abs(im), im < 0
        else:
            mag, neg = abs(re), re < 0
        sign = "-" if neg else ""
        num = None
    for name, exp in p:
        units.append(name if exp == 1 else f"{name}^{exp}")
    if e:
        units.append("eps" if e == 1 else f"eps^{e}")
    if h:
        units.append("hbar" if h == 1 else f"hbar^{h}")
    non_u = bool(units)
    for al, k, pw in fac:
        units.append(_pretty_ufactor(ring, al, k, pw))
    if mixed:
        body = " ".join([num] + units) if units else num
        return "+", body
    if not units:
        body = str(mag) if mag.denominator == 1 else qstr(mag)
    elif mag == 1:
        body = " ".join(units)
    elif mag.numerator == 1 and not non_u:
        body = " ".join(units) + f"/{mag.denominator}"
    else:
        ms = str(mag) if mag.denominator == 1 else qstr(mag)
        body = f"({ms}) " + " ".join(units)
    return ("-" if sign else "+"), body


def pretty(f):
    """Deterministic human-readable rendering.  Grammar (round-trippable):

    poly   := "0" | ["-"] term ((" + " | " - ") term)*
    term   := mixed | [coeff " "] units ["/" int] | rat
    coeff  := "(" rat ")"
    mixed  := "(" rat (" + " | " - ") rat " i" ")" [" " units]
    units  := unit (" " unit)*
    unit   := "i" | name ["^" int] | "eps" ["^" int] | "hbar" ["^" int] | uvar
    uvar   := "u" [alpha] ["_" k] ["^" pow]     (alpha printed iff n_vars > 1)
    rat    := int | int "/" int

    A trailing "/q" divides the whole term and is only used when the
    coefficient is 1/q and the term is a plain u-monomial.
    """
    if not f.terms:
        return "0"
    parts = []
    for key in sorted(f.terms):
        sign, body = _pretty_term(f.ring, key, f.terms[key])
        if not parts:
            parts.append(("-" if sign == "-" else "") + body)
        else:
            parts.append(("- " if sign == "-" else "+ ") + body)
    return " ".join(parts)


def _lex_terms(text):
    """Split a pretty string into (sign, body) chunks, paren-aware."""
    chunks = []
    depth = 0
    cur = []
    sign = "+"
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and ch in "+-" and i + 1 < len(text) and text[i + 1] == " " \
                and i > 0 and text[i - 1] == " ":
            chunks.append((sign, "".join(cur).strip()))
            sign = ch
            cur = []
            i += 2
            continue
        cur.append(ch)
        i += 1
    chunks.append((sign, "".join(cur).strip()))
    return chunks


def _is_uvar(rest):
    """Accept the tail of a u token: '', 'N', '_k', or 'N_k'."""
    if rest == "":
        return True
    astr, sep, kstr = rest.partition("_")
    if sep and not kstr.isdigit():
        return False
    return astr == "" or astr.isdigit()


def _parse_rat(tok, path):
    try:
        if "/" in tok:
            n, d = tok.split("/")
            return Q(int(n), int(d))
        return Q(int(tok))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad rational {tok!r}", path) from None


def parse_pretty(text, ring):
    """Inverse of pretty for the documented grammar."""
    text = text.strip()
    if text == "0":
        return ring.zero()
    total = ring.zero()
    for tno, (sign, body) in enumerate(_lex_terms(text)):
        path = f"term[{tno}]"
        if not body:
            raise ParseError("empty term", path)
        neg = sign == "-"
        if body.startswith("-"):
            neg = not neg
            body = body[1:].strip()
        re, im = Q1, Q0
        if body.startswith("("):
            close = body.index(")")
            inner = body[1:close].strip()
            body = body[close + 1:].strip()
            if inner.endswith(" i"):
                # mixed complex: "a + b i" / "a - b i"
                core = inner[:-2].strip()
                for op in (" + ", " - "):
                    if op in core:
                        a, b = core.split(op)
                        re = _parse_rat(a.strip(), path)
                        im = _parse_rat(b.strip(), path)
                        if op == " - ":
                            im = -im
                        break
                else:
                    raise ParseError(f"bad complex coefficient ({inner})", path)
            else:
                re = _parse_rat(inner, path)
        denom = Q1
        toks = body.split() if body else []
        eps = hbar = 0
        params = {}
        fac = {}
        is_imag = False
        for tok in toks:
            if tok == "i":
                is_imag = True
                continue
            base, _, exp = tok.partition("^")
            slash_den = None
            if "/" in (exp or base):
                # trailing "/q" division: u^2/2 or u_2/24
                target, _, dstr = tok.rpartition("/")
                slash_den = int(dstr)
                tok = target
                base, _, exp = tok.partition("^")
            n = int(exp) if exp else 1
            if slash_den is not None:
                denom *= slash_den
            if base == "eps":
                eps += n
            elif base == "hbar":
                hbar += n
            elif base.startswith("u") and _is_uvar(base[1:]):
                rest = base[1:]
                if "_" in rest:
                    astr, kstr = rest.split("_")
                    k = int(kstr)
                else:
                    astr, k = rest, 0
                al = int(astr) if astr else 1
                fac[(al, k)] = fac.get((al, k), 0) + n
            elif base in ring.params:
                params[base] = params.get(base, 0) + n
            elif not tok:
                continue
            else:
                # bare rational token (constant term)
                try:
                    re = re * _parse_rat(tok, path)
                    continue
                except ParseError:
                    raise ParseError(f"unknown token {tok!r}", path) from None
        if not toks:
            pass  # pure "(rat)" coefficient term
        val = (re / denom, im / denom)
        if is_imag and not val[1]:
            val = (Q0, val[0])
        if neg:
            val = (-val[0], -val[1])
        total = total + ring.monomial(val, eps=eps, hbar=hbar,
                                      factors=tuple((a, k, p) for (a, k), p
                                                    in sorted(fac.items())),
                                      params=tuple(sorted(params.items())))
    return total
