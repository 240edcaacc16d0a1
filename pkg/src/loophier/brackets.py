"""Poisson brackets and their quantum deformation.

The classical bracket of a density with a local functional is

    {f, G} = sum_{mu,s} df/du^mu_s dx^s( K^{mu nu} dG/du^nu )

for a Hamiltonian operator K; the standard K has entries eta^{mu nu} dx
with eta^ upper the inverse pairing matrix.

The quantum bracket replaces K by a full star-product commutator: the order
n >= 1 piece contracts n-th multiset derivatives of both arguments through
eta, with a combinatorial kernel C_j attached to each contraction pattern,

    sum_j C_j^{a_1..a_n} dx^j,   a_i = s_i + r_i + 1,

where the C row is read off the expansion of a product of polylogarithms
Li_{-d}(z) = sum_{k>=1} k^d z^k in the basis Li_{-j}(z).
"""

from .rat import Q, Q0, Q1
from .coeffs import cmul, cscale, is_czero
from .errors import ModeMismatch
from .ring import DiffPoly, dx, dx_pow, partial, pretty
from .functionals import LocalFunctional, var_deriv

__all__ = ["DiffOperator", "HamiltonianOperator", "polylog_product_coeffs",
           "contraction_row", "poisson_local", "poisson",
           "star_commutator_local", "star_commutator"]


class DiffOperator:
    """Scalar differential operator sum_j a_j(u) dx^j with poly coefficients."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring, coeffs=None):
        self.ring = ring
        cleaned = {}
        if coeffs:
            for j, a in coeffs.items():
                if j < 0:
                    raise ValueError("negative power of dx")
                if not a.is_zero():
                    ring.check(a.ring)
                    cleaned[j] = a
        self.coeffs = cleaned

    @classmethod
    def dx_power(cls, ring, j, coeff=None):
        a = ring.one() if coeff is None else coeff
        return cls(ring, {j: a})

    def is_zero(self):
        return not self.coeffs

    def order(self):
        return max(self.coeffs) if self.coeffs else None

    def apply(self, p):
        out = self.ring.zero()
        jmax = self.order()
        if jmax is None:
            return out
        pow_cache = p
        last = 0
        for j in sorted(self.coeffs):
            pow_cache = dx_pow(pow_cache, j - last)
            last = j
            out = out + self.coeffs[j] * pow_cache
        return out

    def compose(self, other):
        """Operator product self . other using the Leibniz rule."""
        self.ring.check(other.ring)
        out = {}
        for i, a in self.coeffs.items():
            binom = 1
            for m in range(i + 1):
                if m:
                    binom = binom * (i - m + 1) // m
                for j, b in other.coeffs.items():
                    c = a * dx_pow(b, m) * binom
                    k = i + j - m
                    out[k] = out.get(k, self.ring.zero()) + c
        return DiffOperator(self.ring, out)

    def __add__(self, other):
        self.ring.check(other.ring)
        out = dict(self.coeffs)
        for j, b in other.coeffs.items():
            out[j] = out.get(j, self.ring.zero()) + b
        return DiffOperator(self.ring, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return DiffOperator(self.ring, {j: -a for j, a in self.coeffs.items()})

    def scale(self, c):
        return DiffOperator(self.ring,
                            {j: a * c for j, a in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.coeffs == other.coeffs

    __hash__ = None

    def pretty(self):
        if not self.coeffs:
            return "0"
        parts = []
        for j in sorted(self.coeffs):
            a = pretty(self.coeffs[j])
            if j == 0:
                parts.append(a)
            else:
                d = "dx" if j == 1 else f"dx^{j}"
                parts.append(d if a == "1" else f"({a}) {d}")
        return " + ".join(parts)


class HamiltonianOperator:
    """Matrix of differential operators acting on variational gradients."""

    __slots__ = ("ring", "entries")

    def __init__(self, ring, entries=None):
        self.ring = ring
        self.entries = {}
        if entries:
            for (mu, nu), op in entries.items():
                if not 1 <= mu <= ring.n_vars or not 1 <= nu <= ring.n_vars:
                    raise ValueError("operator index out of range")
                if not op.is_zero():
                    self.entries[(mu, nu)] = op

    @classmethod
    def standard(cls, ring):
        """eta^{mu nu} dx with upper indices from the inverse pairing."""
        entries = {}
        for mu in range(1, ring.n_vars + 1):
            for nu in range(1, ring.n_vars + 1):
                pair = ring.eta_inv_pair(mu, nu)
                if is_czero(pair):
                    continue
                entries[(mu, nu)] = DiffOperator.dx_power(
                    ring, 1, ring.const(pair))
        return cls(ring, entries)

    def entry(self, mu, nu):
        return self.entries.get((mu, nu), DiffOperator(self.ring))

    def apply(self, vec):
        """Matrix action on a covector {nu: poly} giving {mu: poly}."""
        out = {}
        for (mu, nu), op in self.entries.items():
            p = vec.get(nu)
            if p is None or p.is_zero():
                continue
            r = op.apply(p)
            out[mu] = out.get(mu, self.ring.zero()) + r
        return out

    def compose(self, other):
        out = {}
        for (mu, s), a in self.entries.items():
            for (t, nu), b in other.entries.items():
                if s != t:
                    continue
                c = a.compose(b)
                key = (mu, nu)
                out[key] = out.get(key, DiffOperator(self.ring)) + c
        return HamiltonianOperator(self.ring, out)

    def __add__(self, other):
        out = dict(self.entries)
        for key, op in other.entries.items():
            out[key] = out.get(key, DiffOperator(self.ring)) + op
        return HamiltonianOperator(self.ring, out)

    def __sub__(self, other):
        neg = {k: -v for k, v in other.entries.items()}
        return self + HamiltonianOperator(self.ring, neg)

    def __eq__(self, other):
        if not isinstance(other, HamiltonianOperator):
            return NotImplemented
        return self.entries == other.entries

    __hash__ = None

    def pretty(self):
        lines = []
        for mu, nu in sorted(self.entries):
            lines.append(f"K[{mu},{nu}] = " + self.entries[(mu, nu)].pretty())
        return "\n".join(lines) if lines else "K = 0"


# ---------------------------------------------------------------------------
# classical bracket


def poisson_local(f, g, operator=None):
    """Bracket of a density f with a local functional g (class-invariant)."""
    ring = f.ring
    if isinstance(g, DiffPoly):
        g = LocalFunctional(g)
    ring.check(g.ring)
    K = operator if operator is not None else HamiltonianOperator.standard(ring)
    grad = {nu: g.var_deriv(nu) for nu in range(1, ring.n_vars + 1)}
    flow = K.apply(grad)
    out = ring.zero()
    for mu, w in flow.items():
        if w.is_zero():
            continue
        smax = -1
        for key in f.terms:
            for al, s, _ in key[3]:
                if al == mu and s > smax:
                    smax = s
        cur = w
        for s in range(smax + 1):
            if s:
                cur = dx(cur)
            df = partial(f, mu, s)
            if not df.is_zero():
                out = out + df * cur
    return out


def poisson(fbar, gbar, operator=None):
    """Bracket of two local functionals."""
    if isinstance(fbar, DiffPoly):
        fbar = LocalFunctional(fbar)
    return LocalFunctional(poisson_local(fbar.density, gbar, operator))


# ---------------------------------------------------------------------------
# contraction kernel


def _interpolate(values):
    """Exact coefficients of the polynomial through (k, values[k]), k = 0.."""
    m = len(values) - 1
    a = [[Q(k) ** j for j in range(m + 1)] + [values[k]]
         for k in range(m + 1)]
    for col in range(m + 1):
        piv = next(r for r in range(col, m + 1) if a[r][col])
        a[col], a[piv] = a[piv], a[col]
        inv = Q1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(m + 1):
            if r != col and a[r][col]:
                fct = a[r][col]
                a[r] = [x - fct * y for x, y in zip(a[r], a[col])]
    return [a[j][m + 1] for j in range(m + 1)]


def polylog_product_coeffs(ds):
    """Expansion of prod_i Li_{-d_i}(z) as sum_j c_j Li_{-j}(z).

    Returns {j: c_j} for j = 1 .. sum(ds) + len(ds) - 1.  The coefficient
    sequence of the product is a polynomial in the frequency k with zero
    constant term; its monomial coefficients are exactly the c_j.
    """
    ds = tuple(ds)
    n = len(ds)
    m = sum(ds) + n - 1
    conv = None
    for d in ds:
        if conv is None:
            conv = [Q(k) ** d if k >= 1 else Q0 for k in range(m + 1)]
        else:
            nxt = [Q0] * (m + 1)
            for k in range(2, m + 1):
                s = Q0
                for a in range(1, k):
                    if conv[a]:
                        s += conv[a] * Q(k - a) ** d
                nxt[k] = s
            conv = nxt
    coeffs = _interpolate(conv)
    assert coeffs[0] == 0, "product of polylogs grew a constant term"
    return {j: coeffs[j] for j in range(1, m + 1) if coeffs[j]}


_ROW_CACHE = {}


def contraction_row(a_sorted):
    """Signed, parity-filtered kernel row for contraction weights a_i.

    C_j = (-1)^((n-1+sum a - j)/2) c_j when j has the parity of n-1+sum a,
    zero otherwise, with c_j from polylog_product_coeffs.
    """
    row = _ROW_CACHE.get(a_sorted)
    if row is None:
        n = len(a_sorted)
        tot = n - 1 + sum(a_sorted)
        raw = polylog_product_coeffs(a_sorted)
        row = {}
        for j, c in raw.items():
            if (tot - j) % 2 == 0:
                s = -c if ((tot - j) // 2) % 2 else c
                row[j] = s
        _ROW_CACHE[a_sorted] = row
    return row


# ---------------------------------------------------------------------------
# quantum bracket


def _multiset_derivs(f, n_max):
    """All nonzero iterated partials by letter multisets up to order n_max.

    Returns a list levels[n] = {multiset: poly} with multisets stored as
    sorted tuples of letters (alpha, k).
    """
    levels = [{(): f}]
    for _ in range(n_max):
        nxt = {}
        for ms, p in levels[-1].items():
            floor = ms[-1] if ms else None
            for al, k in sorted(p.support_vars()):
                letter = (al, k)
                if floor is not None and letter < floor:
                    continue
                d = partial(p, al, k)
                if d.is_zero():
                    continue
                nxt[ms + (letter,)] = d
        if not nxt:
            break
        levels.append(nxt)
    return levels


def _distribute(total, caps):
    """All ways to write total as a sum bounded by caps, largest first."""
    if not caps:
        if total == 0:
            yield ()
        return
    head = min(total, caps[0])
    for x in range(head, -1, -1):
        for rest in _distribute(total - x, caps[1:]):
            yield (x,) + rest


def _tables(fmults, gcaps, allowed):
    """Contingency tables: rows fmults, column sums <= gcaps, full total.

    Yields {(i, j): count}; allowed[i][j] False forces a zero cell.
    """
    if not fmults:
        if all(c == 0 for c in gcaps):
            yield {}
        return
    m = fmults[0]
    caps = tuple(c if allowed[0][j] else 0 for j, c in enumerate(gcaps))
    for row in _distribute(m, caps):
        rest_caps = tuple(c - x for c, x in zip(gcaps, row))
        for sub in _tables(fmults[1:], rest_caps, allowed[1:]):
            tab = {(i + 1, j): c for (i, j), c in sub.items()}
            for j, x in enumerate(row):
                if x:
                    tab[(0, j)] = x
            yield tab


_FACT = [1, 1, 2, 6, 24, 120, 720, 5040]


def _fact(n):
    while len(_FACT) <= n:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[n]


def star_commutator_local(f, g, divided=False):
    """Quantum commutator of a density with a local functional.

    Orientation: order one reproduces hbar times the standard Poisson
    bracket, so (1/hbar) [f, g] at hbar = 0 is the classical flow.

    divided=True computes (1/hbar) [f, g] natively, with the hbar
    prefactors lowered by one before any window truncation; under a
    finite genus window this keeps flow terms that the divide-after
    route would clip.
    """
    ring = f.ring
    if ring.mode != "quantum":
        raise ModeMismatch("star commutator needs a quantum ring")
    if isinstance(g, LocalFunctional):
        g = g.density
    ring.check(g.ring)
    n_max = min(f.udeg_max(), g.udeg_max())
    gc = ring.window.genus_cutoff
    if gc is not None:
        n_max = min(n_max, gc // 2 + 1 if divided else gc // 2)
    f_levels = _multiset_derivs(f, n_max)
    g_levels = _multiset_derivs(g, n_max)
    total = ring.zero()
    for n in range(1, n_max + 1):
        if n >= len(f_levels) or n >= len(g_levels):
            break
        # (-i)^(n-1) hbar^n
        ip = [(Q1, Q0), (Q0, -Q1), (-Q1, Q0), (Q0, Q1)][(n - 1) % 4]
        hbar_pref = ring.monomial(ip, hbar=n - 1 if divided else n)
        if hbar_pref.is_zero():
            break
        level_sum = ring.zero()
        for mf, df in f_levels[n].items():
            fletters = sorted(set(mf))
            fmults = tuple(mf.count(x) for x in fletters)
            for mg, dg in g_levels[n].items():
                gletters = sorted(set(mg))
                gcaps = tuple(mg.count(x) for x in gletters)
                allowed = [[not is_czero(ring.eta_inv_pair(a[0], b[0]))
                            for b in gletters] for a in fletters]
                dg_dx = [dg]
                acc = ring.zero()
                for tab in _tables(fmults, gcaps, allowed):
                    scalar = (Q1, Q0)
                    denom = 1
                    rsum = 0
                    a_list = []
                    for (i, j), cnt in tab.items():
                        al, s = fletters[i]
                        be, r = gletters[j]
                        eta = ring.eta_inv_pair(al, be)
                        for _ in range(cnt):
                            scalar = cmul(scalar, eta)
                        denom *= _fact(cnt)
                        rsum += r * cnt
                        a_list.extend([s + r + 1] * cnt)
                    if is_czero(scalar):
                        continue
                    sgn = -1 if rsum % 2 else 1
                    scalar = cscale(scalar, Q(sgn, denom))
                    row = contraction_row(tuple(sorted(a_list)))
                    inner = ring.zero()
                    for j, c in sorted(row.items()):
                        while len(dg_dx) <= j:
                            dg_dx.append(dx(dg_dx[-1]))
                        inner = inner + dg_dx[j] * c
                    acc = acc + inner.scale(scalar)
                if not acc.is_zero():
                    level_sum = level_sum + df * acc
        total = total + hbar_pref * level_sum
    return total


def star_commutator(fbar, gbar):
    """Quantum commutator of two local functionals."""
    if isinstance(fbar, DiffPoly):
        fbar = LocalFunctional(fbar)
    return LocalFunctional(star_commutator_local(fbar.density, gbar))
