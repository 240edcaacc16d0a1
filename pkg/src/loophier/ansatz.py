"""Graded ansatz spaces for recursion-compatible Hamiltonian densities.

For a fixed genus the space of admissible density corrections is finite
dimensional: a span of jet monomials weighted by the epsilon and hbar
sectors the grading allows.  This module enumerates that span, attaches an
unknown coefficient to every monomial, runs the operator recursion and the
variational shape condition symbolically, and reduces the collected
constraints to an exact affine family.

The unknowns ride along as formal ring parameters.  Because every basis
monomial sits at the target genus, a product of two unknowns lands at twice
the target genus and the truncation window discards it, so the constraints
stay linear by construction; the solver asserts this rather than assuming
it.
"""

import itertools

from .brackets import HamiltonianOperator, poisson_local, star_commutator_local
from .coeffs import CONE, CZERO, cadd, cdiv, cmul, cneg, csub, is_czero
from .errors import Inconsistent
from .functionals import LocalFunctional, split_exact, var_deriv
from .rat import Q
from .ring import DiffPoly, RingContext, TruncationWindow, key_weight, serialize

__all__ = ["monomial_basis", "AnsatzProblem", "AnsatzSolution",
           "solve_dr_type"]


def monomial_basis(ring, genus, diff_degree_bound):
    """Independent density monomials for one genus slice.

    Enumerates products of jet variables in every epsilon/hbar sector of
    the given genus and keeps one representative per integration-by-parts
    class.  A classical ring pins the total derivative order to twice the
    genus (the degree-zero condition); a quantum ring admits every order
    up to that, the deficit carried by hbar.  Total derivatives and
    combinations dependent on earlier picks are dropped, with preference
    given to representatives of low top derivative order.
    """
    if genus < 0:
        raise ValueError("genus must be non-negative")
    if diff_degree_bound < 1:
        raise ValueError("diff_degree_bound must be positive")
    if ring.mode == "classical":
        sectors = [(2 * genus, 0)]
    else:
        sectors = [(2 * j, genus - j) for j in range(genus, -1, -1)]
    alphabet = [(al, k) for k in range(2 * genus + 1)
                for al in range(1, ring.n_vars + 1)]
    kept = []
    pivots = []
    for e, h in sectors:
        orders = [2 * genus] if ring.mode == "classical" \
            else range(2 * genus, -1, -1)
        for s in orders:
            batch = []
            for m in range(1, diff_degree_bound + 1):
                for combo in itertools.combinations_with_replacement(
                        alphabet, m):
                    if sum(k for _, k in combo) != s:
                        continue
                    counts = {}
                    for al, k in combo:
                        counts[(al, k)] = counts.get((al, k), 0) + 1
                    factors = tuple(sorted(
                        (al, k, p) for (al, k), p in counts.items()))
                    batch.append(factors)
            batch.sort(key=lambda fac: (len(fac) and max(k for _, k, _ in fac),
                                        len(fac), fac))
            for factors in batch:
                mono = ring.monomial(CONE, eps=e, hbar=h, factors=factors)
                if mono.is_zero():
                    continue
                if _record_independent(mono, pivots):
                    kept.append(mono)
    return kept


def _fingerprint(poly):
    """Variational derivative vector of a density, as a sparse map."""
    vec = {}
    for alpha in range(1, poly.ring.n_vars + 1):
        for key, v in var_deriv(poly, alpha).terms.items():
            vec[(alpha, key)] = v
    return vec


def _reduce_vector(vec, pivots):
    for pkey, pvec in pivots:
        v = vec.get(pkey)
        if v is None or is_czero(v):
            continue
        for k2, v2 in pvec.items():
            nv = csub(vec.get(k2, CZERO), cmul(v, v2))
            if is_czero(nv):
                vec.pop(k2, None)
            else:
                vec[k2] = nv
    return vec


def _record_independent(mono, pivots):
    """Add mono's class to the running span; False when dependent."""
    vec = _reduce_vector(_fingerprint(mono), pivots)
    if not vec:
        return False
    pkey = max(vec)
    inv = cdiv(CONE, vec[pkey])
    pivots.append((pkey, {k: cmul(v, inv) for k, v in vec.items()}))
    return True


class AnsatzProblem:
    """One genus slice to solve for, on top of a trusted lower-genus part.

    known_part is a density whose slices through genus - 1 already satisfy
    the recursion; the solver looks for the corrections at the stated
    genus.  d_check sets how many recursion levels are imposed.
    """

    def __init__(self, ring, known_part, genus, d_check=3,
                 diff_degree_bound=None):
        if genus < 0:
            raise ValueError("genus must be non-negative")
        if d_check < 1:
            raise ValueError("d_check must be at least 1")
        if known_part is None:
            known_part = ring.zero()
        ring.check(known_part.ring)
        if diff_degree_bound is None:
            diff_degree_bound = max(genus + 1, 3)
        self.ring = ring
        self.known_part = known_part
        self.genus = genus
        self.d_check = d_check
        self.diff_degree_bound = diff_degree_bound
        self.basis = monomial_basis(ring, genus, diff_degree_bound)


def _lift(f, ring):
    out = {}
    for key, v in f.terms.items():
        if not ring._clipped(key):
            out[key] = v
    return DiffPoly(ring, out)


class _LinearSystem:
    """Sparse exact linear system in the unknown ansatz coefficients.

    Rows are harvested from residual polynomials: every monomial gives one
    equation, with the unknown-parameter exponents deciding whether a value
    lands in the matrix or the right-hand side.
    """

    def __init__(self, names):
        self.index = {n: i for i, n in enumerate(names)}
        self.rows = {}

    def take(self, tag, poly):
        for (e, h, params, fac), v in poly.terms.items():
            cols = []
            rest = []
            for name, exp in params:
                if name in self.index:
                    cols.append((self.index[name], exp))
                else:
                    rest.append((name, exp))
            row = self.rows.setdefault((tag, e, h, tuple(rest), fac),
                                       [{}, CZERO])
            if not cols:
                row[1] = csub(row[1], v)
            elif len(cols) == 1 and cols[0][1] == 1:
                j = cols[0][0]
                row[0][j] = cadd(row[0].get(j, CZERO), v)
            else:
                raise AssertionError(
                    "unknown coefficients combined nonlinearly; the genus "
                    "window failed to separate them")

    def solve(self, ncols):
        return _rref(self.rows.values(), ncols)


def _rref(rows, ncols):
    """Exact reduced row echelon solve over Gaussian rational pairs.

    rows yields (coeffs, rhs) with coeffs a sparse column map.  Returns a
    particular solution (free columns zero) and a kernel basis, or raises
    Inconsistent when no solution exists.
    """
    pivots = {}
    for coeffs, rhs in rows:
        coeffs = dict(coeffs)
        for col in sorted(coeffs):
            v = coeffs.get(col)
            if v is None or is_czero(v):
                continue
            piv = pivots.get(col)
            if piv is None:
                continue
            pc, pr = piv
            coeffs.pop(col)
            for c2, v2 in pc.items():
                nv = csub(coeffs.get(c2, CZERO), cmul(v, v2))
                if is_czero(nv):
                    coeffs.pop(c2, None)
                else:
                    coeffs[c2] = nv
            rhs = csub(rhs, cmul(v, pr))
        lead = min((c for c, v in coeffs.items() if not is_czero(v)),
                   default=None)
        if lead is None:
            if not is_czero(rhs):
                raise Inconsistent(
                    "constraints admit no solution: residual "
                    f"{rhs} with no free coefficient left")
            continue
        inv = cdiv(CONE, coeffs.pop(lead))
        pc = {c: cmul(v, inv) for c, v in coeffs.items() if not is_czero(v)}
        pr = cmul(rhs, inv)
        for col2, piv2 in pivots.items():
            w = piv2[0].pop(lead, None)
            if w is None:
                continue
            for c2, v2 in pc.items():
                nv = csub(piv2[0].get(c2, CZERO), cmul(w, v2))
                if is_czero(nv):
                    piv2[0].pop(c2, None)
                else:
                    piv2[0][c2] = nv
            piv2[1] = csub(piv2[1], cmul(w, pr))
        pivots[lead] = [pc, pr]
    particular = [pivots[c][1] if c in pivots else CZERO
                  for c in range(ncols)]
    kernel = []
    for free in range(ncols):
        if free in pivots:
            continue
        vec = [CZERO] * ncols
        vec[free] = CONE
        for p, (pc, _) in pivots.items():
            w = pc.get(free)
            if w is not None:
                vec[p] = cneg(w)
        kernel.append(vec)
    return particular, kernel


def _seed(ring, alpha):
    acc = ring.zero()
    for mu in range(1, ring.n_vars + 1):
        pair = ring.eta_pair(alpha, mu)
        if not is_czero(pair):
            acc = acc + ring.u(mu) * pair
    return acc


def _shape_rows(sys, cand, ring):
    """Rows from the variational shape of the level-one density.

    The first variational derivative must be half the pairing form plus a
    second derivative of a lower-weight density; quantum rings additionally
    admit a constant.  Both conditions reduce to exactness statements read
    off the canonical residue.
    """
    half = ring.zero()
    for mu in range(1, ring.n_vars + 1):
        for nu in range(1, ring.n_vars + 1):
            pair = ring.eta_pair(mu, nu)
            if is_czero(pair):
                continue
            if mu == nu:
                mono = ring.monomial(cmul(pair, (Q(1, 2), Q(0))),
                                     factors=((mu, 0, 2),))
            elif mu < nu:
                mono = ring.monomial(pair,
                                     factors=((mu, 0, 1), (nu, 0, 1)))
            else:
                continue
            half = half + mono
    resid = var_deriv(cand, 1) - half
    m, r, c = split_exact(resid)
    sys.take(("shape", "residue"), r)
    if ring.mode == "classical":
        sys.take(("shape", "const"), c)
        m2, r2, c2 = split_exact(m)
        sys.take(("shape", "inner"), r2 + c2)


def _recursion_rows(sys, cand, problem, ring):
    """Rows from running the operator recursion on the candidate density.

    Each level must be an exact x-derivative with no component of unit
    grading weight; the level past d_check is only required to be exact.
    Quantum rings also tie the level-one density back to the generator.
    """
    func = LocalFunctional(cand)
    quantum = ring.mode == "quantum"
    op = None if quantum else HamiltonianOperator.standard(ring)
    level_one = None
    for alpha in range(1, ring.n_vars + 1):
        g = _seed(ring, alpha)
        for p in range(problem.d_check + 2):
            if quantum:
                flow = star_commutator_local(g, func, divided=True)
            else:
                flow = poisson_local(g, func, op)
            m, r, c = split_exact(flow)
            sys.take(("flow", alpha, p), r + c)
            if p > problem.d_check:
                break
            nxt = {}
            bad = {}
            for key, v in m.terms.items():
                w = key_weight(key) - 1
                if w == 0:
                    bad[key] = v
                else:
                    nxt[key] = cmul(v, (Q(1) / Q(w), Q(0)))
            sys.take(("weight", alpha, p), DiffPoly(ring, bad))
            g = DiffPoly(ring, nxt)
            if alpha == 1 and p == 1:
                level_one = g
    _, r, _ = split_exact(level_one - cand)
    sys.take(("normalization",), r)


def solve_dr_type(problem):
    """Solve the linear constraints cutting out one genus slice.

    Attaches a formal coefficient to every basis monomial, imposes the
    variational shape condition and, at positive genus, exactness of the
    operator recursion through the problem's depth, then reduces the
    system exactly.  Genus zero is determined by the shape condition
    alone.  Returns the affine family of solutions.
    """
    base = problem.ring
    g = problem.genus
    names = tuple(f"_c{i + 1}" for i in range(len(problem.basis)))
    window = TruncationWindow(genus_cutoff=2 * g)
    cring = RingContext(n_vars=base.n_vars, var_names=base.var_names,
                        eta=base.eta, params=base.params + names,
                        mode=base.mode, window=window)
    cand = _lift(problem.known_part, cring)
    for name, mono in zip(names, problem.basis):
        cand = cand + _lift(mono, cring) * cring.param(name)
    sys = _LinearSystem(names)
    _shape_rows(sys, cand, cring)
    if g > 0:
        _recursion_rows(sys, cand, problem, cring)
    particular, kernel = sys.solve(len(names))
    return AnsatzSolution(problem, particular, kernel)


class AnsatzSolution:
    """Affine family of genus-slice densities satisfying the constraints.

    Points are particular + sum of parameter values times kernel
    directions, expressed in the coordinates of the problem's monomial
    basis.
    """

    def __init__(self, problem, particular, kernel):
        self.problem = problem
        self.basis = problem.basis
        self.particular = particular
        self.kernel = kernel

    def dimension(self):
        return len(self.kernel)

    def _values(self, values):
        if values is None:
            values = ()
        out = []
        for v in values:
            if isinstance(v, tuple):
                out.append((Q(v[0]), Q(v[1])))
            else:
                out.append((Q(v), Q(0)))
        if len(out) > len(self.kernel):
            raise ValueError(
                f"{len(out)} parameter values for a "
                f"{len(self.kernel)}-dimensional family")
        out.extend([CZERO] * (len(self.kernel) - len(out)))
        return out

    def coefficients(self, values=None):
        """Basis coordinates of the family point at the given parameters."""
        out = list(self.particular)
        for t, vec in zip(self._values(values), self.kernel):
            if is_czero(t):
                continue
            out = [cadd(x, cmul(t, k)) for x, k in zip(out, vec)]
        return out

    def genus_part(self, values=None):
        """The genus-slice density at a family point, in the base ring."""
        acc = self.problem.ring.zero()
        for coeff, mono in zip(self.coefficients(values), self.basis):
            if not is_czero(coeff):
                acc = acc + mono * coeff
        return acc

    def density(self, values=None):
        """Known lower-genus part plus the slice at a family point."""
        return self.problem.known_part + self.genus_part(values)

    def _direction(self, j):
        acc = self.problem.ring.zero()
        for coeff, mono in zip(self.kernel[j], self.basis):
            if not is_czero(coeff):
                acc = acc + mono * coeff
        return acc

    def pin(self, mono, value):
        """Gauge-fix one basis coordinate to an exact value.

        The constraints are covariant under rescaling the formal dispersion
        parameter, so solution spaces carry gauge directions along with the
        essential ones; pinning the coefficient of a reference monomial
        (fixing a term of the basis point) selects a slice.  Returns the
        restricted family; raises Inconsistent when the value is
        unreachable.
        """
        if len(mono.terms) != 1:
            raise ValueError("pin expects a single monomial")
        ((key, unit),) = mono.terms.items()
        if not is_czero(csub(unit, CONE)):
            raise ValueError("pin expects a unit-coefficient monomial")
        idx = None
        for i, b in enumerate(self.basis):
            if key in b.terms:
                idx = i
                break
        if idx is None:
            raise ValueError("monomial is not a basis representative")
        if isinstance(value, tuple):
            value = (Q(value[0]), Q(value[1]))
        else:
            value = (Q(value), Q(0))
        row = ({j: vec[idx] for j, vec in enumerate(self.kernel)
                if not is_czero(vec[idx])},
               csub(value, self.particular[idx]))
        tpart, tkern = _rref([row], len(self.kernel))
        particular = self.coefficients(tpart)
        kernel = []
        for w in tkern:
            vec = [CZERO] * len(self.basis)
            for j, t in enumerate(w):
                if is_czero(t):
                    continue
                vec = [cadd(x, cmul(t, k))
                       for x, k in zip(vec, self.kernel[j])]
            kernel.append(vec)
        out = AnsatzSolution(self.problem, particular, kernel)
        return out

    def contains(self, target):
        """Parameter values placing target in the family, or None.

        target is a genus-slice density in the problem's ring; comparison
        is as functionals, so representatives differing by total
        derivatives or constants still match.
        """
        self.problem.ring.check(target.ring)
        want = _fingerprint(target - self.genus_part())
        cols = [_fingerprint(self._direction(j))
                for j in range(len(self.kernel))]
        keys = set(want)
        for f in cols:
            keys.update(f)
        rows = []
        for key in keys:
            coeffs = {}
            for j, f in enumerate(cols):
                v = f.get(key)
                if v is not None and not is_czero(v):
                    coeffs[j] = v
            rows.append((coeffs, want.get(key, CZERO)))
        try:
            values, _ = _rref(rows, len(self.kernel))
        except Inconsistent:
            return None
        return values

    def serialize(self):
        return {
            "genus": self.problem.genus,
            "d_check": self.problem.d_check,
            "dimension": self.dimension(),
            "basis_point": serialize(self.genus_part()),
            "kernel_generators": [serialize(self._direction(j))
                                  for j in range(len(self.kernel))],
        }
