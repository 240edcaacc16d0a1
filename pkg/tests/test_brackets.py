import random

import pytest

from loophier.rat import Q
from loophier.errors import ModeMismatch
from loophier.ring import RingContext, dx, euler_D, pretty
from loophier.functionals import (integrate, dx_inverse, d_minus_one_inverse,
                                  LocalFunctional)
from loophier.brackets import (DiffOperator, HamiltonianOperator,
                               polylog_product_coeffs, contraction_row,
                               poisson_local, poisson, star_commutator_local,
                               star_commutator)
from helpers import rand_poly


def kdv_ring():
    return RingContext(n_vars=1)


def kdv_chain(R):
    u, u2 = R.u(), R.u(1, 2)
    e2 = R.monomial(Q(1, 24), eps=2)
    return u ** 3 / 6 + e2 * u * u2


# ---------------------------------------------------------------------------
# contraction kernel


def test_polylog_product_known_row():
    assert polylog_product_coeffs((1, 1)) == {1: Q(-1, 6), 3: Q(1, 6)}
    assert polylog_product_coeffs((2,)) == {2: Q(1)}


def test_polylog_product_is_an_identity_beyond_fit():
    # the expansion must reproduce the convolution at frequencies past the
    # interpolation window, otherwise it is not a polynomial identity
    rng = random.Random(41)
    for _ in range(6):
        ds = tuple(rng.randint(1, 4) for _ in range(rng.randint(1, 3)))
        row = polylog_product_coeffs(ds)
        m = sum(ds) + len(ds) - 1
        for k in range(1, m + 4):
            conv = Q(0)
            for parts in _compositions(k, len(ds)):
                t = Q(1)
                for p, d in zip(parts, ds):
                    t *= Q(p) ** d
                conv += t
            assert sum(c * Q(k) ** j for j, c in row.items()) == conv


def _compositions(total, n):
    if n == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - n + 2):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


def test_contraction_row_signs_and_parity():
    assert contraction_row((1, 1)) == {1: Q(1, 6), 3: Q(1, 6)}
    assert contraction_row((1,)) == {1: Q(1)}
    assert contraction_row((4,)) == {4: Q(1)}
    rng = random.Random(42)
    for _ in range(6):
        a = tuple(sorted(rng.randint(1, 4) for _ in range(rng.randint(1, 3))))
        row = contraction_row(a)
        tot = len(a) - 1 + sum(a)
        for j in row:
            assert (tot - j) % 2 == 0
            assert 1 <= j <= tot


# ---------------------------------------------------------------------------
# operators


def test_standard_operator_entries():
    R = RingContext(n_vars=2, eta=[[0, 1], [1, 0]])
    K = HamiltonianOperator.standard(R)
    assert (1, 1) not in K.entries
    op = K.entry(1, 2)
    assert op.coeffs.keys() == {1}
    u = R.u(1)
    assert op.apply(u ** 2) == 2 * u * R.u(1, 1)


def test_operator_compose_matches_apply():
    rng = random.Random(43)
    R = RingContext(n_vars=1)
    for _ in range(10):
        a = DiffOperator(R, {0: rand_poly(rng, R, 2, allow_i=False),
                             2: rand_poly(rng, R, 2, allow_i=False)})
        b = DiffOperator(R, {1: rand_poly(rng, R, 2, allow_i=False),
                             3: rand_poly(rng, R, 2, allow_i=False)})
        p = rand_poly(rng, R, 2, allow_i=False)
        assert a.compose(b).apply(p) == a.apply(b.apply(p))


def test_operator_matrix_compose():
    rng = random.Random(44)
    R = RingContext(n_vars=2, eta=[[0, 1], [1, 0]])
    ops = {}
    for mu in (1, 2):
        for nu in (1, 2):
            ops[(mu, nu)] = DiffOperator(
                R, {rng.randint(0, 2): rand_poly(rng, R, 2, allow_i=False)})
    A = HamiltonianOperator(R, ops)
    B = HamiltonianOperator.standard(R)
    vec = {1: rand_poly(rng, R, 2, allow_i=False),
           2: rand_poly(rng, R, 2, allow_i=False)}
    lhs = A.compose(B).apply(vec)
    step = B.apply(vec)
    rhs = A.apply(step)
    for mu in (1, 2):
        assert lhs.get(mu, R.zero()) == rhs.get(mu, R.zero())


# ---------------------------------------------------------------------------
# classical bracket


def test_cubic_flow_values():
    R = kdv_ring()
    u, u1, u2, u3, u5 = R.u(), R.u(1, 1), R.u(1, 2), R.u(1, 3), R.u(1, 5)
    H = integrate(kdv_chain(R))
    g0 = u * u / 2 + R.monomial(Q(1, 24), eps=2) * u2
    flow = poisson_local(g0, H)
    assert flow == (u * u * u1
                    + R.monomial(Q(1, 8), eps=2) * (u * u3 + u1 * u2)
                    + R.monomial(Q(1, 288), eps=4) * u5)
    g1 = d_minus_one_inverse(dx_inverse(flow))
    assert g1 == (u ** 3 / 6 + R.monomial(Q(1, 24), eps=2) * u * u2
                  + R.monomial(Q(1, 1152), eps=4) * R.u(1, 4))


def test_bracket_is_class_invariant_in_g():
    rng = random.Random(45)
    R = kdv_ring()
    for _ in range(10):
        f = rand_poly(rng, R, allow_i=False)
        g = rand_poly(rng, R, allow_i=False)
        extra = dx(rand_poly(rng, R, allow_i=False)) + R.one() * 3
        assert poisson_local(f, integrate(g)) == \
            poisson_local(f, integrate(g + extra))


def test_bracket_leibniz_in_density_slot():
    rng = random.Random(46)
    R = kdv_ring()
    for _ in range(10):
        f = rand_poly(rng, R, 3, allow_i=False)
        g = rand_poly(rng, R, 3, allow_i=False)
        h = integrate(rand_poly(rng, R, 3, allow_i=False))
        assert poisson_local(f * g, h) == \
            f * poisson_local(g, h) + poisson_local(f, h) * g


def test_functional_bracket_antisymmetry():
    rng = random.Random(47)
    R = RingContext(n_vars=2, eta=[[2, 1], [1, 1]])
    for _ in range(8):
        F = integrate(rand_poly(rng, R, 3, allow_i=False))
        G = integrate(rand_poly(rng, R, 3, allow_i=False))
        assert (poisson(F, G) + poisson(G, F)).is_zero()


def test_functional_bracket_jacobi():
    rng = random.Random(48)
    R = kdv_ring()
    for _ in range(4):
        F = integrate(rand_poly(rng, R, 2, max_k=2, allow_i=False))
        G = integrate(rand_poly(rng, R, 2, max_k=2, allow_i=False))
        H = integrate(rand_poly(rng, R, 2, max_k=2, allow_i=False))
        s = poisson(poisson(F, G), H) + poisson(poisson(G, H), F) \
            + poisson(poisson(H, F), G)
        assert s.is_zero()


def test_classical_degree_shift():
    R = kdv_ring()
    u = R.u()
    f = u * R.u(1, 2)           # degree 2
    G = integrate(u ** 3)       # degree 0
    out = poisson_local(f, G)
    assert not out.is_zero()
    assert out.degree() == 3    # deg f + deg G + 1


# ---------------------------------------------------------------------------
# quantum bracket


def quantum_kdv(R):
    u, u2 = R.u(), R.u(1, 2)
    return (u ** 3 / 6 + R.monomial(Q(1, 24), eps=2) * u * u2
            + R.monomial((0, Q(-1, 24)), hbar=1) * u)


def test_star_requires_quantum_ring():
    R = kdv_ring()
    with pytest.raises(ModeMismatch):
        star_commutator_local(R.u(), integrate(R.u() ** 2))


def test_order_one_star_is_poisson():
    R = RingContext(n_vars=1, mode="quantum")
    u = R.u()
    out = star_commutator_local(u, integrate(u * u / 2))
    assert out == R.monomial(1, hbar=1) * R.u(1, 1)


def test_quantum_recursion_step_matches_table():
    R = RingContext(n_vars=1, mode="quantum")
    u, u2, u4 = R.u(), R.u(1, 2), R.u(1, 4)
    H = integrate(quantum_kdv(R))
    G0 = (u * u / 2 + R.monomial(Q(1, 24), eps=2) * u2
          + R.monomial((0, Q(-1, 24)), hbar=1))
    b = star_commutator_local(G0, H).divide_hbar()
    G1 = d_minus_one_inverse(dx_inverse(b))
    expected = (u ** 3 / 6 + R.monomial(Q(1, 24), eps=2) * u * u2
                + R.monomial(Q(1, 1152), eps=4) * u4
                + R.monomial((0, Q(-1, 24)), hbar=1) * (u + u2))
    assert G1 == expected


def test_classical_limit_of_star():
    # the order-hbar part of the commutator is the Poisson bracket of the
    # hbar-free parts
    rng = random.Random(49)
    R = RingContext(n_vars=1, mode="quantum")
    for _ in range(8):
        f = rand_poly(rng, R, 3)
        g = rand_poly(rng, R, 3)
        lim = star_commutator_local(f, integrate(g)).divide_hbar().hbar_zero()
        want = poisson_local(f.hbar_zero(), integrate(g.hbar_zero()))
        assert lim == want


def test_star_functional_antisymmetry():
    rng = random.Random(50)
    R = RingContext(n_vars=2, eta=[[0, 1], [1, 0]], mode="quantum")
    for _ in range(6):
        F = integrate(rand_poly(rng, R, 3).truncate_u(3))
        G = integrate(rand_poly(rng, R, 3).truncate_u(3))
        assert (star_commutator(F, G) + star_commutator(G, F)).is_zero()


def test_star_top_degree():
    R = RingContext(n_vars=1, mode="quantum")
    u = R.u()
    f = u * R.u(1, 2)     # degree 2
    G = integrate(u ** 3)  # degree 0
    out = star_commutator_local(f, G)
    assert not out.is_zero()
    assert out.top_degree() == 1  # deg f + deg G - 1


def test_multivariable_star_order_one():
    R = RingContext(n_vars=2, eta=[[0, 1], [1, 0]], mode="quantum")
    u1 = R.u(1)
    out = star_commutator_local(u1, integrate(u1 * R.u(2)))
    assert out == R.monomial(1, hbar=1) * R.u(1, 1)
