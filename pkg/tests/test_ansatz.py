"""Ansatz-space enumeration and the DR-type constraint solver."""

import math

import pytest

from loophier.rat import Q, bernoulli
from loophier.errors import Inconsistent
from loophier.ring import RingContext, TruncationWindow, parse
from loophier.functionals import LocalFunctional, reduce_density
from loophier.recursion import HierarchySpec, generate, verify_commutativity
from loophier.ansatz import (AnsatzProblem, monomial_basis, solve_dr_type,
                             _LinearSystem)
from loophier.coeffs import CONE, is_czero


def qring(gc):
    return RingContext(mode="quantum",
                       window=TruncationWindow(genus_cutoff=gc))


def cring(gc):
    return RingContext(mode="classical",
                       window=TruncationWindow(genus_cutoff=gc))


def cubic(ring):
    return ring.monomial(Q(1, 6), factors=((1, 0, 3),))


def genus_one_row(ring, s1):
    """Scalar genus-one correction of the known one-parameter family."""
    return (ring.monomial(Q(-1, 24), eps=2, factors=((1, 1, 2),))
            + ring.monomial((Q(0), -Q(s1) / 2), hbar=1, factors=((1, 1, 2),))
            + ring.monomial((Q(0), Q(-1, 24)), hbar=1, factors=((1, 0, 1),)))


def genus_two_row(ring, s1, s2):
    """Scalar genus-two correction: the three u_2^2 sector coefficients."""
    s1, s2 = Q(s1), Q(s2)
    return (ring.monomial(-s1 / 120, eps=4, factors=((1, 2, 2),))
            + ring.monomial((Q(0), -s1 * s1 / 10), eps=2, hbar=1,
                            factors=((1, 2, 2),))
            + ring.monomial((24 * s1 ** 3 + 5 * s2) / 60, hbar=2,
                            factors=((1, 2, 2),)))


def coeff_of(f, eps, hbar, factors):
    return f.terms.get((eps, hbar, (), factors), (Q(0), Q(0)))


# -- monomial_basis ----------------------------------------------------------

def test_basis_genus_one_classical_collapses_ibp():
    basis = monomial_basis(cring(2), 1, 2)
    assert [b.terms for b in basis] == [{(2, 0, (), ((1, 1, 2),)): CONE}]


def test_basis_genus_one_quantum_has_hbar_sector():
    keys = [next(iter(b.terms)) for b in monomial_basis(qring(2), 1, 2)]
    assert (2, 0, (), ((1, 1, 2),)) in keys
    assert (0, 1, (), ((1, 1, 2),)) in keys
    assert (0, 1, (), ((1, 0, 1),)) in keys
    assert all(e + 2 * h == 2 for e, h, _, _ in keys)


def test_basis_genus_zero_cubic_sector():
    keys = [next(iter(b.terms)) for b in monomial_basis(cring(0), 0, 3)]
    assert keys == [(0, 0, (), ((1, 0, 1),)),
                    (0, 0, (), ((1, 0, 2),)),
                    (0, 0, (), ((1, 0, 3),))]


def test_basis_empty_when_bound_excludes_everything():
    assert monomial_basis(cring(2), 1, 1) == []


def test_basis_two_component_counts():
    ring = RingContext(n_vars=2, mode="classical",
                       window=TruncationWindow(genus_cutoff=2))
    basis = monomial_basis(ring, 1, 2)
    assert len(basis) == 3
    for b in basis:
        (_, _, _, fac), = b.terms
        assert sum(k * p for _, k, p in fac) == 2


def test_basis_rejects_bad_arguments():
    with pytest.raises(ValueError):
        monomial_basis(cring(0), -1, 2)
    with pytest.raises(ValueError):
        monomial_basis(cring(0), 0, 0)


# -- genus zero --------------------------------------------------------------

def test_genus_zero_classical_is_cubic():
    sol = solve_dr_type(AnsatzProblem(cring(0), None, 0))
    assert sol.dimension() == 0
    assert sol.genus_part().terms == cubic(cring(0)).terms


def test_genus_zero_quantum_linear_gauge():
    ring = qring(0)
    sol = solve_dr_type(AnsatzProblem(ring, None, 0))
    assert sol.dimension() == 1
    assert sol.genus_part().terms == cubic(ring).terms
    assert sol._direction(0).terms == ring.u().terms


# -- genus one ---------------------------------------------------------------

def test_genus_one_quantum_family():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    assert sol.dimension() == 2
    tail = ((1, 0, 1),)
    assert coeff_of(sol.genus_part(), 0, 1, tail) == (Q(0), Q(-1, 24))
    for j in range(2):
        assert is_czero(coeff_of(sol._direction(j), 0, 1, tail))
    fixed = sol.pin(ring.monomial(CONE, eps=2, factors=((1, 1, 2),)),
                    Q(-1, 24))
    assert fixed.dimension() == 1
    point = fixed.genus_part()
    assert coeff_of(point, 2, 0, ((1, 1, 2),)) == (Q(-1, 24), Q(0))
    assert coeff_of(point, 0, 1, tail) == (Q(0), Q(-1, 24))
    assert fixed._direction(0).terms == \
        ring.monomial(CONE, hbar=1, factors=((1, 1, 2),)).terms


def test_genus_one_quantum_contains_family_members():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    fixed = sol.pin(ring.monomial(CONE, eps=2, factors=((1, 1, 2),)),
                    Q(-1, 24))
    for s1 in (Q(0), Q(1), Q(-2, 5)):
        target = genus_one_row(ring, s1)
        vals = fixed.contains(target)
        assert vals is not None
        assert (fixed.genus_part(vals) - target).is_zero()
    off_family = genus_one_row(ring, 1) + ring.monomial(
        (Q(0), Q(1)), hbar=1, factors=((1, 0, 1),))
    assert fixed.contains(off_family) is None


def test_genus_one_classical_family():
    ring = cring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    assert sol.dimension() == 1
    assert sol.genus_part().is_zero()
    assert sol._direction(0).terms == \
        ring.monomial(CONE, eps=2, factors=((1, 1, 2),)).terms
    fixed = sol.pin(ring.monomial(CONE, eps=2, factors=((1, 1, 2),)),
                    Q(-1, 24))
    assert fixed.dimension() == 0
    assert fixed.genus_part().terms == \
        ring.monomial(Q(-1, 24), eps=2, factors=((1, 1, 2),)).terms


# -- genus two ---------------------------------------------------------------

def test_genus_two_quantum_family():
    ring = qring(4)
    s1 = Q(1, 3)
    known = cubic(ring) + genus_one_row(ring, s1)
    sol = solve_dr_type(AnsatzProblem(ring, known, 2))
    assert sol.dimension() == 3
    fixed = sol.pin(ring.monomial(CONE, eps=4, factors=((1, 2, 2),)),
                    -s1 / 120)
    assert fixed.dimension() == 2
    for s2 in (Q(0), Q(2, 7)):
        target = genus_two_row(ring, s1, s2)
        vals = fixed.contains(target)
        assert vals is not None
        assert (fixed.genus_part(vals) - target).is_zero()


def test_genus_two_dimension_stable_in_depth():
    ring = qring(4)
    known = cubic(ring) + genus_one_row(ring, Q(1, 3))
    for d in (2, 3):
        sol = solve_dr_type(AnsatzProblem(ring, known, 2, d_check=d))
        assert sol.dimension() == 3


def test_genus_two_classical_family():
    ring = cring(4)
    known = cubic(ring) + ring.monomial(Q(-1, 24), eps=2,
                                        factors=((1, 1, 2),))
    sol = solve_dr_type(AnsatzProblem(ring, known, 2))
    assert sol.dimension() == 1
    assert sol.genus_part().is_zero()
    assert sol._direction(0).terms == \
        ring.monomial(CONE, eps=4, factors=((1, 2, 2),)).terms


# -- soundness and completeness ---------------------------------------------

def test_sampled_point_generates_commuting_hierarchy():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    dens = sol.density([Q(1, 5), (Q(0), Q(-2, 3))])
    h = generate(HierarchySpec("sample", ring, dens), 3,
                 constants_policy="zero")
    pairs = [((1, i), (1, j)) for i in range(4) for j in range(i + 1, 4)]
    assert all(ok for _, _, ok in verify_commutativity(h, pairs))
    assert h.functional(1, 1) == LocalFunctional(dens)


def test_contains_known_cubic_hierarchy_row():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    row = (ring.monomial(Q(1, 24), eps=2, factors=((1, 0, 1), (1, 2, 1)))
           + ring.monomial((Q(0), Q(-1, 24)), hbar=1, factors=((1, 0, 1),)))
    vals = sol.contains(row)
    assert vals is not None
    assert reduce_density(sol.genus_part(vals) - row).is_zero()


def test_contains_mu_one_deformation_rows():
    ring = qring(4)
    b2 = abs(bernoulli(2)) / (2 * math.factorial(2))
    b4 = abs(bernoulli(4)) / (2 * math.factorial(4))
    uu2 = ((1, 0, 1), (1, 2, 1))
    uu4 = ((1, 0, 1), (1, 4, 1))
    g1 = (ring.monomial(b2, eps=2, factors=uu2)
          + ring.monomial((Q(0), -b2), hbar=1, factors=uu2)
          + ring.monomial((Q(0), Q(-1, 24)), hbar=1, factors=((1, 0, 1),)))
    sol1 = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    vals = sol1.contains(g1)
    assert vals is not None
    assert reduce_density(sol1.genus_part(vals) - g1).is_zero()

    s1 = Q(-1, 12)
    known = cubic(ring) + genus_one_row(ring, s1)
    sol2 = solve_dr_type(AnsatzProblem(ring, known, 2))
    g2 = (ring.monomial(b4, eps=4, factors=uu4)
          + ring.monomial((Q(0), -b4), eps=2, hbar=1, factors=uu4))
    vals = sol2.contains(g2)
    assert vals is not None
    assert reduce_density(sol2.genus_part(vals) - g2).is_zero()
    matched = genus_two_row(ring, s1, Q(1, 360))
    assert reduce_density(matched - g2).is_zero()


# -- failure modes and plumbing ---------------------------------------------

def test_inconsistent_known_part():
    ring = qring(2)
    quartic = ring.monomial(Q(1, 24), factors=((1, 0, 4),))
    with pytest.raises(Inconsistent):
        solve_dr_type(AnsatzProblem(ring, quartic, 1, d_check=2))


def test_inconsistent_genus_one_slice():
    ring = qring(4)
    bad = cubic(ring) + genus_one_row(ring, 0) + ring.monomial(
        (Q(0), Q(1, 7)), hbar=1, factors=((1, 0, 1),))
    with pytest.raises(Inconsistent):
        solve_dr_type(AnsatzProblem(ring, bad, 2))


def test_pin_unreachable_value():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    with pytest.raises(Inconsistent):
        sol.pin(ring.monomial(CONE, hbar=1, factors=((1, 0, 1),)),
                (Q(0), Q(-1, 7)))


def test_pin_rejects_non_basis_monomial():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    with pytest.raises(ValueError):
        sol.pin(ring.monomial(CONE, eps=2, factors=((1, 3, 2),)), Q(1))
    with pytest.raises(ValueError):
        sol.pin(ring.monomial(Q(2), eps=2, factors=((1, 1, 2),)), Q(1))


def test_pins_chain():
    ring = qring(4)
    known = cubic(ring) + genus_one_row(ring, Q(1, 3))
    sol = solve_dr_type(AnsatzProblem(ring, known, 2))
    fixed = sol.pin(ring.monomial(CONE, eps=4, factors=((1, 2, 2),)), Q(0))
    fixed = fixed.pin(ring.monomial(CONE, hbar=2, factors=((1, 2, 2),)),
                      Q(1, 2))
    assert fixed.dimension() == 1
    point = fixed.genus_part()
    assert is_czero(coeff_of(point, 4, 0, ((1, 2, 2),)))
    assert coeff_of(point, 0, 2, ((1, 2, 2),)) == (Q(1, 2), Q(0))


def test_linear_system_rejects_quadratic_unknowns():
    ring = RingContext(params=("_c1",), mode="classical")
    sys = _LinearSystem(("_c1",))
    square = ring.param("_c1") * ring.param("_c1") * ring.u()
    with pytest.raises(AssertionError):
        sys.take(("probe",), square)


def test_solution_values_validation():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    with pytest.raises(ValueError):
        sol.coefficients([Q(1), Q(2), Q(3)])


def test_serialize_roundtrip():
    ring = qring(2)
    sol = solve_dr_type(AnsatzProblem(ring, cubic(ring), 1, d_check=2))
    doc = sol.serialize()
    assert doc["genus"] == 1 and doc["d_check"] == 2
    assert doc["dimension"] == 2 == len(doc["kernel_generators"])
    assert parse(doc["basis_point"], ring).terms == sol.genus_part().terms
    backs = [parse(d, ring) for d in doc["kernel_generators"]]
    assert [b.terms for b in backs] == \
        [sol._direction(j).terms for j in range(2)]
