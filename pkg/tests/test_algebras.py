"""Equivariant algebras: constructions and their exact invariants."""

from fractions import Fraction as Fr

import pytest

from gkcalc.algebras import (AlgebraError, GAlgebra, base_field_algebra,
                             check_hom, crossed_product, direct_sum,
                             extend_scalars, fixed_point_algebra,
                             group_algebra, identity_hom, make_algebra,
                             matrix_algebra, restrict_scalars, tensor,
                             unitize, zero_algebra)
from gkcalc.catalog import nilpotent_line, quadratik_corpus, swap_algebra
from gkcalc.fields import GAUSSIAN, RATIONAL as Q
from gkcalc.groups import cyclic_group, symmetric_group_3, trivial_group
from gkcalc.linalg import SMat, inverse

z2 = cyclic_group(2)


def test_is_quadratik_basic():
    assert base_field_algebra(Q).is_quadratik()          # A = A . 1
    assert not nilpotent_line(Q).is_quadratik()          # x^2 = 0
    assert matrix_algebra(base_field_algebra(Q), 2).is_quadratik()


def test_unitize():
    n = nilpotent_line(Q)
    nu = unitize(n).validate()
    assert nu.dim == 2 and nu.unit is not None and nu.is_quadratik()
    # unitize(0) is a field copy
    z0 = unitize(zero_algebra(Q)).validate()
    assert z0.dim == 1 and z0.is_quadratik()
    m2u = unitize(matrix_algebra(base_field_algebra(Q), 2)).validate()
    assert m2u.dim == 5
    # the adjoined unit differs from the matrix unit
    assert m2u.unit != tuple(list(m2u.basis_vec(0))[:4]) + (Q.zero,)


def test_matrix_algebra_trivial_and_twisted():
    a = base_field_algebra(Q, z2)
    m1 = matrix_algebra(a, 1)
    assert m1.dim == 1
    m2 = matrix_algebra(a, 2).validate()
    assert m2.dim == 4 and m2.has_trivial_action()
    # twisted: Q^2 with swap, module actions (alpha, alpha) still validate
    sw = swap_algebra(Q)
    ms = matrix_algebra(sw, 2, module_actions=[list(sw.action), list(sw.action)])
    ms.validate()


def test_matrix_algebra_invalid_action():
    a = base_field_algebra(Q, z2)
    bad = [SMat.from_rows([[Fr(1), Fr(0)], [Fr(0), Fr(1)]], Q)]
    with pytest.raises(AlgebraError) as err:
        matrix_algebra(a, 2, module_actions=[bad * 2, bad * 2])
    assert err.value.code == "INVALID_ACTION"


def test_tensor_unit_and_kronecker():
    a = base_field_algebra(Q)
    m2 = matrix_algebra(a, 2)
    t = tensor(a, m2)
    # Q (x) A ~ A via the canonical identification
    iso = check_hom(SMat.identity(4, Q), t, m2)
    assert iso.is_bijective()
    t2 = tensor(m2, m2)
    assert t2.dim == 16
    # explicit Kronecker-index isomorphism onto M4
    m4 = matrix_algebra(a, 4)
    mat = SMat(16, 16, Q)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    src = (i * 2 + j) * 4 + (k * 2 + l)
                    dst = (i * 2 + k) * 4 + (j * 2 + l)
                    mat.data[(dst, src)] = Q.one
    iso2 = check_hom(mat, t2, m4)
    assert iso2.is_bijective()


def test_tensor_field_mismatch():
    with pytest.raises(AlgebraError) as err:
        tensor(base_field_algebra(Q), base_field_algebra(GAUSSIAN))
    assert err.value.code == "FIELD_MISMATCH"


def test_crossed_product_convolution():
    # A = Q trivial action, G = Z/2: idempotents (1 x| e +- 1 x| g)/2
    cp = crossed_product(base_field_algebra(Q, z2)).validate()
    assert cp.dim == 2
    e_plus = (Fr(1, 2), Fr(1, 2))
    e_minus = (Fr(1, 2), Fr(-1, 2))
    assert cp.mul_vec(e_plus, e_plus) == e_plus
    assert cp.mul_vec(e_minus, e_minus) == e_minus
    assert cp.mul_vec(e_plus, e_minus) == (Q.zero, Q.zero)
    # A = Q, G trivial: A itself
    cpt = crossed_product(base_field_algebra(Q))
    assert cpt.dim == 1
    # A = Q^2 swap: crossed product isomorphic to M2(Q)
    sw = swap_algebra(Q)
    cps = crossed_product(sw).validate()
    assert cps.dim == 4 and cps.is_quadratik()
    m2 = matrix_algebra(base_field_algebra(Q, z2), 2)
    # matrix units: E11 = (e1, 0), E22 = (e2, 0), E12 = (0, e1 x g)...
    cols = []
    for unit in ([1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]):
        cols.append(tuple(Fr(u) for u in unit))
    # basis of cps: (g-major, a-minor): (e,d1),(e,d2),(g,d1),(g,d2)
    # E11=(e,d1), E12=(g,d1), E21=(g,d2), E22=(e,d2)
    mat = SMat(4, 4, Q)
    mapping = {0: 0, 3: 1, 1: 2, 2: 3}
    # target basis ordering of m2: (i,j,scalar) lex: E11,E12,E21,E22
    src_of = {0: (0), 1: (3), 2: (1), 3: (2)}
    m = SMat(4, 4, Q)
    m.data[(0, 0)] = Q.one   # E11 <- (e,d1)
    m.data[(3, 1)] = Q.one   # E22 <- (e,d2)
    m.data[(1, 2)] = Q.one   # E12 <- (g,d1)
    m.data[(2, 3)] = Q.one   # E21 <- (g,d2)
    iso = check_hom(m, cps, m2, require_equivariant=False)
    assert iso.is_bijective()


def test_fixed_point_algebra():
    a = base_field_algebra(Q, z2)
    fx, inc = fixed_point_algebra(a)
    assert fx.dim == 1                        # trivial action: everything fixed
    sw = swap_algebra(Q)
    fx2, inc2 = fixed_point_algebra(sw)
    assert fx2.dim == 1                        # the diagonal
    # (Q (x) K)^(triv (x) rho) for G = Z/2 has dimension 2
    from gkcalc.greenjulg import RegularModule, KAlgebra
    reg = RegularModule(z2, Q)
    k = KAlgebra(reg).algebra
    fx3, _ = fixed_point_algebra(k)
    assert fx3.dim == 2


def test_check_hom_errors():
    a = base_field_algebra(Q, z2)
    m2 = matrix_algebra(a, 2)
    good = SMat(4, 1, Q, {(0, 0): Q.one})      # 1 -> E11
    h = check_hom(good, a, m2)
    assert h.equivariant
    bad = SMat(4, 1, Q, {(1, 0): Q.one})       # 1 -> E12: not multiplicative
    with pytest.raises(AlgebraError) as err:
        check_hom(bad, a, m2)
    assert err.value.code == "NOT_MULTIPLICATIVE"
    sw = swap_algebra(Q)
    swap_map = SMat.from_rows([[Fr(0), Fr(1)], [Fr(1), Fr(0)]], Q)
    hs = check_hom(swap_map, sw, sw)
    assert hs.equivariant


def test_extend_restrict_scalars():
    m2 = matrix_algebra(base_field_algebra(Q), 2)
    up = extend_scalars(m2, GAUSSIAN)
    assert up.dim == m2.dim and up.field.tag == "Qi"
    down = restrict_scalars(up).validate()
    assert down.dim == 2 * m2.dim
    assert down.is_quadratik()


def test_crossed_product_preserves_quadratik_on_corpus():
    for a in quadratik_corpus(Q, seed=7, count=6):
        cp = crossed_product(a)
        assert cp.is_quadratik(), a.label


def test_associativity_battery_on_corpus():
    for a in quadratik_corpus(Q, seed=3, count=4):
        a.validate()
