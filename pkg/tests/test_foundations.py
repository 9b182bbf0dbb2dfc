"""Fields, linear algebra and groups."""

from fractions import Fraction as Fr

import pytest

from gkcalc.fields import Field, GAUSSIAN, RATIONAL, prime_field
from gkcalc.groups import (GroupError, cyclic_group, klein_four, make_group,
                           symmetric_group_3, trivial_group)
from gkcalc.linalg import (CoordBasis, Quotient, SMat, SpanBasis, inverse,
                           kernel_basis, rank, solve, span_basis)


def test_scalar_fields_roundtrip():
    for tag, samples in [("Q", ["3/4", "-2", "0"]),
                         ("Qi", ["1/2+-3/4*i", "0+1*i", "5+0*i"]),
                         ("Fp:7", ["3", "6", "0"])]:
        f = Field(tag)
        for s in samples:
            assert f.show(f.parse(s)) == f.show(f.parse(f.show(f.parse(s))))


def test_gaussian_arithmetic():
    f = GAUSSIAN
    i = f.i()
    assert i * i == f.from_int(-1)
    assert f.show((f.one + i) / (f.one - i)) == "0+1*i"


def test_prime_field_division():
    f = prime_field(5)
    assert f.show(f.from_int(3) / f.from_int(2)) == "4"
    with pytest.raises(ValueError):
        Field("Fp:6")


def test_rank_kernel_solve():
    f = RATIONAL
    a = SMat.from_rows([[Fr(1), Fr(2), Fr(3)], [Fr(2), Fr(4), Fr(6)]], f)
    assert rank(a) == 1
    kb = kernel_basis(a)
    assert len(kb) == 2
    for v in kb:
        assert not any(a.apply(v))
    b = SMat.from_rows([[Fr(2), Fr(1)], [Fr(1), Fr(1)]], f)
    assert inverse(b) @ b == SMat.identity(2, f)
    x = solve(b, (Fr(3), Fr(2)))
    assert b.apply(x) == (Fr(3), Fr(2))


def test_span_coords_and_quotient():
    f = RATIONAL
    sb = SpanBasis(3, f, track=True)
    sb.add((Fr(1), Fr(1), Fr(0)))
    sb.add((Fr(0), Fr(1), Fr(1)))
    c = sb.coords((Fr(2), Fr(3), Fr(1)))
    assert c == {0: Fr(2), 1: Fr(1)}
    assert sb.coords((Fr(0), Fr(0), Fr(1))) is None
    sub = span_basis([(Fr(1), Fr(-1), Fr(0))], 3, f)
    q = Quotient(sub, 3, f)
    assert q.dim == 2
    assert q.push((Fr(1), Fr(-1), Fr(0))) == (Fr(0), Fr(0))
    assert q.proj @ q.lift == SMat.identity(2, f)


def test_coord_basis_positions():
    f = RATIONAL
    cb = CoordBasis(2, f)
    assert cb.try_add((Fr(1), Fr(0)))
    assert not cb.try_add((Fr(2), Fr(0)))      # dependent, skipped
    assert cb.try_add((Fr(0), Fr(1)))
    assert cb.coords_vec((Fr(3), Fr(5))) == (Fr(3), Fr(5))


def test_group_table_validation():
    make_group(((0,),))
    z2 = make_group(((0, 1), (1, 0)))
    assert z2.order == 2 and z2.inv == (0, 1)
    s3 = symmetric_group_3()
    assert s3.order == 6 and not s3.is_abelian()
    # brute-force associativity for the full 6x6 table
    for a in range(6):
        for b in range(6):
            for c in range(6):
                assert s3.mul(s3.mul(a, b), c) == s3.mul(a, s3.mul(b, c))
    with pytest.raises(GroupError) as err:
        make_group(((0, 1), (1, 1)))
    assert err.value.code in ("NO_IDENTITY", "NO_INVERSE", "NOT_ASSOCIATIVE")


def test_group_errors():
    with pytest.raises(GroupError) as e1:
        make_group(((1, 0), (0, 1)))             # no identity law
    assert e1.value.code in ("NO_IDENTITY", "NOT_ASSOCIATIVE")
    # closed but non-associative table with identity
    t = ((0, 1, 2), (1, 2, 2), (2, 2, 1))
    with pytest.raises(GroupError):
        make_group(t)


def test_subgroup_and_cosets():
    z4 = cyclic_group(4)
    h, emb = z4.subgroup([0, 2])
    assert h.order == 2 and emb == [0, 2]
    reps, decomp = z4.cosets(emb)
    assert len(reps) == 2
    for g in range(4):
        c, hi = decomp[g]
        assert z4.mul(reps[c], emb[hi]) == g
    with pytest.raises(GroupError):
        z4.subgroup([0, 1, 2])


def test_klein_four():
    k4 = klein_four()
    assert k4.order == 4 and k4.is_abelian()
    assert all(k4.mul(g, g) == k4.identity for g in k4.elements())
