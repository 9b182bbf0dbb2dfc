"""Finite-dimensional equivariant algebras over exact fields.

A GAlgebra is a structure-constant algebra with a finite-group action by
algebra automorphisms.  Structure constants are stored sparsely; large
internally-constructed algebras may instead carry a "realized" backend
that computes basis products on demand from a faithful representation.
"""

from __future__ import annotations

import hashlib
import itertools

from .fields import Field
from .groups import FiniteGroup, trivial_group
from . import linalg
from .linalg import SMat, SpanBasis


class AlgebraError(ValueError):
    def __init__(self, code, msg=""):
        super().__init__(msg or code)
        self.code = code


_obj_counter = itertools.count()


class GAlgebra:
    """Associative algebra with G-action, given on a distinguished basis."""

    def __init__(self, field: Field, group: FiniteGroup, dim: int, *,
                 table=None, realized=None, pairfn=None, action=None, unit=None,
                 label="", quadratik_hint=None):
        if sum(x is not None for x in (table, realized, pairfn)) != 1:
            raise ValueError("exactly one of table/realized/pairfn required")
        self.field = field
        self.group = group
        self.dim = dim
        self._table = table              # table[i][j] = ((k, c), ...)
        self._realized = realized        # (objs, mulfn, vecfn, ncols)
        self._pairfn = pairfn            # (i, j) -> ((k, c), ...)
        self._paircache = {}
        self.action = tuple(action) if action is not None else tuple(
            SMat.identity(dim, field) for _ in range(group.order))
        self.unit = unit
        self.label = label or f"A{dim}"
        self._quadratik = quadratik_hint
        self._left = {}
        self._right = {}
        self._span = None
        if realized is not None:
            objs, mulfn, vecfn, ncols = realized
            self._span = SpanBasis(ncols, field, track=True)
            for o in objs:
                if not self._span.add(vecfn(o)):
                    raise AlgebraError("NOT_ASSOCIATIVE", "realization basis is dependent")
        n = next(_obj_counter)
        if table is not None:
            h = hashlib.sha1()
            h.update(repr((field.tag, group.mult, dim, label)).encode())
            for i in range(dim):
                for j in range(dim):
                    h.update(repr([(k, field.show(c)) for k, c in table[i][j]]).encode())
            for m in self.action:
                h.update(repr(m.key()).encode())
            self.digest = h.hexdigest()[:16]
        else:
            self.digest = f"realized-{n:06d}"

    # --- products ---

    def mul_pair(self, i, j):
        """Sparse product of basis elements: tuple of (k, coeff)."""
        if self._table is not None:
            return self._table[i][j]
        got = self._paircache.get((i, j))
        if got is not None:
            return got
        if self._pairfn is not None:
            out = tuple(self._pairfn(i, j))
        else:
            objs, mulfn, vecfn, ncols = self._realized
            prod = mulfn(objs[i], objs[j])
            coords = self._span.coords(vecfn(prod))
            if coords is None:
                raise AlgebraError("NOT_ASSOCIATIVE", "realization not multiplicatively closed")
            out = tuple(sorted(coords.items()))
        self._paircache[(i, j)] = out
        return out

    def mul_vec(self, x, y):
        field = self.field
        acc = {}
        for i, xi in enumerate(x):
            if not xi:
                continue
            for j, yj in enumerate(y):
                if not yj:
                    continue
                c = xi * yj
                for k, s in self.mul_pair(i, j):
                    w = acc.get(k)
                    t = c * s if w is None else w + c * s
                    acc[k] = t
        return tuple(acc.get(k, field.zero) for k in range(self.dim))

    def basis_vec(self, i):
        return linalg.unit_vec(i, self.dim, self.field)

    def left_mult(self, x) -> SMat:
        """Matrix of left multiplication by the element x (tuple)."""
        key = tuple(x)
        got = self._left.get(key)
        if got is not None:
            return got
        m = SMat(self.dim, self.dim, self.field)
        for i, xi in enumerate(x):
            if not xi:
                continue
            for j in range(self.dim):
                for k, s in self.mul_pair(i, j):
                    w = m.data.get((k, j))
                    t = xi * s if w is None else w + xi * s
                    if t:
                        m.data[(k, j)] = t
                    elif (k, j) in m.data:
                        del m.data[(k, j)]
        self._left[key] = m
        return m

    def right_mult(self, x) -> SMat:
        """Matrix of right multiplication by x."""
        key = tuple(x)
        got = self._right.get(key)
        if got is not None:
            return got
        m = SMat(self.dim, self.dim, self.field)
        for j, xj in enumerate(x):
            if not xj:
                continue
            for i in range(self.dim):
                for k, s in self.mul_pair(i, j):
                    w = m.data.get((k, i))
                    t = xj * s if w is None else w + xj * s
                    if t:
                        m.data[(k, i)] = t
                    elif (k, i) in m.data:
                        del m.data[(k, i)]
        self._right[key] = m
        return m

    def act(self, g) -> SMat:
        return self.action[g]

    def act_vec(self, g, x):
        return self.action[g].apply(x)

    # --- predicates ---

    def is_quadratik(self) -> bool:
        if self._quadratik is None:
            sb = SpanBasis(self.dim, self.field)
            for i in range(self.dim):
                for j in range(self.dim):
                    sb.add(dict(self.mul_pair(i, j)))
                    if sb.rank() == self.dim:
                        self._quadratik = True
                        return True
            self._quadratik = sb.rank() == self.dim
        return self._quadratik

    def is_unital(self):
        return self.unit is not None

    def has_trivial_action(self):
        ident = SMat.identity(self.dim, self.field)
        return all(m == ident for m in self.action)

    def validate(self):
        """Exact check of associativity, action and unit laws."""
        dim, field = self.dim, self.field
        for i in range(dim):
            for j in range(dim):
                p = self.mul_pair(i, j)
                for k in range(dim):
                    lhs = {}
                    for m, c in p:
                        for t, s in self.mul_pair(m, k):
                            lhs[t] = lhs.get(t, field.zero) + c * s
                    rhs = {}
                    for m, c in self.mul_pair(j, k):
                        for t, s in self.mul_pair(i, m):
                            rhs[t] = rhs.get(t, field.zero) + c * s
                    if {k2: v for k2, v in lhs.items() if v} != {k2: v for k2, v in rhs.items() if v}:
                        raise AlgebraError("NOT_ASSOCIATIVE", f"basis triple ({i},{j},{k})")
        e = self.group.identity
        if self.action[e] != SMat.identity(dim, field):
            raise AlgebraError("INVALID_ACTION", "identity does not act trivially")
        for g in self.group.elements():
            ag = self.action[g]
            if linalg.inverse(ag) is None:
                raise AlgebraError("INVALID_ACTION", f"action of {g} not invertible")
            for i in range(dim):
                for j in range(dim):
                    lhs = ag.apply(self.mul_vec(self.basis_vec(i), self.basis_vec(j)))
                    rhs = self.mul_vec(ag.col(i), ag.col(j))
                    if lhs != rhs:
                        raise AlgebraError("INVALID_ACTION", f"{g} is not multiplicative at ({i},{j})")
            for h in self.group.elements():
                if self.action[g] @ self.action[h] != self.action[self.group.mul(g, h)]:
                    raise AlgebraError("INVALID_ACTION", f"action not a homomorphism at ({g},{h})")
        if self.unit is not None:
            for i in range(dim):
                b = self.basis_vec(i)
                if self.mul_vec(self.unit, b) != b or self.mul_vec(b, self.unit) != b:
                    raise AlgebraError("INVALID_ACTION", "unit is not two-sided")
        return self

    def table(self):
        if self._table is not None:
            return self._table
        return tuple(tuple(self.mul_pair(i, j) for j in range(self.dim)) for i in range(self.dim))

    def __repr__(self):
        return f"GAlgebra({self.label}, dim={self.dim}, field={self.field.tag})"


class AlgebraHom:
    """Linear map between GAlgebras, validated multiplicative on demand."""

    def __init__(self, source: GAlgebra, target: GAlgebra, mat: SMat,
                 equivariant=True, label=""):
        self.source = source
        self.target = target
        self.mat = mat
        self.equivariant = equivariant
        self.label = label

    def __call__(self, vec):
        return self.mat.apply(vec)

    def then(self, other: "AlgebraHom") -> "AlgebraHom":
        if self.target is not other.source and self.target.digest != other.source.digest:
            raise AlgebraError("OBJECT_MISMATCH",
                               f"cannot compose {self.label or 'hom'} into {other.label or 'hom'}")
        return AlgebraHom(self.source, other.target, other.mat @ self.mat,
                          self.equivariant and other.equivariant,
                          label=f"{other.label or 'g'}∘{self.label or 'f'}")

    def is_identity(self):
        return (self.source.digest == self.target.digest
                and self.mat == SMat.identity(self.source.dim, self.source.field))

    def is_zero(self):
        return self.mat.is_zero()

    def is_injective(self):
        return linalg.is_injective(self.mat)

    def is_bijective(self):
        return self.mat.nrows == self.mat.ncols and linalg.inverse(self.mat) is not None

    def inverse_hom(self):
        inv = linalg.inverse(self.mat)
        if inv is None:
            raise AlgebraError("NOT_MULTIPLICATIVE", "hom is not invertible")
        return AlgebraHom(self.target, self.source, inv, self.equivariant,
                          label=f"{self.label}^-1")

    def key(self):
        return (self.source.digest, self.target.digest, self.mat.key())

    def __eq__(self, other):
        return isinstance(other, AlgebraHom) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"AlgebraHom({self.label or '?'}: {self.source.label} -> {self.target.label})"


def identity_hom(a: GAlgebra) -> AlgebraHom:
    return AlgebraHom(a, a, SMat.identity(a.dim, a.field), label=f"id_{a.label}")


def zero_hom(a: GAlgebra, b: GAlgebra) -> AlgebraHom:
    return AlgebraHom(a, b, SMat.zero(b.dim, a.dim, a.field), label="0")


def check_hom(mat: SMat, source: GAlgebra, target: GAlgebra,
              require_equivariant=True, label="") -> AlgebraHom:
    """Validate multiplicativity (and equivariance) of a candidate hom."""
    if source.field != target.field:
        raise AlgebraError("FIELD_MISMATCH")
    if mat.nrows != target.dim or mat.ncols != source.dim:
        raise AlgebraError("NOT_MULTIPLICATIVE", "matrix shape mismatch")
    for i in range(source.dim):
        fi = mat.col(i)
        for j in range(source.dim):
            lhs = mat.apply(source.mul_vec(source.basis_vec(i), source.basis_vec(j)))
            rhs = target.mul_vec(fi, mat.col(j))
            if lhs != rhs:
                raise AlgebraError("NOT_MULTIPLICATIVE", f"fails at basis pair ({i},{j})")
    equivariant = True
    if source.group.mult != target.group.mult:
        equivariant = False
        if require_equivariant:
            raise AlgebraError("NOT_EQUIVARIANT", "different symmetry groups")
    else:
        for g in source.group.elements():
            if mat @ source.act(g) != target.act(g) @ mat:
                equivariant = False
                if require_equivariant:
                    raise AlgebraError("NOT_EQUIVARIANT", f"fails at group element {g}")
                break
    return AlgebraHom(source, target, mat, equivariant, label=label)


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------

def make_algebra(field, group, structure, action=None, unit=None, label="",
                 validate=True) -> GAlgebra:
    """Build a GAlgebra from a dense rank-3 structure array.

    structure[i][j][k] is the coefficient of e_k in e_i * e_j.
    action is a list (per group element) of dim x dim matrices (rows).
    """
    dim = len(structure)
    table = tuple(
        tuple(tuple((k, c) for k, c in enumerate(structure[i][j]) if c) for j in range(dim))
        for i in range(dim)
    )
    acts = None
    if action is not None:
        acts = tuple(m if isinstance(m, SMat) else SMat.from_rows(m, field) for m in action)
    a = GAlgebra(field, group, dim, table=table, action=acts,
                 unit=tuple(unit) if unit is not None else None, label=label)
    if validate:
        a.validate()
    return a


def from_table(field, group, table, action=None, unit=None, label="",
               quadratik_hint=None) -> GAlgebra:
    return GAlgebra(field, group, len(table), table=table, action=action,
                    unit=unit, label=label, quadratik_hint=quadratik_hint)


def zero_algebra(field, group=None) -> GAlgebra:
    return GAlgebra(field, group or trivial_group(), 0, table=(), label="0")


def base_field_algebra(field, group=None, label=None) -> GAlgebra:
    g = group or trivial_group()
    one = field.one
    return GAlgebra(field, g, 1, table=((((0, one),),),),
                    unit=(one,), label=label or field.tag, quadratik_hint=True)


def unitize(a: GAlgebra) -> GAlgebra:
    """Adjoin a two-sided unit as the last basis element."""
    dim = a.dim
    field = a.field
    one = field.one
    table = []
    for i in range(dim + 1):
        row = []
        for j in range(dim + 1):
            if i < dim and j < dim:
                row.append(a.mul_pair(i, j))
            elif i == dim and j == dim:
                row.append(((dim, one),))
            elif i == dim:
                row.append(((j, one),))
            else:
                row.append(((i, one),))
        table.append(tuple(row))
    action = tuple(_extend_action(m, dim, field) for m in a.action)
    return GAlgebra(field, a.group, dim + 1, table=tuple(table), action=action,
                    unit=linalg.unit_vec(dim, dim + 1, field),
                    label=f"{a.label}+", quadratik_hint=True)


def _extend_action(m: SMat, dim, field) -> SMat:
    out = m.embed(dim + 1, dim + 1, 0, 0)
    out.data[(dim, dim)] = field.one
    return out


def direct_sum(a: GAlgebra, b: GAlgebra, label="") -> GAlgebra:
    if a.field != b.field:
        raise AlgebraError("FIELD_MISMATCH")
    if a.group.mult != b.group.mult:
        raise AlgebraError("OBJECT_MISMATCH", "different symmetry groups")
    dim = a.dim + b.dim
    table = []
    for i in range(dim):
        row = []
        for j in range(dim):
            if i < a.dim and j < a.dim:
                row.append(a.mul_pair(i, j))
            elif i >= a.dim and j >= a.dim:
                row.append(tuple((k + a.dim, c) for k, c in b.mul_pair(i - a.dim, j - a.dim)))
            else:
                row.append(())
        table.append(tuple(row))
    action = tuple(SMat.block_diag([a.act(g), b.act(g)]) for g in a.group.elements())
    unit = None
    if a.unit is not None and b.unit is not None:
        unit = tuple(a.unit) + tuple(b.unit)
    q = None
    if a._quadratik is not None and b._quadratik is not None:
        q = a._quadratik and b._quadratik
    return GAlgebra(a.field, a.group, dim, table=tuple(table), action=action,
                    unit=unit, label=label or f"{a.label}(+){b.label}", quadratik_hint=q)


def sum_inclusions(a, b, ab):
    """Canonical inclusion/projection homs for ab = direct_sum(a, b)."""
    f = a.field
    ia = AlgebraHom(a, ab, SMat.identity(a.dim, f).embed(ab.dim, a.dim, 0, 0), label="i_A")
    ib = AlgebraHom(b, ab, SMat.identity(b.dim, f).embed(ab.dim, b.dim, a.dim, 0), label="i_B")
    pa = AlgebraHom(ab, a, SMat.identity(a.dim, f).embed(a.dim, ab.dim, 0, 0), label="p_A")
    pb = AlgebraHom(ab, b, SMat.identity(b.dim, f).embed(b.dim, ab.dim, 0, a.dim), label="p_B")
    return ia, ib, pa, pb


def tensor(a: GAlgebra, b: GAlgebra, label="") -> GAlgebra:
    """Field-balanced tensor product with the diagonal G-action."""
    if a.field != b.field:
        raise AlgebraError("FIELD_MISMATCH")
    if a.group.mult != b.group.mult:
        raise AlgebraError("OBJECT_MISMATCH", "different symmetry groups")
    dim = a.dim * b.dim
    idx = lambda i, j: i * b.dim + j
    table = []
    for i1 in range(a.dim):
        for j1 in range(b.dim):
            row = []
            for i2 in range(a.dim):
                for j2 in range(b.dim):
                    ent = []
                    for k1, c1 in a.mul_pair(i1, i2):
                        for k2, c2 in b.mul_pair(j1, j2):
                            ent.append((idx(k1, k2), c1 * c2))
                    row.append(tuple(sorted(ent)))
            table.append(tuple(row))
    action = tuple(a.act(g).kron(b.act(g)) for g in a.group.elements())
    unit = None
    if a.unit is not None and b.unit is not None:
        u = [a.field.zero] * dim
        for i, x in enumerate(a.unit):
            for j, y in enumerate(b.unit):
                u[idx(i, j)] = x * y
        unit = tuple(u)
    q = None
    if a._quadratik and b._quadratik:
        q = True
    return GAlgebra(a.field, a.group, dim, table=tuple(table), action=action,
                    unit=unit, label=label or f"{a.label}(x){b.label}", quadratik_hint=q)


def matrix_algebra(a: GAlgebra, n: int, module_actions=None, label="") -> GAlgebra:
    """M_n(a) with the conjugation action built from n module G-actions.

    module_actions[i] is a list of dim x dim matrices (one per group
    element) satisfying S_1 = id, S_g S_h = S_gh and the module law
    S_g(xi·a) = S_g(xi)·alpha_g(a).  Defaults to n copies of the algebra
    action.  The induced action on an entry is x -> S_i,g x S_j,g^-1,
    re-expressed through left multiplication; this requires left
    multiplication to be faithful on a.
    """
    field = a.field
    dim = a.dim
    if module_actions is None:
        module_actions = [list(a.action) for _ in range(n)]
    if len(module_actions) != n:
        raise AlgebraError("INVALID_ACTION", "need one module action per row")
    acts = []
    for s in module_actions:
        s = [m if isinstance(m, SMat) else SMat.from_rows(m, field) for m in s]
        _check_module_action(a, s)
        acts.append(s)
    # left-multiplication solver;  m_y = D  must determine y uniquely
    lmap = SMat(dim * dim, dim, field)
    for y in range(dim):
        col = a.left_mult(a.basis_vec(y))
        for (r, c), v in col.data.items():
            lmap.data[(r * dim + c, y)] = v
    if linalg.rank(lmap) != dim:
        raise AlgebraError("INVALID_ACTION", "left multiplication is not faithful")
    mdim = n * n * dim
    idx = lambda i, j, k: (i * n + j) * dim + k
    table = []
    for i1 in range(n):
        for j1 in range(n):
            for k1 in range(dim):
                row = []
                for i2 in range(n):
                    for j2 in range(n):
                        for k2 in range(dim):
                            if j1 != i2:
                                row.append(())
                            else:
                                row.append(tuple((idx(i1, j2, k), c)
                                                 for k, c in a.mul_pair(k1, k2)))
                table.append(tuple(row))
    action = []
    ginv = a.group.inv
    for g in a.group.elements():
        m = SMat(mdim, mdim, field)
        for i in range(n):
            for j in range(n):
                conj_cols = []
                for k in range(dim):
                    d = acts[i][g] @ a.left_mult(a.basis_vec(k)) @ acts[j][ginv[g]]
                    flat = tuple(d.data.get((r, c), field.zero)
                                 for r in range(dim) for c in range(dim))
                    y = linalg.solve(lmap, flat)
                    if y is None:
                        raise AlgebraError("INVALID_ACTION",
                                           f"entry action leaves the algebra at ({i},{j},{k},{g})")
                    conj_cols.append(y)
                for k, y in enumerate(conj_cols):
                    for r, v in enumerate(y):
                        if v:
                            m.data[(idx(i, j, r), idx(i, j, k))] = v
        action.append(m)
    unit = None
    if a.unit is not None:
        u = [field.zero] * mdim
        for i in range(n):
            for k, v in enumerate(a.unit):
                u[idx(i, i, k)] = v
        unit = tuple(u)
    out = GAlgebra(field, a.group, mdim, table=tuple(table), action=tuple(action),
                   unit=unit, label=label or f"M{n}({a.label})",
                   quadratik_hint=True if a._quadratik else None)
    return out


def _check_module_action(a: GAlgebra, s):
    g = a.group
    field = a.field
    if s[g.identity] != SMat.identity(a.dim, field):
        raise AlgebraError("INVALID_ACTION", "module action: identity law fails")
    for x in g.elements():
        if linalg.inverse(s[x]) is None:
            raise AlgebraError("INVALID_ACTION", "module action not invertible")
        for y in g.elements():
            if s[x] @ s[y] != s[g.mul(x, y)]:
                raise AlgebraError("INVALID_ACTION", "module action not a homomorphism")
    for x in g.elements():
        for k in range(a.dim):
            lhs = s[x] @ a.right_mult(a.basis_vec(k))
            rhs = a.right_mult(a.act_vec(x, a.basis_vec(k))) @ s[x]
            if lhs != rhs:
                raise AlgebraError("INVALID_ACTION", "module law S_g(xi a) = S_g(xi) alpha_g(a) fails")


def crossed_product(a: GAlgebra, label="") -> GAlgebra:
    """Crossed product a x| G with convolution product and trivial action."""
    g = a.group
    n = g.order
    dim = n * a.dim
    field = a.field
    idx = lambda x, k: x * a.dim + k
    table = []
    for x in range(n):
        for k1 in range(a.dim):
            row = []
            for y in range(n):
                acted = a.act(x)
                for k2 in range(a.dim):
                    b = acted.col(k2)
                    prod = a.mul_vec(a.basis_vec(k1), b)
                    z = g.mul(x, y)
                    row.append(tuple((idx(z, k), c) for k, c in enumerate(prod) if c))
            table.append(tuple(row))
    unit = None
    if a.unit is not None:
        u = [field.zero] * dim
        for k, v in enumerate(a.unit):
            u[idx(g.identity, k)] = v
        unit = tuple(u)
    out = GAlgebra(field, g, dim, table=tuple(table),
                   action=tuple(SMat.identity(dim, field) for _ in range(n)),
                   unit=unit, label=label or f"{a.label}x|{g.label}",
                   quadratik_hint=True if a._quadratik else None)
    if a._quadratik and dim <= 40:
        out._quadratik = None
        assert out.is_quadratik(), "crossed product of a quadratik algebra must be quadratik"
    return out


def group_algebra(field, group, label=None) -> GAlgebra:
    """F[G] as the crossed product of the base field by G (trivial action)."""
    f = base_field_algebra(field, group)
    out = crossed_product(f, label=label or f"{field.tag}[{group.label}]")
    return out


def fixed_point_algebra(a: GAlgebra):
    """Subalgebra of G-invariant elements, with its inclusion hom."""
    field = a.field
    ident = SMat.identity(a.dim, field)
    stacked = SMat(a.dim * a.group.order, a.dim, field)
    for gi, g in enumerate(a.group.elements()):
        d = a.act(g) - ident
        for (i, j), v in d.data.items():
            stacked.data[(gi * a.dim + i, j)] = v
    basis = linalg.kernel_basis(stacked)
    sub = SpanBasis(a.dim, field, track=True)
    for v in basis:
        sub.add(v)
    k = len(basis)
    table = []
    for i in range(k):
        row = []
        for j in range(k):
            prod = a.mul_vec(basis[i], basis[j])
            coords = sub.coords(prod)
            if coords is None:
                raise AlgebraError("NOT_ASSOCIATIVE", "fixed points not closed under product")
            row.append(tuple(sorted(coords.items())))
        table.append(tuple(row))
    unit = None
    if a.unit is not None:
        coords = sub.coords(a.unit)
        if coords is not None:
            unit = tuple(coords.get(i, field.zero) for i in range(k))
    fixed = GAlgebra(field, a.group, k, table=tuple(table),
                     action=tuple(SMat.identity(k, field) for _ in a.group.elements()),
                     unit=unit, label=f"{a.label}^G")
    inc = AlgebraHom(fixed, a, SMat.from_cols(basis, a.dim, field), equivariant=False,
                     label="fixed-inclusion")
    return fixed, inc


def extend_scalars(a: GAlgebra, field2: Field, label="") -> GAlgebra:
    """Reinterpret a Q-algebra over Q(i) (same basis, embedded constants)."""
    if a.field.tag != "Q" or field2.tag != "Qi":
        raise AlgebraError("FIELD_MISMATCH", "only Q -> Q(i) supported")
    emb = lambda c: field2.parse(f"{c}+0*i")
    table = tuple(tuple(tuple((k, emb(c)) for k, c in a.mul_pair(i, j))
                        for j in range(a.dim)) for i in range(a.dim))
    action = tuple(SMat(m.nrows, m.ncols, field2, {k: emb(v) for k, v in m.data.items()})
                   for m in a.action)
    unit = tuple(emb(c) for c in a.unit) if a.unit is not None else None
    return GAlgebra(field2, a.group, a.dim, table=table, action=action, unit=unit,
                    label=label or f"{a.label}@Qi", quadratik_hint=a._quadratik)


def restrict_scalars(a: GAlgebra, label="") -> GAlgebra:
    """View a Q(i)-algebra as a Q-algebra of twice the dimension."""
    if a.field.tag != "Qi":
        raise AlgebraError("FIELD_MISMATCH", "only Q(i) -> Q supported")
    from fractions import Fraction
    fq = Field("Q")
    dim = 2 * a.dim
    # basis: e_i, i*e_i
    def split(vec):
        out = [Fraction(0)] * dim
        for i, z in enumerate(vec):
            out[2 * i] = z.re
            out[2 * i + 1] = z.im
        return out
    rows = []
    for i in range(a.dim):
        for pi in range(2):
            row = []
            for j in range(a.dim):
                for pj in range(2):
                    z = {}
                    for k, c in a.mul_pair(i, j):
                        w = c
                        if pi == 1:
                            w = w * a.field.i()
                        if pj == 1:
                            w = w * a.field.i()
                        z[k] = w
                    ent = []
                    for k, w in z.items():
                        if w.re:
                            ent.append((2 * k, w.re))
                        if w.im:
                            ent.append((2 * k + 1, w.im))
                    row.append(tuple(sorted(ent)))
            rows.append(tuple(row))
    action = []
    for m in a.action:
        mm = SMat(dim, dim, fq)
        for (r, c), z in m.data.items():
            if z.re:
                mm.data[(2 * r, 2 * c)] = z.re
                mm.data[(2 * r + 1, 2 * c + 1)] = z.re
            if z.im:
                mm.data[(2 * r + 1, 2 * c)] = z.im
                mm.data[(2 * r, 2 * c + 1)] = -z.im
        action.append(mm)
    unit = tuple(split(a.unit)) if a.unit is not None else None
    return GAlgebra(fq, a.group, dim, table=tuple(rows), action=tuple(action),
                    unit=unit, label=label or f"{a.label}@Q", quadratik_hint=a._quadratik)
