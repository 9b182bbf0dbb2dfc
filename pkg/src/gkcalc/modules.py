"""Right functional modules and their operator spaces.

A functional module is a right module over a GAlgebra together with a
distinguished spanning set of A-valued functionals (the stand-in for a
Hilbert-module inner product) and a compatible G-action.  Compact
operators are spans of the elementary operators theta_{xi,phi} with
theta_{xi,phi}(eta) = xi * phi(eta).
"""

from __future__ import annotations

import itertools

from . import linalg
from .algebras import AlgebraError, AlgebraHom, GAlgebra, check_hom
from .linalg import Quotient, SMat, SpanBasis


class ModuleError(ValueError):
    def __init__(self, code, msg=""):
        super().__init__(msg or code)
        self.code = code


_mod_counter = itertools.count()


class FunctionalModule:
    """Right functional module over a GAlgebra.

    rmats[k] is the matrix of the right action of the k-th basis element
    of the base algebra; functionals is a spanning list of (base.dim x
    dim) matrices; gaction[g] is the module G-action S_g.
    """

    def __init__(self, base: GAlgebra, dim: int, rmats, functionals, gaction=None,
                 label="", theta_cores=None):
        self.base = base
        self.dim = dim
        self.rmats = tuple(rmats)
        self.functionals = tuple(functionals)
        if gaction is None:
            gaction = tuple(SMat.identity(dim, base.field) for _ in base.group.elements())
        self.gaction = tuple(gaction)
        self.label = label or f"M{dim}/{base.label}"
        self.digest = f"mod-{next(_mod_counter):06d}"
        self._theta_span = None
        # optional factored description Theta = sum_W { m_y o W : y in C_W }
        # with cores (W, C_W); lets compact spans enumerate few generators
        self.theta_cores = list(theta_cores) if theta_cores is not None else None

    @property
    def field(self):
        return self.base.field

    def right_act(self, vec, avec):
        acc = {}
        for k, c in enumerate(avec):
            if not c:
                continue
            for (i, j), v in self.rmats[k].data.items():
                x = vec[j]
                if x:
                    w = acc.get(i)
                    t = c * v * x
                    acc[i] = t if w is None else w + t
        z = self.field.zero
        return tuple(acc.get(i, z) for i in range(self.dim))

    def right_mat(self, avec) -> SMat:
        m = SMat.zero(self.dim, self.dim, self.field)
        for k, c in enumerate(avec):
            if c:
                m = m + self.rmats[k].scale(c)
        return m

    def act_vec(self, g, vec):
        return self.gaction[g].apply(vec)

    def functional_span(self) -> SpanBasis:
        if self._theta_span is None:
            sb = SpanBasis(self.base.dim * self.dim, self.field, track=True)
            for f in self.functionals:
                sb.add(_flat(f))
            self._theta_span = sb
        return self._theta_span

    def functional_in_span(self, f: SMat) -> bool:
        return self.functional_span().contains(_flat(f))

    def functional_basis(self):
        """A linearly independent sublist of the functionals (cached)."""
        if not hasattr(self, "_fbasis"):
            from .linalg import CoordBasis
            cb = CoordBasis(self.base.dim * self.dim, self.field)
            keep = []
            for f in self.functionals:
                if cb.try_add(_flat(f)):
                    keep.append(f)
            self._fbasis = keep
        return self._fbasis

    def act_functional(self, g, f: SMat) -> SMat:
        """Ad(S, alpha): g(phi) = alpha_g o phi o S_{g^-1}."""
        ginv = self.base.group.inv[g]
        return self.base.act(g) @ f @ self.gaction[ginv]

    def basis_vec(self, i):
        return linalg.unit_vec(i, self.dim, self.field)

    def validate(self):
        base, field = self.base, self.field
        ident = SMat.identity(self.dim, field)
        # right action is a module action
        for i in range(base.dim):
            for j in range(base.dim):
                prod = self.right_mat(base.mul_vec(base.basis_vec(i), base.basis_vec(j)))
                if self.rmats[j] @ self.rmats[i] != prod:
                    raise ModuleError("INVALID_ACTION", f"right action fails at ({i},{j})")
        # functionals are A-linear and form a left-A-submodule, G-invariant
        for f in self.functionals:
            for k in range(base.dim):
                if f @ self.rmats[k] != base.right_mult(base.basis_vec(k)) @ f:
                    raise ModuleError("INVALID_ACTION", "functional is not A-linear")
            for k in range(base.dim):
                lf = base.left_mult(base.basis_vec(k)) @ f
                if not self.functional_in_span(lf):
                    raise ModuleError("INVALID_ACTION", "functional space not a left A-module")
            for g in base.group.elements():
                if not self.functional_in_span(self.act_functional(g, f)):
                    raise ModuleError("INVALID_ACTION", "functional space not G-invariant")
        # module G-action laws
        grp = base.group
        if self.gaction[grp.identity] != ident:
            raise ModuleError("INVALID_ACTION", "module action: identity law")
        for g in grp.elements():
            if linalg.inverse(self.gaction[g]) is None:
                raise ModuleError("INVALID_ACTION", "module action not invertible")
            for h in grp.elements():
                if self.gaction[g] @ self.gaction[h] != self.gaction[grp.mul(g, h)]:
                    raise ModuleError("INVALID_ACTION", "module action not a homomorphism")
            for k in range(base.dim):
                lhs = self.gaction[g] @ self.rmats[k]
                rhs = self.right_mat(base.act_vec(g, base.basis_vec(k))) @ self.gaction[g]
                if lhs != rhs:
                    raise ModuleError("INVALID_ACTION", "S_g(xi a) != S_g(xi) alpha_g(a)")
        return self

    def __repr__(self):
        return f"FunctionalModule({self.label}, dim={self.dim} over {self.base.label})"


def _flat(m: SMat):
    return {i * m.ncols + j: v for (i, j), v in m.data.items()}


# --------------------------------------------------------------------------
# standard modules
# --------------------------------------------------------------------------

def module_over_self(a: GAlgebra) -> FunctionalModule:
    """A as a right functional module over itself.

    The functional space is left multiplication by A when A is quadratik
    and by the unitization otherwise (then the identity functional joins).
    """
    funcs = [a.left_mult(a.basis_vec(k)) for k in range(a.dim)]
    cores = [(SMat.identity(a.dim, a.field),
              [a.basis_vec(k) for k in range(a.dim)])]
    if not a.is_quadratik():
        funcs.append(SMat.identity(a.dim, a.field))
        cores = None   # the unitized functional space is not a left-mult span
    return FunctionalModule(a, a.dim, [a.right_mult(a.basis_vec(k)) for k in range(a.dim)],
                            funcs, tuple(a.action), label=f"{a.label}-over-self",
                            theta_cores=cores)


def direct_sum_modules(parts, label="") -> FunctionalModule:
    base = parts[0].base
    for p in parts:
        if p.base is not base and p.base.digest != base.digest:
            raise ModuleError("OBJECT_MISMATCH", "direct sum over different base algebras")
    dim = sum(p.dim for p in parts)
    rmats = []
    for k in range(base.dim):
        rmats.append(SMat.block_diag([p.rmats[k] for p in parts]))
    funcs = []
    cores = []
    off = 0
    for p in parts:
        for f in p.functionals:
            funcs.append(f.embed(base.dim, dim, 0, off))
        if cores is not None and p.theta_cores is not None:
            for w, cw in p.theta_cores:
                cores.append((w.embed(base.dim, dim, 0, off), cw))
        else:
            cores = None
        off += p.dim
    gact = tuple(SMat.block_diag([p.gaction[g] for p in parts])
                 for g in base.group.elements())
    return FunctionalModule(base, dim, rmats, funcs, gact,
                            label=label or "(+)".join(p.label for p in parts),
                            theta_cores=cores)


def free_module(a: GAlgebra, n: int, module_actions=None, label="") -> FunctionalModule:
    """A^n with coordinatewise functionals; actions default to alpha."""
    m = module_over_self(a)
    parts = []
    for i in range(n):
        if module_actions is None:
            parts.append(m)
        else:
            acts = [x if isinstance(x, SMat) else SMat.from_rows(x, a.field)
                    for x in module_actions[i]]
            parts.append(FunctionalModule(a, a.dim, m.rmats, m.functionals, acts,
                                          label=f"{a.label}[{i}]"))
    return direct_sum_modules(parts, label=label or f"{a.label}^{n}")


def submodule(m: FunctionalModule, basis, label="", check_invariant=True) -> tuple:
    """Functional submodule on the given basis vectors, with restriction.

    Returns (sub, incl) where incl is the dim(m) x dim(sub) inclusion.
    Functionals are restrictions of the ambient ones.
    """
    field = m.field
    sub = SpanBasis(m.dim, field, track=True)
    for v in basis:
        if not sub.add(v):
            raise ModuleError("OBJECT_MISMATCH", "submodule basis is dependent")
    k = len(basis)
    incl = SMat.from_cols(basis, m.dim, field)

    def coords(vec):
        c = sub.coords(vec)
        if c is None:
            raise ModuleError("OBJECT_MISMATCH", "submodule not invariant")
        return tuple(c.get(i, field.zero) for i in range(k))

    rmats = []
    for kk in range(m.base.dim):
        mat = SMat.from_cols([coords(m.rmats[kk].apply(b)) for b in basis], k, field)
        rmats.append(mat)
    funcs = [f @ incl for f in m.functionals]
    cores = None
    if m.theta_cores is not None:
        cores = [(w @ incl, cw) for w, cw in m.theta_cores]
    gact = []
    for g in m.base.group.elements():
        if check_invariant:
            gact.append(SMat.from_cols([coords(m.gaction[g].apply(b)) for b in basis], k, field))
        else:
            gact.append(SMat.identity(k, field))
    out = FunctionalModule(m.base, k, rmats, funcs, tuple(gact),
                           label=label or f"{m.label}|sub{k}", theta_cores=cores)
    return out, incl


# --------------------------------------------------------------------------
# operator spaces
# --------------------------------------------------------------------------

def elementary_operator(m: FunctionalModule, n: FunctionalModule, xi, phi: SMat) -> SMat:
    """theta_{xi,phi}: eta -> xi * phi(eta), as an n.dim x m.dim matrix."""
    acc = {}
    cols = []   # sparse xi * e_k per base index k, computed on demand
    cache = {}
    for (k, j), pv in phi.data.items():
        col = cache.get(k)
        if col is None:
            col = {}
            for (r, c), v in n.rmats[k].data.items():
                x = xi[c]
                if x:
                    w = col.get(r)
                    s = v * x if w is None else w + v * x
                    col[r] = s
            cache[k] = col
        for r, rv in col.items():
            if not rv:
                continue
            key = (r, j)
            w = acc.get(key)
            acc[key] = rv * pv if w is None else w + rv * pv
    out = SMat(n.dim, m.dim, m.field)
    out.data = {k: v for k, v in acc.items() if v}
    return out


COMPACT, ADJOINTABLE, MULTIPLIER = "COMPACT", "ADJOINTABLE", "MULTIPLIER"


class OperatorSpace:
    """Span of operators between two functional modules."""

    def __init__(self, kind, source: FunctionalModule, target: FunctionalModule,
                 basis, span: SpanBasis, gens=None, indep=None):
        self.kind = kind
        self.source = source
        self.target = target
        self.basis = list(basis)          # list of SMat
        self.span = span                  # tracked span of flattened operators
        self.gens = gens                  # optional generator metadata
        # generator index of each basis element (coords are generator-indexed)
        self.indep = list(indep) if indep is not None else list(range(len(self.basis)))
        self._pos = {g: k for k, g in enumerate(self.indep)}

    @property
    def dim(self):
        return len(self.basis)

    def contains(self, op: SMat) -> bool:
        return self.span.contains(_flat(op))

    def coords(self, op: SMat):
        c = self.span.coords(_flat(op))
        if c is None:
            return None
        return c

    def coords_vec(self, op: SMat):
        c = self.coords(op)
        if c is None:
            return None
        field = self.source.field
        out = [field.zero] * self.dim
        for g, v in c.items():
            out[self._pos[g]] = v
        return tuple(out)

    def as_algebra(self, label="", quadratik_hint=None) -> GAlgebra:
        """The span as a GAlgebra (only for source == target)."""
        if self.source is not self.target:
            raise ModuleError("OBJECT_MISMATCH", "ring structure needs M == N")
        m = self.source
        field = m.field
        objs = list(self.basis)
        realized = (objs, lambda x, y: x @ y, _flat, m.dim * m.dim)
        action = []
        for g in m.base.group.elements():
            sg = m.gaction[g]
            sginv = m.gaction[m.base.group.inv[g]]
            cols = []
            for t in self.basis:
                conj = sg @ t @ sginv
                c = self.coords_vec(conj)
                if c is None:
                    raise ModuleError("INVALID_ACTION", "operator space not G-invariant")
                cols.append(c)
            action.append(SMat.from_cols(cols, self.dim, field))
        unit = None
        ident = SMat.identity(m.dim, field)
        uc = self.coords_vec(ident)
        if uc is not None:
            unit = uc
        return GAlgebra(field, m.base.group, self.dim, realized=realized,
                        action=tuple(action), unit=unit,
                        label=label or f"{self.kind}({m.label})",
                        quadratik_hint=quadratik_hint)


def compact_operators(m: FunctionalModule, n: FunctionalModule = None) -> OperatorSpace:
    """K(m, n): exact span of all elementary operators."""
    if n is None:
        n = m
    if n.base is not m.base and n.base.digest != m.base.digest:
        raise ModuleError("OBJECT_MISMATCH", "compacts need a common base algebra")
    field = m.field
    span = SpanBasis(n.dim * m.dim, field, track=True)
    basis = []
    gens = []
    indep = []
    seen = set()
    if m.theta_cores is not None:
        # theta_{xi, m_y o W} = ev_{xi.y} o W, so one generator per core W
        # and per basis vector of span{ xi . y : y in C_W }
        from .linalg import CoordBasis
        for w, cw in m.theta_cores:
            zeta = CoordBasis(n.dim, field)
            for i in range(n.dim):
                xi = n.basis_vec(i)
                for y in cw:
                    v = n.right_act(xi, y)
                    if any(v):
                        zeta.try_add(v)
            for z in zeta.kept:
                ev = SMat.from_cols([n.right_act(z, m.base.basis_vec(c))
                                     for c in range(m.base.dim)], n.dim, field)
                t = ev @ w
                key = t.key()
                if key in seen:
                    continue
                seen.add(key)
                gens.append(None)
                if span.add(_flat(t)):
                    basis.append(t)
                    indep.append(len(gens) - 1)
        return OperatorSpace(COMPACT, m, n, basis, span, gens, indep)
    fbasis = m.functional_basis()
    findex = {id(f): k for k, f in enumerate(m.functionals)}
    for i in range(n.dim):
        xi = n.basis_vec(i)
        for phi in fbasis:
            t = elementary_operator(m, n, xi, phi)
            key = t.key()
            if key in seen:
                continue
            seen.add(key)
            gens.append((i, findex[id(phi)]))
            if span.add(_flat(t)):
                basis.append(t)
                indep.append(len(gens) - 1)
    return OperatorSpace(COMPACT, m, n, basis, span, gens, indep)


def adjointable_operators(m: FunctionalModule) -> OperatorSpace:
    """L(m): right-A-linear V with phi o V in Theta for all phi."""
    field = m.field
    d = m.dim
    nuk = d * d
    rowsets = []
    # right-A-linearity: V R_a - R_a V = 0
    conds = []
    for k in range(m.base.dim):
        r = m.rmats[k]
        # condition entries: (V @ r - r @ V)[i][j] = 0
        for i in range(d):
            for j in range(d):
                row = {}
                for l in range(d):
                    v = r.data.get((l, j))
                    if v:
                        row[i * d + l] = row.get(i * d + l, field.zero) + v
                    w = r.data.get((i, l))
                    if w:
                        row[l * d + j] = row.get(l * d + j, field.zero) - w
                row = {kk: vv for kk, vv in row.items() if vv}
                if row:
                    conds.append(row)
    # phi o V in span(Theta): residual of flatten(phi @ V) modulo Theta == 0
    theta = m.functional_span()
    nb = m.base.dim
    for phi in m.functionals:
        # entry (r, j) of phi @ V is sum_l phi[r,l] V[l,j]; flatten index r*d+j
        # build residual-projected conditions: for each flattened output
        # coordinate after reduction we get one linear condition in V.
        # We use: residual(e_{r*d+j-ish}) composition; do it columnwise.
        for j in range(d):
            # column j of phi@V as a function of V[:, j]
            # flat coords r*d + j vary over r
            # write as sum over l of V[l,j] * phi[:, l]
            # residual modulo Theta must vanish
            cols = {}
            for (r, l), v in phi.data.items():
                cols.setdefault(l, {})[r] = v
            # unknown V[l, j] multiplies vector phi[:, l] placed at flat (r*d + j)
            # residual is linear, compute per unknown
            per_unknown = {}
            for l, colvals in cols.items():
                vec = {r * d + j: v for r, v in colvals.items()}
                res = theta.residual(vec)
                if res:
                    per_unknown[l * d + j] = res
            coordset = set()
            for res in per_unknown.values():
                coordset.update(res)
            for coord in coordset:
                row = {}
                for unknown, res in per_unknown.items():
                    v = res.get(coord)
                    if v:
                        row[unknown] = v
                if row:
                    conds.append(row)
    big = SMat(len(conds), nuk, field)
    for i, row in enumerate(conds):
        for jj, v in row.items():
            big.data[(i, jj)] = v
    basis_flat = linalg.kernel_basis(big)
    span = SpanBasis(d * d, field, track=True)
    basis = []
    for v in basis_flat:
        t = SMat(d, d, field, {(i // d, i % d): x for i, x in enumerate(v) if x})
        if span.add(_flat(t)):
            basis.append(t)
    return OperatorSpace(ADJOINTABLE, m, m, basis, span)


def multiplier_operators(m: FunctionalModule) -> OperatorSpace:
    """Multipliers of the compacts: V with V K and K V inside K."""
    field = m.field
    d = m.dim
    k = compact_operators(m)
    kspan = k.span
    conds = []
    for t in k.basis:
        # V @ t in K and t @ V in K, as linear conditions on V
        for right in (True, False):
            per_unknown = {}
            for i in range(d):
                for j in range(d):
                    # unknown V[i,j]
                    if right:
                        # (V @ t)[i, c] += V[i,j] t[j,c]
                        vec = {}
                        for (jj, c), v in t.data.items():
                            if jj == j:
                                vec[i * d + c] = v
                    else:
                        # (t @ V)[r, j] += t[r,i] V[i,j]
                        vec = {}
                        for (r, ii), v in t.data.items():
                            if ii == i:
                                vec[r * d + j] = v
                    if vec:
                        res = kspan.residual(vec)
                        if res:
                            per_unknown[i * d + j] = res
            coordset = set()
            for res in per_unknown.values():
                coordset.update(res)
            for coord in coordset:
                row = {}
                for unknown, res in per_unknown.items():
                    v = res.get(coord)
                    if v:
                        row[unknown] = v
                if row:
                    conds.append(row)
    # also require right-A-linearity (multipliers live in Hom_A)
    for kk in range(m.base.dim):
        r = m.rmats[kk]
        for i in range(d):
            for j in range(d):
                row = {}
                for l in range(d):
                    v = r.data.get((l, j))
                    if v:
                        row[i * d + l] = row.get(i * d + l, field.zero) + v
                    w = r.data.get((i, l))
                    if w:
                        row[l * d + j] = row.get(l * d + j, field.zero) - w
                row = {a: b for a, b in row.items() if b}
                if row:
                    conds.append(row)
    big = SMat(len(conds), d * d, field)
    for i, row in enumerate(conds):
        for jj, v in row.items():
            big.data[(i, jj)] = v
    basis_flat = linalg.kernel_basis(big)
    span = SpanBasis(d * d, field, track=True)
    basis = []
    for v in basis_flat:
        t = SMat(d, d, field, {(i // d, i % d): x for i, x in enumerate(v) if x})
        if span.add(_flat(t)):
            basis.append(t)
    return OperatorSpace(MULTIPLIER, m, m, basis, span)


# --------------------------------------------------------------------------
# cofullness and separation
# --------------------------------------------------------------------------

def is_cofull(m: FunctionalModule) -> bool:
    """M = span of xi * phi(eta)."""
    field = m.field
    sb = SpanBasis(m.dim, field)
    for i in range(m.dim):
        xi = m.basis_vec(i)
        for phi in m.functionals:
            for j in range(m.dim):
                a = phi.col(j)
                v = m.right_act(xi, a)
                if any(v) and sb.add(v) and sb.rank() == m.dim:
                    return True
    return sb.rank() == m.dim


def is_weakly_cofull(m: FunctionalModule) -> bool:
    """Every xi is a sum of eta_i b_i (base must be quadratik)."""
    if not m.base.is_quadratik():
        raise ModuleError("PRECONDITION_FAILED", "weak cofullness is relative to a quadratik base")
    field = m.field
    sb = SpanBasis(m.dim, field)
    for k in range(m.base.dim):
        r = m.rmats[k]
        for i in range(m.dim):
            v = r.apply(m.basis_vec(i))
            if any(v) and sb.add(v) and sb.rank() == m.dim:
                return True
    return sb.rank() == m.dim


def is_separated(m: FunctionalModule) -> bool:
    stacked = SMat(m.base.dim * len(m.functionals), m.dim, m.field)
    for fi, f in enumerate(m.functionals):
        for (i, j), v in f.data.items():
            stacked.data[(fi * m.base.dim + i, j)] = v
    return linalg.rank(stacked) == m.dim


class FunctionalModuleMap:
    """Module homomorphism (X, f) with f(phi)(X(xi)) = phi(xi)."""

    def __init__(self, source: FunctionalModule, target: FunctionalModule,
                 xmat: SMat, fpairs, label=""):
        self.source = source
        self.target = target
        self.xmat = xmat
        self.fpairs = list(fpairs)     # (phi_source, phi_target) pairs
        self.label = label

    def validate(self, require_equivariant=True):
        for phi_s, phi_t in self.fpairs:
            if phi_t @ self.xmat != phi_s:
                raise ModuleError("NOT_INTERTWINING", "f(phi) o X != phi")
            if not self.target.functional_in_span(phi_t):
                raise ModuleError("NOT_INTERTWINING", "f(phi) outside target functional space")
        if require_equivariant:
            for g in self.source.base.group.elements():
                if self.xmat @ self.source.gaction[g] != self.target.gaction[g] @ self.xmat:
                    raise ModuleError("NOT_EQUIVARIANT", f"X fails at {g}")
        # X is a right-module map
        for k in range(self.source.base.dim):
            if self.xmat @ self.source.rmats[k] != self.target.rmats[k] @ self.xmat:
                raise ModuleError("NOT_INTERTWINING", "X is not right-A-linear")
        return self

    def is_surjective(self):
        return linalg.is_surjective(self.xmat)

    def is_bijective(self):
        return self.xmat.nrows == self.xmat.ncols and linalg.inverse(self.xmat) is not None


def separation_quotient(m: FunctionalModule):
    """Quotient by the joint kernel of the functionals.

    Returns (mbar, fmap) where fmap: m -> mbar carries the induced
    functional assignment.
    """
    field = m.field
    stacked = SMat(m.base.dim * len(m.functionals), m.dim, field)
    for fi, f in enumerate(m.functionals):
        for (i, j), v in f.data.items():
            stacked.data[(fi * m.base.dim + i, j)] = v
    ker = linalg.kernel_basis(stacked)
    sub = SpanBasis(m.dim, field)
    for v in ker:
        sub.add(v)
    q = Quotient(sub, m.dim, field)
    rmats = [q.induced(r) for r in m.rmats]
    funcs = [f @ q.lift for f in m.functionals]
    gact = tuple(q.induced(s) for s in m.gaction)
    mbar = FunctionalModule(m.base, q.dim, rmats, funcs, gact, label=f"{m.label}-bar")
    fmap = FunctionalModuleMap(m, mbar, q.proj,
                               [(f, fb) for f, fb in zip(m.functionals, funcs)],
                               label="separation")
    fmap.quotient = q
    return mbar, fmap


def induced_operator(fmap: FunctionalModuleMap, q: Quotient, op: SMat) -> SMat:
    """Operator induced on a separation quotient."""
    return q.proj @ op @ q.lift


def induced_compacts_hom(fmap: FunctionalModuleMap, k_source: OperatorSpace = None,
                         k_target: OperatorSpace = None) -> AlgebraHom:
    """Ring hom K(E) -> K(F) induced by a surjective module map.

    sigma(theta_{xi,phi}) = theta_{X(xi), f(phi)}.
    """
    e, f = fmap.source, fmap.target
    if not fmap.is_surjective():
        raise ModuleError("NOT_SURJECTIVE")
    fmap.validate(require_equivariant=False)
    field = e.field
    if k_source is None:
        k_source = compact_operators(e)
    if k_target is None:
        k_target = compact_operators(f)
    fdict = {}
    for phi_s, phi_t in fmap.fpairs:
        fdict[phi_s.key()] = phi_t
    cols = []
    for t in k_source.basis:
        c = k_source.span.coords(_flat(t))
        img = SMat.zero(f.dim, f.dim, field)
        for gi, v in c.items():
            xi_i, phi_j = k_source.gens[gi]
            phi_s = e.functionals[phi_j]
            phi_t = fdict.get(phi_s.key())
            if phi_t is None:
                raise ModuleError("NOT_INTERTWINING", "functional image not supplied")
            img = img + elementary_operator(
                f, f, fmap.xmat.col(xi_i), phi_t).scale(v)
        cv = k_target.coords_vec(img)
        if cv is None:
            raise ModuleError("NOT_INTERTWINING", "image not a compact operator")
        cols.append(cv)
    ka = k_source.as_algebra()
    kb = k_target.as_algebra()
    mat = SMat.from_cols(cols, kb.dim, field)
    return check_hom(mat, ka, kb, require_equivariant=False, label="induced-compacts")


# --------------------------------------------------------------------------
# tensor products
# --------------------------------------------------------------------------

def external_tensor(e: FunctionalModule, f: FunctionalModule, base_tensor=None,
                    label="") -> FunctionalModule:
    """E (x) F over A (x) B with the diagonal action."""
    from .algebras import tensor as alg_tensor
    if e.field != f.field:
        raise ModuleError("FIELD_MISMATCH")
    ab = base_tensor if base_tensor is not None else alg_tensor(e.base, f.base)
    dim = e.dim * f.dim
    rmats = []
    for k1 in range(e.base.dim):
        for k2 in range(f.base.dim):
            rmats.append(e.rmats[k1].kron(f.rmats[k2]))
    funcs = []
    for p in e.functionals:
        for q in f.functionals:
            funcs.append(p.kron(q))
    gact = tuple(e.gaction[g].kron(f.gaction[g]) for g in e.base.group.elements())
    return FunctionalModule(ab, dim, rmats, funcs, gact,
                            label=label or f"{e.label}(x){f.label}")


class Representation:
    """Ring homomorphism pi: A -> L_B(F), one matrix per basis of A."""

    def __init__(self, a: GAlgebra, f: FunctionalModule, mats, label=""):
        self.a = a
        self.f = f
        self.mats = tuple(mats)
        self.label = label

    @staticmethod
    def from_hom_to_compacts(h: AlgebraHom, k: OperatorSpace, label=""):
        """Interpret a hom into a compacts algebra as a representation."""
        mats = []
        for i in range(h.source.dim):
            c = h.mat.col(i)
            op = SMat.zero(k.source.dim, k.source.dim, h.source.field)
            for j, v in enumerate(c):
                if v:
                    op = op + k.basis[j].scale(v)
            mats.append(op)
        return Representation(h.source, k.source, mats, label=label)

    @staticmethod
    def left_regular(a: GAlgebra, m: FunctionalModule = None, label=""):
        """a acting on itself by left multiplication."""
        if m is None:
            m = module_over_self(a)
        return Representation(a, m, [a.left_mult(a.basis_vec(i)) for i in range(a.dim)],
                              label=label or f"chi_{a.label}")

    def of(self, avec) -> SMat:
        out = SMat.zero(self.f.dim, self.f.dim, self.a.field)
        for k, c in enumerate(avec):
            if c:
                out = out + self.mats[k].scale(c)
        return out

    def validate(self, require_adjointable=True, require_equivariant=False):
        a, f = self.a, self.f
        for i in range(a.dim):
            for j in range(a.dim):
                if self.of(a.mul_vec(a.basis_vec(i), a.basis_vec(j))) != self.mats[i] @ self.mats[j]:
                    raise ModuleError("NOT_MULTIPLICATIVE", "representation not multiplicative")
        if require_adjointable:
            for m in self.mats:
                for phi in f.functionals:
                    if not f.functional_in_span(phi @ m):
                        raise ModuleError("PI_NOT_ADJOINTABLE")
                for k in range(f.base.dim):
                    if m @ f.rmats[k] != f.rmats[k] @ m:
                        raise ModuleError("PI_NOT_ADJOINTABLE", "image is not right-linear")
        if require_equivariant:
            if not self.is_equivariant():
                raise ModuleError("NOT_EQUIVARIANT", "representation not equivariant")
        return self

    def is_equivariant(self):
        a, f = self.a, self.f
        for g in a.group.elements():
            tg = f.gaction[g]
            tginv = f.gaction[a.group.inv[g]]
            for i in range(a.dim):
                if self.of(a.act_vec(g, a.basis_vec(i))) != tg @ self.mats[i] @ tginv:
                    return False
        return True


class InternalTensor:
    """E (x)_pi F: quotient of E (x) F by the null space of the functionals."""

    def __init__(self, e: FunctionalModule, pi: Representation, f: FunctionalModule,
                 label="", gaction=None, validate_pi=True):
        if pi.a is not e.base and pi.a.digest != e.base.digest:
            raise ModuleError("OBJECT_MISMATCH", "pi must represent the left base algebra")
        if validate_pi:
            pi.validate()
        self.e, self.pi, self.f = e, pi, f
        field = e.field
        de, df = e.dim, f.dim
        # kernel: intersection over phi of ker(L_phi), L_phi(xi (x) eta) = pi(phi(xi)) eta
        lmaps = []
        for phi in e.functionals:
            l = SMat(df, de * df, field)
            for i in range(de):
                p = pi.of(phi.col(i))
                for (r, c), v in p.data.items():
                    l.data[(r, i * df + c)] = v
            lmaps.append(l)
        stacked = SMat(df * len(lmaps), de * df, field)
        for li, l in enumerate(lmaps):
            for (r, c), v in l.data.items():
                stacked.data[(li * df + r, c)] = v
        ker = linalg.kernel_basis(stacked)
        sub = SpanBasis(de * df, field)
        for v in ker:
            sub.add(v)
        self.quot = Quotient(sub, de * df, field)
        self.lmaps = lmaps
        dim = self.quot.dim
        rmats = [self.quot.induced(SMat.identity(de, field).kron(f.rmats[k]))
                 for k in range(f.base.dim)]
        funcs = []
        for li, phi in enumerate(e.functionals):
            for psi in f.functionals:
                funcs.append(psi @ lmaps[li] @ self.quot.lift)
        if gaction == "trivial":
            # non-equivariant bookkeeping use (plain module identifications)
            gaction = [SMat.identity(self.quot.dim, field)
                       for _ in e.base.group.elements()]
        elif gaction is None:
            gaction = []
            for g in e.base.group.elements():
                big = e.gaction[g].kron(f.gaction[g])
                # requires the kernel to be invariant; exact check
                for v in ker:
                    if not sub.contains(big.apply(v)):
                        raise ModuleError("INVALID_ACTION",
                                          "diagonal action does not descend; supply gaction")
                gaction.append(self.quot.induced(big))
        self.module = FunctionalModule(f.base, dim, rmats, funcs, tuple(gaction),
                                       label=label or f"{e.label}(x)pi{f.label}")

    def embed(self, xi, eta):
        """Class of the simple tensor xi (x) eta."""
        field = self.e.field
        de, df = self.e.dim, self.f.dim
        vec = [field.zero] * (de * df)
        for i, x in enumerate(xi):
            if x:
                for j, y in enumerate(eta):
                    if y:
                        vec[i * df + j] = x * y
        return self.quot.push(tuple(vec))

    def op_tensor_id(self, t: SMat) -> SMat:
        """T (x) 1 on the quotient (T must be adjointable on E)."""
        return self.quot.induced(t.kron(SMat.identity(self.f.dim, self.e.field)))

    def core_map(self, w: SMat) -> SMat:
        """The induced map [xi (x) eta] -> pi(W(xi)) eta for a core W of E."""
        field = self.e.field
        de, df = self.e.dim, self.f.dim
        lw = SMat(df, de * df, field)
        for i in range(de):
            p = self.pi.of(w.col(i))
            for (r, c), v in p.data.items():
                lw.data[(r, i * df + c)] = v
        return lw @ self.quot.lift

    def id_tensor_op(self, t: SMat) -> SMat:
        return self.quot.induced(SMat.identity(self.e.dim, self.e.field).kron(t))


def internal_tensor(e, pi, f, **kw) -> InternalTensor:
    return InternalTensor(e, pi, f, **kw)


# --------------------------------------------------------------------------
# compacts over compacts (corner multiplication realization)
# --------------------------------------------------------------------------

def corner_multiplication_ops(b: GAlgebra, x: FunctionalModule, b_offset: int):
    """The operators m_c: (eta + d) -> c d on the distinguished B-block of x.

    x must contain a copy of B as the coordinate block starting at
    b_offset.  Returns one operator per basis element of B.
    """
    field = b.field
    out = []
    for k in range(b.dim):
        l = b.left_mult(b.basis_vec(k))
        out.append(l.embed(x.dim, x.dim, b_offset, b_offset))
    return out


class CompactsOverCompacts:
    """Prop-8.6-style realization K_{K_B(E+B)}(F) ~ K_B(F M_B)."""

    def __init__(self, b: GAlgebra, e: FunctionalModule, f: FunctionalModule,
                 k_alg: GAlgebra, k_space: OperatorSpace):
        # k_space: compacts of X = E + B; k_alg: same as a GAlgebra,
        # f: cofull functional module over k_alg
        if not b.is_quadratik():
            raise ModuleError("PRECONDITION_FAILED", "B must be quadratik")
        if e.dim and not is_weakly_cofull(e):
            raise ModuleError("NOT_COFULL", "E must be weakly cofull")
        if not is_cofull(f):
            raise ModuleError("NOT_COFULL", "F must be cofull")
        field = b.field
        self.b, self.e, self.f = b, e, f
        self.k_alg, self.k_space = k_alg, k_space
        x = k_space.source
        mb = corner_multiplication_ops(b, x, e.dim)
        self.mb_ops = mb
        # coords of m_c in the compacts algebra
        self.mb_coords = []
        for op in mb:
            c = k_space.coords_vec(op)
            if c is None:
                raise ModuleError("NOT_COFULL", "corner multiplications are not compact")
            self.mb_coords.append(c)
        # F M_B as a subspace of F
        from .linalg import CoordBasis
        sub = CoordBasis(f.dim, field)
        for i in range(f.dim):
            xi = f.basis_vec(i)
            for c in self.mb_coords:
                v = f.right_act(xi, c)
                if any(v):
                    sub.try_add(v)
        self.sub = sub
        basis = self.basis = sub.kept
        self.fm_dim = len(basis)
        self.incl = SMat.from_cols(basis, f.dim, field)

        def coords(vec):
            cc = sub.coords_vec(vec)
            if cc is None:
                raise ModuleError("NOT_COFULL", "F M_B is not invariant")
            return cc

        # B-module structure: eta . b := eta m_b
        rmats = []
        for k in range(b.dim):
            cols = [coords(f.right_act(v, self.mb_coords[k])) for v in basis]
            rmats.append(SMat.from_cols(cols, self.fm_dim, field))
        # functionals: m_c o phi restricted, identified through M_B ~ B
        funcs = []
        for k in range(b.dim):
            for phi in f.functionals:
                rows = []
                mc = self.mb_coords[k]
                # value in A: m_c * phi(eta); identify with B via m
                mat = SMat.zero(b.dim, self.fm_dim, field)
                for ci, v in enumerate(basis):
                    aval = phi.apply(v)
                    prod = k_alg.mul_vec(mc, aval)
                    bb = self._to_b(prod)
                    for r, val in enumerate(bb):
                        if val:
                            mat.data[(r, ci)] = val
                funcs.append(mat)
        gact = []
        for g in b.group.elements():
            cols = [coords(f.gaction[g].apply(v)) for v in basis]
            gact.append(SMat.from_cols(cols, self.fm_dim, field))
        self.module = FunctionalModule(b, self.fm_dim, rmats, funcs, tuple(gact),
                                       label=f"{f.label}.M_{b.label}")

    def _to_b(self, kvec):
        """Identify an element of M_B (inside the compacts algebra) with B."""
        field = self.b.field
        mbmat = SMat.from_cols(self.mb_coords, self.k_alg.dim, field)
        sol = linalg.solve(mbmat, kvec)
        if sol is None:
            raise ModuleError("NOT_COFULL", "value outside M_B")
        return sol

    def pi_hom(self, kf_space: OperatorSpace, kf_alg: GAlgebra) -> AlgebraHom:
        """The restriction map K_A(F) -> K_B(F M_B) as a validated iso."""
        field = self.b.field
        target_space = compact_operators(self.module)
        target_alg = target_space.as_algebra(label=f"K({self.module.label})")
        cols = []
        for t in kf_space.basis:
            restricted_cols = []
            for v in self.basis:
                img = t.apply(v)
                cc = self.sub.coords_vec(img)
                if cc is None:
                    raise ModuleError("NOT_COFULL", "operator does not preserve F M_B")
                restricted_cols.append(cc)
            rest = SMat.from_cols(restricted_cols, self.fm_dim, field)
            cv = target_space.coords_vec(rest)
            if cv is None:
                raise ModuleError("NOT_COFULL", "restriction is not compact")
            cols.append(cv)
        mat = SMat.from_cols(cols, target_alg.dim, field)
        hom = check_hom(mat, kf_alg, target_alg, require_equivariant=False,
                        label="corner-restriction")
        if not hom.is_bijective():
            raise ModuleError("NOT_COFULL", "restriction map is not bijective")
        hom.target_space = target_space
        return hom


def compacts_over_compacts(b: GAlgebra, e: FunctionalModule, f=None):
    """Build the Prop-8.6 data for X = E + B and F (default: the compacts
    algebra over itself).  Returns (data, pi) with pi a verified bijective
    ring homomorphism."""
    x = direct_sum_modules([e, module_over_self(b)]) if e.dim else module_over_self(b)
    k_space = compact_operators(x)
    k_alg = k_space.as_algebra(label=f"K({x.label})", quadratik_hint=True)
    if f is None:
        f = module_over_self(k_alg)
    data = CompactsOverCompacts(b, e, f, k_alg, k_space)
    kf_space = compact_operators(f)
    kf_alg = kf_space.as_algebra(label=f"K({f.label})")
    pi = data.pi_hom(kf_space, kf_alg)
    return data, pi
