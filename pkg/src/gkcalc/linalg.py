"""Exact linear algebra over the library's scalar fields.

Matrices are sparse (dict keyed by (row, col)); vectors are plain tuples.
Everything is computed by fraction-exact Gaussian elimination, so ranks,
kernels and solved systems are certificates, not approximations.
"""

from __future__ import annotations

from .fields import Field


class SMat:
    """Sparse matrix over an exact field.  Immutable by convention."""

    __slots__ = ("nrows", "ncols", "field", "data", "_key")

    def __init__(self, nrows, ncols, field, data=None):
        self.nrows = nrows
        self.ncols = ncols
        self.field = field
        self.data = {} if data is None else {k: v for k, v in data.items() if v}
        self._key = None

    # --- constructors ---

    @staticmethod
    def from_rows(rows, field):
        m = SMat(len(rows), len(rows[0]) if rows else 0, field)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if v:
                    m.data[(i, j)] = v
        return m

    @staticmethod
    def identity(n, field):
        m = SMat(n, n, field)
        one = field.one
        for i in range(n):
            m.data[(i, i)] = one
        return m

    @staticmethod
    def zero(nrows, ncols, field):
        return SMat(nrows, ncols, field)

    @staticmethod
    def from_cols(cols, nrows, field):
        m = SMat(nrows, len(cols), field)
        for j, col in enumerate(cols):
            for i, v in enumerate(col):
                if v:
                    m.data[(i, j)] = v
        return m

    # --- basic ops ---

    def to_rows(self):
        z = self.field.zero
        rows = [[z] * self.ncols for _ in range(self.nrows)]
        for (i, j), v in self.data.items():
            rows[i][j] = v
        return rows

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.ncols} vs {other.nrows}")
        out = SMat(self.nrows, other.ncols, self.field)
        bycol = {}
        for (k, j), v in other.data.items():
            bycol.setdefault(k, []).append((j, v))
        acc = out.data
        for (i, k), u in self.data.items():
            hits = bycol.get(k)
            if not hits:
                continue
            for j, v in hits:
                key = (i, j)
                w = acc.get(key)
                acc[key] = u * v if w is None else w + u * v
        out.data = {k: v for k, v in acc.items() if v}
        return out

    def __add__(self, other):
        out = SMat(self.nrows, self.ncols, self.field, dict(self.data))
        for k, v in other.data.items():
            w = out.data.get(k)
            s = v if w is None else w + v
            if s:
                out.data[k] = s
            elif k in out.data:
                del out.data[k]
        return out

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SMat(self.nrows, self.ncols, self.field, {k: -v for k, v in self.data.items()})

    def scale(self, c):
        if not c:
            return SMat.zero(self.nrows, self.ncols, self.field)
        return SMat(self.nrows, self.ncols, self.field, {k: c * v for k, v in self.data.items()})

    def __eq__(self, other):
        return (
            isinstance(other, SMat)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.data == other.data
        )

    def key(self):
        """Canonical hashable form, also used for deterministic ordering."""
        if self._key is None:
            self._key = (
                self.nrows,
                self.ncols,
                tuple(sorted((i, j, self.field.show(v)) for (i, j), v in self.data.items())),
            )
        return self._key

    def __hash__(self):
        return hash(self.key())

    def is_zero(self):
        return not self.data

    def apply(self, vec):
        """Matrix times column vector (tuple in, tuple out)."""
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        z = self.field.zero
        out = [z] * self.nrows
        for (i, j), v in self.data.items():
            x = vec[j]
            if x:
                out[i] = out[i] + v * x
        return tuple(out)

    def col(self, j):
        z = self.field.zero
        out = [z] * self.nrows
        for (i, jj), v in self.data.items():
            if jj == j:
                out[i] = v
        return tuple(out)

    def row(self, i):
        z = self.field.zero
        out = [z] * self.ncols
        for (ii, j), v in self.data.items():
            if ii == i:
                out[j] = v
        return tuple(out)

    def transpose(self):
        return SMat(self.ncols, self.nrows, self.field, {(j, i): v for (i, j), v in self.data.items()})

    def kron(self, other):
        """Kronecker product; index (i, k) of the product is i*other.n + k."""
        out = SMat(self.nrows * other.nrows, self.ncols * other.ncols, self.field)
        for (i, j), u in self.data.items():
            for (k, l), v in other.data.items():
                out.data[(i * other.nrows + k, j * other.ncols + l)] = u * v
        return out

    @staticmethod
    def block_diag(blocks):
        field = blocks[0].field
        nr = sum(b.nrows for b in blocks)
        nc = sum(b.ncols for b in blocks)
        out = SMat(nr, nc, field)
        r = c = 0
        for b in blocks:
            for (i, j), v in b.data.items():
                out.data[(r + i, c + j)] = v
            r += b.nrows
            c += b.ncols
        return out

    def embed(self, nrows, ncols, roff, coff):
        """Place this matrix in a larger zero matrix at the given offset."""
        out = SMat(nrows, ncols, self.field)
        for (i, j), v in self.data.items():
            out.data[(roff + i, coff + j)] = v
        return out

    def __repr__(self):
        return f"SMat({self.nrows}x{self.ncols}, nnz={len(self.data)})"


def vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))

def vec_sub(u, v):
    return tuple(a - b for a, b in zip(u, v))

def vec_scale(c, u):
    return tuple(c * a for a in u)

def vec_is_zero(u):
    return not any(u)

def unit_vec(i, n, field):
    return tuple(field.one if j == i else field.zero for j in range(n))

def zero_vec(n, field):
    return (field.zero,) * n


class SpanBasis:
    """Incremental row space in reduced echelon form over sparse rows.

    With track=True each echelon row remembers its expression in the
    originally added generators, so membership tests come with exact
    coordinates (used to express products in a computed basis).
    """

    def __init__(self, ncols, field, track=False):
        self.ncols = ncols
        self.field = field
        self.track = track
        self.rows = {}      # pivot -> dict(col -> scalar), pivot entry == 1
        self.combos = {}    # pivot -> dict(gen index -> scalar)
        self.ngens = 0

    def rank(self):
        return len(self.rows)

    def _reduce(self, r, combo):
        """Reduce sparse dict r against the basis in place; returns leftover."""
        while r:
            p = min(r)
            row = self.rows.get(p)
            if row is None:
                return r, combo, p
            c = r[p]
            for j, v in row.items():
                w = r.get(j)
                s = (w - c * v) if w is not None else -(c * v)
                if s:
                    r[j] = s
                elif j in r:
                    del r[j]
            if combo is not None:
                rc = self.combos[p]
                for g, v in rc.items():
                    w = combo.get(g)
                    s = (w - c * v) if w is not None else -(c * v)
                    if s:
                        combo[g] = s
                    elif g in combo:
                        del combo[g]
        return r, combo, None

    def add(self, vec):
        """Add a generator; returns True if it enlarged the span."""
        gen = self.ngens
        self.ngens += 1
        r = self._sparsify(vec)
        combo = {gen: self.field.one} if self.track else None
        r, combo, p = self._reduce(r, combo)
        if p is None:
            return False
        c = r[p]
        if c != self.field.one:
            inv = self.field.one / c
            r = {j: inv * v for j, v in r.items()}
            if combo is not None:
                combo = {g: inv * v for g, v in combo.items()}
        # back-substitute into existing rows to keep full RREF
        for q, row in list(self.rows.items()):
            c2 = row.get(p)
            if c2:
                for j, v in r.items():
                    w = row.get(j)
                    s = (w - c2 * v) if w is not None else -(c2 * v)
                    if s:
                        row[j] = s
                    elif j in row:
                        del row[j]
                if combo is not None:
                    qc = self.combos[q]
                    for g, v in combo.items():
                        w = qc.get(g)
                        s = (w - c2 * v) if w is not None else -(c2 * v)
                        if s:
                            qc[g] = s
                        elif g in qc:
                            del qc[g]
        self.rows[p] = r
        if combo is not None:
            self.combos[p] = combo
        return True

    def _sparsify(self, vec):
        if isinstance(vec, dict):
            return {j: v for j, v in vec.items() if v}
        return {j: v for j, v in enumerate(vec) if v}

    def contains(self, vec):
        r = self._sparsify(vec)
        r, _, p = self._reduce(r, None)
        return p is None

    def coords(self, vec):
        """Express vec in the original generators; None if not in span."""
        if not self.track:
            raise RuntimeError("SpanBasis built without tracking")
        r = self._sparsify(vec)
        combo = {}
        r, combo, p = self._reduce(r, combo)
        if p is not None:
            return None
        return {g: -v for g, v in combo.items()}

    def residual(self, vec):
        """vec reduced modulo the span (sparse dict)."""
        r = self._sparsify(vec)
        while r:
            p = min(r)
            row = self.rows.get(p)
            if row is None:
                break
            c = r[p]
            for j, v in row.items():
                w = r.get(j)
                s = (w - c * v) if w is not None else -(c * v)
                if s:
                    r[j] = s
                elif j in r:
                    del r[j]
        return r

    def basis_vectors(self):
        z = self.field.zero
        out = []
        for p in sorted(self.rows):
            row = self.rows[p]
            out.append(tuple(row.get(j, z) for j in range(self.ncols)))
        return out

    def pivots(self):
        return sorted(self.rows)


class CoordBasis:
    """An independent family kept out of a generator stream.

    try_add keeps a vector only if it enlarges the span; coords_vec then
    expresses vectors in the kept family (positions, not generator ids).
    """

    def __init__(self, ncols, field):
        self.ncols = ncols
        self.field = field
        self.span = SpanBasis(ncols, field, track=True)
        self.kept = []          # kept vectors, in order
        self._pos = {}          # generator id -> position

    def try_add(self, vec):
        gen = self.span.ngens
        if self.span.add(vec):
            self._pos[gen] = len(self.kept)
            self.kept.append(vec)
            return True
        return False

    def rank(self):
        return len(self.kept)

    def contains(self, vec):
        return self.span.contains(vec)

    def coords_vec(self, vec):
        c = self.span.coords(vec)
        if c is None:
            return None
        out = [self.field.zero] * len(self.kept)
        for g, v in c.items():
            out[self._pos[g]] = v
        return tuple(out)


def span_basis(vectors, ncols, field):
    sb = SpanBasis(ncols, field)
    for v in vectors:
        sb.add(v)
    return sb


def rank(mat: SMat) -> int:
    sb = SpanBasis(mat.ncols, mat.field)
    byrow = {}
    for (i, j), v in mat.data.items():
        byrow.setdefault(i, {})[j] = v
    for i in sorted(byrow):
        sb.add(byrow[i])
    return sb.rank()


def kernel_basis(mat: SMat):
    """Basis (list of tuples) of {x : mat @ x = 0}."""
    n = mat.ncols
    field = mat.field
    bycol = {}
    for (i, j), v in mat.data.items():
        bycol.setdefault(j, {})[i] = v
    sb = SpanBasis(mat.nrows, field, track=True)
    out = []
    for j in range(n):
        col = bycol.get(j, {})
        if not sb.add(dict(col)):
            # column j is a combination of the previous independent columns
            c = sb.coords(col) or {}
            vec = [field.zero] * n
            for g, v in c.items():
                vec[g] = -v
            vec[j] = field.one
            out.append(tuple(vec))
    return out


def solve(mat: SMat, target):
    """One solution x of mat @ x = target (tuple), or None."""
    field = mat.field
    sb = SpanBasis(mat.nrows, field, track=True)
    for j in range(mat.ncols):
        col = {}
        for (i, jj), v in mat.data.items():
            if jj == j:
                col[i] = v
        sb.add(col)
    t = {i: v for i, v in enumerate(target) if v}
    c = sb.coords(t)
    if c is None:
        return None
    x = [field.zero] * mat.ncols
    for g, v in c.items():
        x[g] = v
    return tuple(x)


def solve_matrix(A: SMat, B: SMat):
    """X with A @ X = B, or None.  Solves column by column."""
    cols = []
    for j in range(B.ncols):
        x = solve(A, B.col(j))
        if x is None:
            return None
        cols.append(x)
    return SMat.from_cols(cols, A.ncols, A.field)


def inverse(mat: SMat):
    if mat.nrows != mat.ncols:
        return None
    inv = solve_matrix(mat, SMat.identity(mat.nrows, mat.field))
    if inv is None:
        return None
    if (mat @ inv) != SMat.identity(mat.nrows, mat.field):
        return None
    return inv


def is_injective(mat: SMat) -> bool:
    return rank(mat) == mat.ncols


def is_surjective(mat: SMat) -> bool:
    return rank(mat) == mat.nrows


class Quotient:
    """Quotient of F^n by a subspace, with projection and a linear section.

    proj @ lift = identity on the quotient; ker(proj) is exactly the
    subspace.  Quotient coordinates are the non-pivot coordinates of the
    subspace's reduced echelon form.
    """

    def __init__(self, subspace: SpanBasis, n: int, field: Field):
        self.n = n
        self.field = field
        self.sub = subspace
        piv = set(subspace.pivots())
        self.free = [j for j in range(n) if j not in piv]
        self.dim = len(self.free)
        pos = {j: k for k, j in enumerate(self.free)}
        proj = SMat(self.dim, n, field)
        for j in range(n):
            r = subspace.residual({j: field.one})
            for jj, v in r.items():
                proj.data[(pos[jj], j)] = v
        self.proj = proj
        lift = SMat(n, self.dim, field)
        for k, j in enumerate(self.free):
            lift.data[(j, k)] = field.one
        self.lift = lift

    def push(self, vec):
        return self.proj.apply(vec)

    def induced(self, op: SMat) -> SMat:
        """Matrix of an operator on F^n that preserves the subspace."""
        return self.proj @ op @ self.lift
