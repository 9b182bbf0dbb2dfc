"""Finite groups given by multiplication tables."""

from __future__ import annotations

from itertools import product


class GroupError(ValueError):
    def __init__(self, code, msg=""):
        super().__init__(msg or code)
        self.code = code


class FiniteGroup:
    """Group on indices 0..n-1 with a validated Cayley table."""

    def __init__(self, mult, identity, inv, label=""):
        self.mult = mult
        self.identity = identity
        self.inv = inv
        self.order = len(mult)
        self.label = label or f"group{self.order}"

    def mul(self, a, b):
        return self.mult[a][b]

    def elements(self):
        return range(self.order)

    def is_abelian(self):
        n = self.order
        return all(self.mult[a][b] == self.mult[b][a] for a in range(n) for b in range(n))

    def key(self):
        return self.mult

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and self.mult == other.mult

    def __hash__(self):
        return hash(self.mult)

    def __repr__(self):
        return f"FiniteGroup({self.label}, order={self.order})"

    def direct_product(self, other):
        n, m = self.order, other.order
        idx = lambda a, b: a * m + b
        table = [[0] * (n * m) for _ in range(n * m)]
        for a1, b1 in product(range(n), range(m)):
            for a2, b2 in product(range(n), range(m)):
                table[idx(a1, b1)][idx(a2, b2)] = idx(self.mul(a1, a2), other.mul(b1, b2))
        g = make_group(tuple(tuple(r) for r in table))
        g.label = f"{self.label}x{other.label}"
        return g

    def subgroup(self, elems):
        """Subgroup on the given element indices; returns (H, embedding).

        embedding[i] is the index in self of the i-th element of H.
        """
        elems = sorted(set(elems))
        pos = {e: i for i, e in enumerate(elems)}
        if self.identity not in pos:
            raise GroupError("NOT_SUBGROUP", "identity missing")
        table = []
        for a in elems:
            row = []
            for b in elems:
                c = self.mul(a, b)
                if c not in pos:
                    raise GroupError("NOT_SUBGROUP", f"not closed: {a}*{b}={c}")
                row.append(pos[c])
            table.append(tuple(row))
        h = make_group(tuple(table))
        h.label = f"{self.label}|sub{len(elems)}"
        return h, list(elems)

    def cosets(self, embedding):
        """Left cosets gH for the subgroup given by its embedding list.

        Returns a transversal (list of smallest representatives, sorted) and
        a map from every group element to (transversal position, h index in
        the subgroup ordering), i.e. g = rep * embedding[h].
        """
        hset = list(embedding)
        seen = {}
        reps = []
        for g in range(self.order):
            if g in seen:
                continue
            members = [self.mul(g, h) for h in hset]
            rep = min(members)
            reps.append(rep)
            for h_i, x in enumerate([self.mul(rep, h) for h in hset]):
                seen[x] = (len(reps) - 1, h_i)
        reps_sorted = sorted(reps)
        order = {r: k for k, r in enumerate(reps_sorted)}
        decomp = {}
        for g, (old, h_i) in seen.items():
            decomp[g] = (order[reps[old]], h_i)
        return reps_sorted, decomp


def make_group(mult, label="") -> FiniteGroup:
    """Validate a Cayley table (tuple of tuples of indices)."""
    n = len(mult)
    for row in mult:
        if len(row) != n:
            raise GroupError("NOT_ASSOCIATIVE", "table is not square")
        for v in row:
            if not (0 <= v < n):
                raise GroupError("NOT_ASSOCIATIVE", "entry out of range")
    identity = None
    for e in range(n):
        if all(mult[e][x] == x and mult[x][e] == x for x in range(n)):
            identity = e
            break
    if identity is None:
        raise GroupError("NO_IDENTITY")
    inv = [None] * n
    for a in range(n):
        for b in range(n):
            if mult[a][b] == identity and mult[b][a] == identity:
                inv[a] = b
                break
        if inv[a] is None:
            raise GroupError("NO_INVERSE", f"element {a} has no inverse")
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if mult[mult[a][b]][c] != mult[a][mult[b][c]]:
                    raise GroupError("NOT_ASSOCIATIVE", f"({a}*{b})*{c} != {a}*({b}*{c})")
    g = FiniteGroup(tuple(tuple(r) for r in mult), identity, tuple(inv), label)
    return g


def trivial_group() -> FiniteGroup:
    return make_group(((0,),), "triv")


def cyclic_group(n: int) -> FiniteGroup:
    table = tuple(tuple((a + b) % n for b in range(n)) for a in range(n))
    return make_group(table, f"Z{n}")


def klein_four() -> FiniteGroup:
    g = cyclic_group(2).direct_product(cyclic_group(2))
    g.label = "Z2xZ2"
    return g


def symmetric_group_3() -> FiniteGroup:
    perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (2, 1, 0), (1, 0, 2)]
    pos = {p: i for i, p in enumerate(perms)}
    # composition p*q = "apply p first, then q" so that the table is a
    # left action on points via the inverse; any fixed convention works.
    table = []
    for p in perms:
        row = []
        for q in perms:
            row.append(pos[tuple(q[p[k]] for k in range(3))])
        table.append(tuple(row))
    g = make_group(tuple(table), "S3")
    return g
