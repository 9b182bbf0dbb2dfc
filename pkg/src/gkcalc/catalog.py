"""Named construction catalog and the seeded random instance corpus.

The verification suites draw their test objects from here so that runs
are reproducible: every randomized choice goes through an explicit
random.Random seeded from the command line.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .algebras import (GAlgebra, base_field_algebra, crossed_product,
                       direct_sum, group_algebra, make_algebra, matrix_algebra,
                       tensor)
from .fields import Field, RATIONAL
from .groups import (FiniteGroup, cyclic_group, klein_four, make_group,
                     symmetric_group_3, trivial_group)
from .linalg import SMat


GROUPS = {
    "triv": trivial_group,
    "Z2": lambda: cyclic_group(2),
    "Z3": lambda: cyclic_group(3),
    "Z4": lambda: cyclic_group(4),
    "Z2xZ2": klein_four,
    "S3": symmetric_group_3,
}


def swap_algebra(field, group=None):
    """F + F with the coordinates swapped by the order-two generator."""
    g = group or cyclic_group(2)
    one, zero = field.one, field.zero
    structure = [[[one, zero], [zero, zero]], [[zero, zero], [zero, one]]]
    action = []
    for x in g.elements():
        if x == g.identity or g.mul(x, x) != g.identity:
            action.append([[one, zero], [zero, one]])
        else:
            action.append([[zero, one], [one, zero]])
    return make_algebra(field, g, structure, action=action, unit=[one, one],
                        label=f"{field.tag}^2-swap")


def quadratik_corpus(field: Field, seed: int, count: int = 10):
    """Seeded list of quadratik algebras with dims 1..6 over the four
    acceptance groups."""
    rng = random.Random(seed)
    groups = [cyclic_group(2), cyclic_group(3), klein_four(), symmetric_group_3()]
    out = []
    while len(out) < count:
        g = rng.choice(groups)
        kind = rng.choice(["field", "group-algebra", "swap", "matrix", "sum"])
        if kind == "field":
            a = base_field_algebra(field, g)
        elif kind == "group-algebra":
            h = cyclic_group(rng.choice([2, 3]))
            if h.order == g.order and g.is_abelian():
                a = group_algebra(field, g)
            else:
                a = _translation_algebra(field, g)
        elif kind == "swap":
            if g.order % 2 == 0:
                a = swap_algebra(field, g) if g.order == 2 else \
                    _translation_algebra(field, g)
            else:
                a = base_field_algebra(field, g)
        elif kind == "matrix":
            a = matrix_algebra(base_field_algebra(field, g), 2)
        else:
            a = direct_sum(base_field_algebra(field, g),
                           _translation_algebra(field, g))
        if a.dim <= 6 and a.is_quadratik():
            out.append(a)
    return out


def _translation_algebra(field, g: FiniteGroup):
    """The group algebra of g acted on by g through conjugation."""
    a = group_algebra(field, g)
    action = []
    for x in g.elements():
        m = SMat(g.order, g.order, field)
        xi = g.inv[x]
        for h in g.elements():
            m.data[(g.mul(g.mul(x, h), xi), h)] = field.one
        action.append(m)
    return GAlgebra(field, g, g.order, table=a.table(), action=tuple(action),
                    unit=a.unit, label=f"{field.tag}[{g.label}]-conj",
                    quadratik_hint=True)


def nilpotent_line(field, dim=1):
    """The square-zero algebra on `dim` generators (not quadratik)."""
    zero = field.zero
    structure = [[[zero] * dim for _ in range(dim)] for _ in range(dim)]
    return make_algebra(field, trivial_group(), structure, label=f"null{dim}")
