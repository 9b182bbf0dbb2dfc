"""Environment registry and the JSON interchange format.

One self-describing JSON document holds named groups, algebras, modules,
homs, split sequences and terms.  Exact scalars are serialized as
strings ("p/q", "a/b+c/d*i", or a residue mod p), so files round-trip
bit-exactly through parse/serialize.
"""

from __future__ import annotations

import hashlib
import json
import re

from .algebras import AlgebraHom, GAlgebra
from .fields import Field
from .groups import FiniteGroup, make_group
from .linalg import SMat
from .modules import FunctionalModule
from .terms import (CornerEmbedding, GKTerm, Gen, SplitExactSeq, Word,
                    corner_embedding, corner_inv, delta_gen, hom_gen,
                    make_split_exact)


class EnvError(ValueError):
    def __init__(self, code, msg=""):
        super().__init__(msg or code)
        self.code = code


class Environment:
    """Named registries with content-addressed handles."""

    def __init__(self, field: Field = None):
        self.field = field
        self.groups = {}
        self.algebras = {}
        self.modules = {}
        self.homs = {}
        self.sequences = {}
        self.corners = {}
        self.terms = {}

    def handle(self, kind, name):
        reg = getattr(self, kind)
        if name not in reg:
            raise EnvError("UNKNOWN_SUITE" if kind == "suites" else "UNREALIZED_GENERATOR",
                           f"no {kind[:-1]} named {name!r}")
        return reg[name]

    def content_id(self, obj) -> str:
        if isinstance(obj, GAlgebra):
            return obj.digest
        if isinstance(obj, AlgebraHom):
            return hashlib.sha1(repr(obj.key()).encode()).hexdigest()[:16]
        return hashlib.sha1(repr(obj).encode()).hexdigest()[:16]


# --- scalar and matrix codecs ---

def show_scalar(field, v):
    return field.show(v)


def mat_to_rows(field, m: SMat):
    return [[field.show(v) for v in m.row(i)] for i in range(m.nrows)]


def rows_to_mat(field, rows):
    return SMat.from_rows([[field.parse(s) for s in row] for row in rows], field)


def group_to_json(g: FiniteGroup):
    return {"order": g.order, "mult": [list(r) for r in g.mult]}


def group_from_json(d) -> FiniteGroup:
    return make_group(tuple(tuple(r) for r in d["mult"]))


def algebra_to_json(a: GAlgebra):
    field = a.field
    structure = []
    for i in range(a.dim):
        row = []
        for j in range(a.dim):
            vec = [field.zero] * a.dim
            for k, c in a.mul_pair(i, j):
                vec[k] = c
            row.append([field.show(c) for c in vec])
        structure.append(row)
    return {
        "field": field.tag,
        "dim": a.dim,
        "structure": structure,
        "unit": [field.show(c) for c in a.unit] if a.unit is not None else None,
        "group": group_to_json(a.group),
        "action": [mat_to_rows(field, m) for m in a.action],
        "label": a.label,
    }


def algebra_from_json(d) -> GAlgebra:
    field = Field(d["field"])
    group = group_from_json(d["group"])
    dim = d["dim"]
    table = []
    for i in range(dim):
        row = []
        for j in range(dim):
            ent = tuple((k, field.parse(s))
                        for k, s in enumerate(d["structure"][i][j])
                        if field.parse(s))
            row.append(ent)
        table.append(tuple(row))
    action = tuple(rows_to_mat(field, rows) for rows in d["action"])
    unit = tuple(field.parse(s) for s in d["unit"]) if d.get("unit") else None
    return GAlgebra(field, group, dim, table=tuple(table), action=action,
                    unit=unit, label=d.get("label", ""))


def module_to_json(env: Environment, name_of, m: FunctionalModule):
    field = m.field
    return {
        "base": name_of(m.base),
        "dim": m.dim,
        "raction": [mat_to_rows(field, r) for r in m.rmats],
        "functionals": [mat_to_rows(field, f) for f in m.functionals],
        "gaction": [mat_to_rows(field, s) for s in m.gaction],
        "label": m.label,
    }


def module_from_json(env: Environment, d) -> FunctionalModule:
    base = env.handle("algebras", d["base"])
    field = base.field
    return FunctionalModule(
        base, d["dim"],
        [rows_to_mat(field, r) for r in d["raction"]],
        [rows_to_mat(field, f) for f in d["functionals"]],
        [rows_to_mat(field, s) for s in d["gaction"]],
        label=d.get("label", ""))


def hom_to_json(env, name_of, h: AlgebraHom):
    return {"source": name_of(h.source), "target": name_of(h.target),
            "matrix": mat_to_rows(h.source.field, h.mat),
            "equivariant": h.equivariant, "label": h.label}


def hom_from_json(env, d) -> AlgebraHom:
    src = env.handle("algebras", d["source"])
    tgt = env.handle("algebras", d["target"])
    from .algebras import check_hom
    return check_hom(rows_to_mat(src.field, d["matrix"]), src, tgt,
                     require_equivariant=d.get("equivariant", True),
                     label=d.get("label", ""))


def sequence_to_json(env, name_of, s: SplitExactSeq):
    return {"j": hom_to_json(env, name_of, s.j),
            "f": hom_to_json(env, name_of, s.f),
            "s": hom_to_json(env, name_of, s.s), "label": s.label}


def sequence_from_json(env, d) -> SplitExactSeq:
    return make_split_exact(hom_from_json(env, d["j"]), hom_from_json(env, d["f"]),
                            hom_from_json(env, d["s"]), label=d.get("label", ""))


def corner_to_json(env, name_of, e: CornerEmbedding):
    mod = None
    if e.module is not None:
        for k, v in env.modules.items():
            if v is e.module:
                mod = k
    return {"algebra": name_of(e.source), "module": mod, "label": e.label}


def corner_from_json(env, d) -> CornerEmbedding:
    a = env.handle("algebras", d["algebra"])
    mod = env.handle("modules", d["module"]) if d.get("module") else None
    return corner_embedding(a, mod, label=d.get("label", ""))


# --- term serialization (s-expression-like text) ---

def term_to_text(env: Environment, t: GKTerm) -> str:
    def name_of_gen(g: Gen):
        reg, prefix = {"hom": (env.homs, "hom"),
                       "cornerinv": (env.corners, "cornerinv"),
                       "delta": (env.sequences, "delta")}[g.kind]
        for k, v in reg.items():
            if g.kind == "hom" and isinstance(v, AlgebraHom) and v.key() == g.data.key():
                return f"({prefix} {k})"
            if g.kind == "cornerinv" and isinstance(v, CornerEmbedding) \
                    and v.key() == g.data.key():
                return f"({prefix} {k})"
            if g.kind == "delta" and isinstance(v, SplitExactSeq) \
                    and v.key() == g.data.key():
                return f"({prefix} {k})"
        raise EnvError("UNREALIZED_GENERATOR", f"unregistered generator {g!r}")

    parts = []
    for coeff, w in t.items:
        body = " ".join(name_of_gen(g) for g in w.gens)
        word = f"(word {body})" if body else "(word)"
        if coeff < 0:
            word = f"(neg {word})" if coeff == -1 else f"(times {coeff} {word})"
        elif coeff != 1:
            word = f"(times {coeff} {word})"
        parts.append(word)
    return f"(sum {' '.join(parts)})" if parts else "(zero)"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def term_from_text(env: Environment, text: str, source=None, target=None) -> GKTerm:
    tokens = _TOKEN.findall(text)
    pos = 0

    def parse():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok != "(":
            return tok
        out = []
        while tokens[pos] != ")":
            out.append(parse())
        pos += 1
        return out

    tree = parse()

    def gen_of(node):
        kind, name = node
        if kind == "hom":
            return hom_gen(env.handle("homs", name))
        if kind == "cornerinv":
            return corner_inv(env.handle("corners", name))
        if kind == "delta":
            return delta_gen(env.handle("sequences", name))
        raise EnvError("UNREALIZED_GENERATOR", f"unknown generator kind {kind!r}")

    def word_of(node):
        assert node[0] == "word"
        gens = [gen_of(ch) for ch in node[1:]]
        if gens:
            return 1, Word(gens)
        if source is None or target is None:
            raise EnvError("UNREALIZED_GENERATOR", "empty word needs endpoints")
        return 1, Word((), source=source, target=target)

    def item_of(node):
        if node[0] == "word":
            return word_of(node)
        if node[0] == "neg":
            c, w = item_of(node[1])
            return -c, w
        if node[0] == "times":
            c, w = item_of(node[2])
            return int(node[1]) * c, w
        raise EnvError("UNREALIZED_GENERATOR", f"unknown term node {node[0]!r}")

    if tree == "zero" or tree == ["zero"]:
        if source is None or target is None:
            raise EnvError("UNREALIZED_GENERATOR", "zero term needs endpoints")
        return GKTerm.zero(source, target)
    assert tree[0] == "sum"
    items = [item_of(ch) for ch in tree[1:]]
    src = items[0][1].source
    tgt = items[0][1].target
    return GKTerm(src, tgt, items)


# --- whole-environment codec ---

def env_to_json(env: Environment):
    names = {}
    for k, a in env.algebras.items():
        names[a.digest] = k

    def name_of(a):
        if a.digest not in names:
            raise EnvError("UNREALIZED_GENERATOR",
                           f"algebra {a.label} is not registered")
        return names[a.digest]

    return {
        "field": env.field.tag if env.field else None,
        "groups": {k: group_to_json(g) for k, g in env.groups.items()},
        "algebras": {k: algebra_to_json(a) for k, a in env.algebras.items()},
        "modules": {k: module_to_json(env, name_of, m)
                    for k, m in env.modules.items()},
        "homs": {k: hom_to_json(env, name_of, h) for k, h in env.homs.items()},
        "sequences": {k: sequence_to_json(env, name_of, s)
                      for k, s in env.sequences.items()},
        "corners": {k: corner_to_json(env, name_of, e)
                    for k, e in env.corners.items()},
        "terms": {k: term_to_text(env, t) for k, t in env.terms.items()},
    }


def env_from_json(d) -> Environment:
    env = Environment(Field(d["field"]) if d.get("field") else None)
    for k, g in d.get("groups", {}).items():
        env.groups[k] = group_from_json(g)
    for k, a in d.get("algebras", {}).items():
        env.algebras[k] = algebra_from_json(a)
    for k, m in d.get("modules", {}).items():
        env.modules[k] = module_from_json(env, m)
    for k, h in d.get("homs", {}).items():
        env.homs[k] = hom_from_json(env, h)
    for k, s in d.get("sequences", {}).items():
        env.sequences[k] = sequence_from_json(env, s)
    for k, e in d.get("corners", {}).items():
        env.corners[k] = corner_from_json(env, e)
    for k, t in d.get("terms", {}).items():
        env.terms[k] = term_from_text(env, t)
    return env


def dumps(env: Environment) -> str:
    return json.dumps(env_to_json(env), indent=1, sort_keys=True) + "\n"


def loads(text: str) -> Environment:
    return env_from_json(json.loads(text))
