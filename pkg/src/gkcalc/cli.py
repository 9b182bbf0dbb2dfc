"""Command-line entry points.

Subcommands: construct, verify, reduce, green-julg, descent, induce,
morita.  Environments are single JSON files; exact scalars are strings.
Exit codes: 0 all checks pass, 1 any FAIL, 2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import envio
from .algebras import (AlgebraError, base_field_algebra, check_hom,
                       crossed_product, direct_sum, group_algebra,
                       identity_hom, matrix_algebra, tensor)
from .catalog import GROUPS, swap_algebra
from .fields import Field
from .linalg import SMat
from .modules import compact_operators, free_module, module_over_self
from .terms import GKError, corner_embedding


def default_field():
    return Field(os.environ.get("GK_FIELD", "Q"))


# --------------------------------------------------------------------------
# verification suites
# --------------------------------------------------------------------------

def _entry(check, tag, status, details=""):
    return {"check": check, "tag": tag, "status": status, "details": details}


def suite_lemma_2_22(env, rng):
    """A ~ K_A(A) for every registered quadratik algebra."""
    out = []
    for name, a in sorted(env.algebras.items()):
        if not a.is_quadratik():
            witness = _non_quadratik_witness(a)
            out.append(_entry(f"compacts-iso[{name}]", "lemma-2.22", "FAIL",
                              f"not quadratik; products span misses {witness}"))
            continue
        m = module_over_self(a)
        k = compact_operators(m)
        alg = k.as_algebra()
        cols = [k.coords_vec(a.left_mult(a.basis_vec(i))) for i in range(a.dim)]
        if any(c is None for c in cols):
            out.append(_entry(f"compacts-iso[{name}]", "lemma-2.22", "FAIL",
                              "left multiplication is not compact"))
            continue
        try:
            chi = check_hom(SMat.from_cols(cols, alg.dim, a.field), a, alg)
            ok = chi.is_bijective()
        except AlgebraError as err:
            out.append(_entry(f"compacts-iso[{name}]", "lemma-2.22", "FAIL", str(err)))
            continue
        out.append(_entry(f"compacts-iso[{name}]", "lemma-2.22",
                          "PASS" if ok else "FAIL",
                          "" if ok else "left multiplication not bijective onto compacts"))
    return out


def _non_quadratik_witness(a):
    from .linalg import SpanBasis
    sb = SpanBasis(a.dim, a.field)
    for i in range(a.dim):
        for j in range(a.dim):
            sb.add(dict(a.mul_pair(i, j)))
    missing = [i for i in range(a.dim) if not sb.contains({i: a.field.one})]
    return f"basis indices {missing}"


def suite_lemma_2_23(env, rng):
    """M_2(K_A(A)) ~ K_A(A^2)."""
    out = []
    for name, a in sorted(env.algebras.items()):
        if not a.is_quadratik():
            continue
        m2 = matrix_algebra(a, 2)
        k2 = compact_operators(free_module(a, 2))
        ok = m2.dim == k2.dim
        if ok:
            cols = []
            for i in range(2):
                for j in range(2):
                    for t in range(a.dim):
                        op = a.left_mult(a.basis_vec(t)).embed(
                            2 * a.dim, 2 * a.dim, i * a.dim, j * a.dim)
                        c = k2.coords_vec(op)
                        if c is None:
                            ok = False
                            break
                        cols.append(c)
            if ok:
                try:
                    iso = check_hom(SMat.from_cols(cols, k2.dim, a.field), m2,
                                    k2.as_algebra())
                    ok = iso.is_bijective()
                except AlgebraError:
                    ok = False
        out.append(_entry(f"matrix-compacts[{name}]", "lemma-2.23",
                          "PASS" if ok else "FAIL"))
    return out


def suite_prop_12_3(env, rng):
    from .functors import descent_iso_sigma, FunctorError
    out = []
    for name, a in sorted(env.algebras.items()):
        if not a.is_quadratik():
            continue
        try:
            sig = descent_iso_sigma(a, module_over_self(a))
            out.append(_entry(f"descent-iso[{name}]", "prop-12.3", "PASS",
                              f"dims {sig.source.dim} = {sig.target.dim}"))
        except FunctorError as err:
            out.append(_entry(f"descent-iso[{name}]", "prop-12.3", "FAIL", str(err)))
    return out


def suite_prop_8_6(env, rng):
    from .modules import ModuleError, compacts_over_compacts
    out = []
    for name, a in sorted(env.algebras.items()):
        if not a.is_quadratik():
            continue
        try:
            data, pi = compacts_over_compacts(a, module_over_self(a))
            out.append(_entry(f"corner-compacts[{name}]", "prop-8.6", "PASS",
                              f"bijective on dimension {pi.source.dim}"))
        except (ModuleError, AlgebraError) as err:
            out.append(_entry(f"corner-compacts[{name}]", "prop-8.6", "FAIL", str(err)))
    return out


def suite_green_julg(env, rng):
    from .greenjulg import GreenJulgError, green_julg_report
    out = []
    for name, a in sorted(env.algebras.items()):
        if not a.is_quadratik():
            continue
        try:
            out.extend(green_julg_report(a))
        except GreenJulgError as err:
            out.append(_entry(f"green-julg[{name}]", "green-julg", "FAIL", str(err)))
    return out


def suite_lemma_10_4(env, rng):
    from .dses import from_ring_hom, to_standard_form
    from .nabla import NablaError, replay_lemma_10_4
    out = []
    for name, a in sorted(env.algebras.items()):
        if not a.is_quadratik():
            continue
        try:
            std, _ = to_standard_form(from_ring_hom(identity_hom(a)))
            steps = replay_lemma_10_4(std)
            out.append(_entry(f"residue-replay[{name}]", "lemma-10.4", "PASS",
                              "+".join(s.rule for s in steps)))
        except (NablaError, GKError) as err:
            out.append(_entry(f"residue-replay[{name}]", "lemma-10.4", "FAIL", str(err)))
    return out


SUITES = {
    "lemma-2.22": suite_lemma_2_22,
    "lemma-2.23": suite_lemma_2_23,
    "prop-8.6": suite_prop_8_6,
    "prop-12.3": suite_prop_12_3,
    "lemma-10.4": suite_lemma_10_4,
    "green-julg": suite_green_julg,
}


# --------------------------------------------------------------------------
# construct mini-language
# --------------------------------------------------------------------------

def apply_construct(env, spec: str):
    """name=kind:args, e.g. A=field:Z2, B=matrix:A:2, e=corner:A."""
    name, _, rhs = spec.partition("=")
    if not rhs:
        raise EnvError_usage(f"bad construct spec {spec!r}")
    kind, *args = rhs.split(":")
    field = env.field or default_field()
    if kind == "group":
        env.groups[name] = GROUPS[args[0]]()
    elif kind == "field":
        g = env.groups.get(args[0]) if args else None
        if args and g is None:
            g = GROUPS[args[0]]()
        env.algebras[name] = base_field_algebra(field, g, label=name)
    elif kind == "group-algebra":
        g = env.groups.get(args[0]) or GROUPS[args[0]]()
        env.algebras[name] = group_algebra(field, g)
    elif kind == "swap":
        g = env.groups.get(args[0]) or GROUPS[args[0]]()
        env.algebras[name] = swap_algebra(field, g)
    elif kind == "matrix":
        env.algebras[name] = matrix_algebra(env.handle("algebras", args[0]),
                                            int(args[1]))
    elif kind == "tensor":
        env.algebras[name] = tensor(env.handle("algebras", args[0]),
                                    env.handle("algebras", args[1]))
    elif kind == "crossed":
        env.algebras[name] = crossed_product(env.handle("algebras", args[0]))
    elif kind == "sum":
        env.algebras[name] = direct_sum(env.handle("algebras", args[0]),
                                        env.handle("algebras", args[1]))
    elif kind == "self-module":
        env.modules[name] = module_over_self(env.handle("algebras", args[0]))
    elif kind == "free-module":
        env.modules[name] = free_module(env.handle("algebras", args[0]),
                                        int(args[1]))
    elif kind == "corner":
        a = env.handle("algebras", args[0])
        mod = env.handle("modules", args[1]) if len(args) > 1 else None
        env.corners[name] = corner_embedding(a, mod, label=name)
    elif kind == "id-hom":
        env.homs[name] = identity_hom(env.handle("algebras", args[0]))
    else:
        raise EnvError_usage(f"unknown construction kind {kind!r}")
    return env


class EnvError_usage(ValueError):
    pass


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_construct(args):
    env = _load_env(args.env) if args.env else envio.Environment(default_field())
    if env.field is None:
        env.field = default_field()
    for spec in args.spec:
        apply_construct(env, spec)
    text = envio.dumps(env)
    _write_out(args.out, text)
    return 0


def cmd_verify(args):
    env = _load_env(args.env)
    rng = random.Random(args.seed)
    fn = SUITES.get(args.suite)
    if fn is None:
        print(f"UNKNOWN_SUITE: {args.suite}; known: {', '.join(sorted(SUITES))}",
              file=sys.stderr)
        return 2
    entries = fn(env, rng)
    report = {"suite": args.suite, "entries": entries}
    _write_out(args.out, json.dumps(report, indent=1, sort_keys=True) + "\n")
    failed = False
    for e in entries:
        print(f"[{e['status']:>4}] {e['check']} ({e['tag']})"
              + (f" - {e['details']}" if e["details"] else ""))
        failed = failed or e["status"] == "FAIL"
    return 1 if failed else 0


def cmd_reduce(args):
    from .nabla import NablaError, reduce_to_level0
    env = _load_env(args.env)
    term = env.handle("terms", args.term)
    try:
        res = reduce_to_level0(term)
        res.verify_witness()
    except (NablaError, GKError) as err:
        print(f"FAIL: {err}", file=sys.stderr)
        return 1
    payload = {
        "level0_words": len(res.w.items),
        "level0": repr(res.w),
        "P_label": res.P.label,
        "P_matrix": envio.mat_to_rows(res.P.source.field, res.P.mat),
        "Q": repr(res.Q),
        "trace": res.trace,
        "witness": "P.Q certified to the identity",
    }
    _write_out(args.out, json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"reduced to level 0 in {len(res.p_steps)} eliminations; "
          f"{len(res.w.items)} words remain")
    return 0


def cmd_green_julg(args):
    from .greenjulg import GreenJulgError, green_julg_report
    env = _load_env(args.env) if args.env else None
    if args.algebra and env:
        a = env.handle("algebras", args.algebra)
    else:
        field = default_field()
        g = GROUPS[args.group or "Z2"]()
        a = base_field_algebra(field, g)
    try:
        entries = green_julg_report(a)
    except GreenJulgError as err:
        print(f"FAIL: {err}", file=sys.stderr)
        return 1
    _write_out(args.out, json.dumps({"entries": entries}, indent=1,
                                    sort_keys=True) + "\n")
    bad = False
    for e in entries:
        print(f"[{e['status']:>20}] {e['check']}"
              + (f" - {e['details']}" if e["details"] else ""))
        bad = bad or e["status"] == "FAIL"
    return 1 if bad else 0


def cmd_descent(args):
    from .functors import DescentFunctor
    env = _load_env(args.env)
    df = DescentFunctor()
    t = env.handle("terms", args.term)
    image = df.on_term(t)
    _write_out(args.out, json.dumps({"descended": repr(image)}, indent=1) + "\n")
    print(repr(image))
    return 0


def cmd_induce(args):
    from .functors import induce_algebra
    env = _load_env(args.env)
    g = env.handle("groups", args.group)
    a = env.handle("algebras", args.algebra)
    emb = [int(x) for x in args.embedding.split(",")]
    ind = induce_algebra(g, emb, a)
    out_env = envio.Environment(env.field)
    out_env.algebras[f"Ind({args.algebra})"] = ind.algebra
    _write_out(args.out, envio.dumps(out_env))
    print(f"induced algebra of dimension {ind.algebra.dim} "
          f"(index {len(ind.transversal)})")
    return 0


def cmd_morita(args):
    from .functors import FunctorError, MoritaData, morita_to_gk
    env = _load_env(args.env)
    a = env.handle("algebras", args.a)
    b = env.handle("algebras", args.b)
    e = env.handle("modules", args.e)
    f = env.handle("modules", args.f)
    m = env.handle("homs", args.m)
    n = env.handle("homs", args.n)
    try:
        tab, tba, cert = morita_to_gk(MoritaData(a, b, e, f, m, n))
    except FunctorError as err:
        print(f"FAIL: {err}", file=sys.stderr)
        return 1
    payload = {"term_ab": repr(tab), "term_ba": repr(tba),
               "roundtrip_ab": cert["ab_then_ba"]["roundtrip"],
               "roundtrip_ba": cert["ba_then_ab"]["roundtrip"]}
    _write_out(args.out, json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print("certified equivalence terms constructed")
    return 0


def _load_env(path):
    if path is None:
        print("--env is required", file=sys.stderr)
        raise SystemExit(2)
    try:
        with open(path) as fh:
            return envio.loads(fh.read())
    except FileNotFoundError:
        print(f"no such file: {path}", file=sys.stderr)
        raise SystemExit(2)
    except json.JSONDecodeError as err:
        print(f"parse error in {path}: line {err.lineno} column {err.colno}: "
              f"{err.msg}", file=sys.stderr)
        raise SystemExit(2)


def _write_out(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="gkcalc",
                                 description="exact equivariant GK calculus")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("construct", help="build named objects into an environment")
    p.add_argument("--env")
    p.add_argument("--out", required=True)
    p.add_argument("spec", nargs="+")
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("verify", help="run a named identity suite")
    p.add_argument("--env", required=True)
    p.add_argument("--suite", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("reduce", help="reduce a term to level 0")
    p.add_argument("--env", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("green-julg", help="run the averaging-isomorphism battery")
    p.add_argument("--env")
    p.add_argument("--algebra")
    p.add_argument("--group")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_green_julg)

    p = sub.add_parser("descent", help="apply the crossed-product functor to a term")
    p.add_argument("--env", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_descent)

    p = sub.add_parser("induce", help="induce an algebra along a subgroup")
    p.add_argument("--env", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--algebra", required=True)
    p.add_argument("--embedding", required=True,
                   help="comma-separated subgroup element indices")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_induce)

    p = sub.add_parser("morita", help="build certified equivalence terms")
    p.add_argument("--env", required=True)
    for flag in ("a", "b", "e", "f", "m", "n"):
        p.add_argument(f"--{flag}", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_morita)

    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0,) else 0
    try:
        return args.fn(args)
    except EnvError_usage as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except (envio.EnvError, GKError, AlgebraError) as err:
        print(f"FAIL: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
