"""The CSP bridge: templates built from ontology-mediated queries,
homomorphism and arc-consistency solvers, exact unraveling-entailment,
the CSP-to-TBox encoding, and enriched signature abstraction.

The central contract is homomorphism duality: for an ALC/ALCI TBox and a
Boolean tree query, the certain answer holds exactly when the data's
signature restriction has no homomorphism into the template whose points
are the query-omitting types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .syntax import (
    ABox, And, Atom, Bot, Concept, ELIQ, ELQ, Exists, Forall, Not, Or, Role,
    TBox, Top, concept_names, concept_sort_key, dialect, disjoin,
    roles_of_concept, subconcepts,
)
from .semantics import Interpretation, find_homomorphism, is_model
from .types import (
    closure, kb_consistent, omitting_succ_relation, types_omitting,
)


@dataclass(frozen=True)
class Signature:
    concept_names: frozenset
    role_names: frozenset

    @staticmethod
    def of(concepts=(), roles=()) -> "Signature":
        return Signature(frozenset(concepts), frozenset(roles))

    @staticmethod
    def of_tbox(tbox: TBox) -> "Signature":
        return Signature(frozenset(tbox.concept_names()),
                         frozenset(tbox.role_names()))

    @staticmethod
    def of_abox(abox: ABox) -> "Signature":
        return Signature(frozenset(abox.concept_names()),
                         frozenset(abox.role_names()))

    def union(self, other: "Signature") -> "Signature":
        return Signature(self.concept_names | other.concept_names,
                         self.role_names | other.role_names)

    def covers_abox(self, abox: ABox) -> bool:
        return abox.concept_names() <= self.concept_names and \
            abox.role_names() <= self.role_names


def sig_of_query_concept(c: Concept) -> Signature:
    return Signature(frozenset(concept_names(c)),
                     frozenset(r.name for r in roles_of_concept(c)))


@dataclass(frozen=True)
class Template:
    """A signature ABox with no individual-name significance.

    Points are tracked separately from the assertions: a template point
    may satisfy no positive atom at all (for example the all-negative
    type) and would otherwise disappear from the assertion set.
    """
    abox: ABox
    signature: Signature
    points: tuple

    @staticmethod
    def of(abox: ABox, signature: Optional[Signature] = None) -> "Template":
        sig = signature or Signature.of_abox(abox)
        return Template(abox, sig, tuple(sorted(abox.individuals())))

    def individuals(self):
        return list(self.points)

    def interpretation(self) -> Interpretation:
        base = Interpretation.from_abox(self.abox)
        domain = base.domain | frozenset(self.points)
        return Interpretation(domain, frozenset(), base.concept_ext,
                              base.role_ext)


def restrict_abox(abox: ABox, sigma: Signature) -> ABox:
    """The restriction A|_Sigma; the result may be empty (the explicit
    empty-restriction value)."""
    return ABox(
        frozenset((n, a) for n, a in abox.concept_assertions
                  if n in sigma.concept_names),
        frozenset((n, a, b) for n, a, b in abox.role_assertions
                  if n in sigma.role_names))


# ---------------------------------------------------------------------------
# Homomorphism solving
# ---------------------------------------------------------------------------

def csp_hom(abox: ABox, template: Template) -> Optional[dict]:
    """A homomorphism from the ABox into the template, or None.

    No individual names are preserved.  The empty ABox (an empty
    signature restriction) maps vacuously: the empty map is returned.
    """
    if abox.is_empty() and not abox.individuals():
        return {}
    src = Interpretation.from_abox(abox)
    tgt = template.interpretation()
    if not tgt.domain:
        return None if src.domain else {}
    return find_homomorphism(src, tgt, preserve=())


def csp_arc_consistent(abox: ABox, template: Template) -> bool:
    """Plain arc consistency: False means provably no homomorphism; True
    is only a maybe on cyclic inputs (exact on trees)."""
    tgt = template.interpretation()
    inds = sorted(abox.individuals())
    labels = {a: set() for a in inds}
    for n, a in abox.concept_assertions:
        labels[a].add(n)
    cand = {a: {d for d in tgt.domain
                if all(d in tgt.concept(n) for n in labels[a])}
            for a in inds}
    edges = sorted(abox.role_assertions)
    changed = True
    while changed:
        changed = False
        for n, a, b in edges:
            pairs = tgt.role_ext.get(n, frozenset())
            keep = {d for d in cand[a] if any((d, e) in pairs for e in cand[b])}
            if keep != cand[a]:
                cand[a] = keep
                changed = True
            keep = {e for e in cand[b] if any((d, e) in pairs for d in cand[a])}
            if keep != cand[b]:
                cand[b] = keep
                changed = True
    return all(cand[a] for a in inds)


# ---------------------------------------------------------------------------
# Templates from OMQs
# ---------------------------------------------------------------------------

def template_from_omq(tbox: TBox, q) -> Template:
    """The homomorphism-duality template of the Boolean tree query w.r.t.
    the TBox: individuals are the query-omitting types, with the successor
    relation relativized to query-omitting models.

    Requires an ALC/ALCI TBox (functional roles break the CSP bridge).
    """
    if tbox.functional:
        raise ValueError("template construction requires an ALC/ALCI TBox")
    concept = q.concept if isinstance(q, (ELIQ, ELQ)) else q
    sigma = Signature.of_tbox(tbox).union(sig_of_query_concept(concept))
    omitting = types_omitting(tbox, concept)
    succ = omitting_succ_relation(tbox, concept, omitting)
    ordered = sorted(omitting, key=lambda t: sorted(map(concept_sort_key, t)))
    name = {t: f"t{i}" for i, t in enumerate(ordered)}
    cas = set()
    ras = set()
    for t in ordered:
        for c in t:
            if isinstance(c, Atom) and c.name in sigma.concept_names:
                cas.add((c.name, name[t]))
    for (t, role, t2) in succ:
        if not role.inverted and role.name in sigma.role_names:
            ras.add((role.name, name[t], name[t2]))
    return Template(ABox(frozenset(cas), frozenset(ras)), sigma,
                    tuple(name[t] for t in ordered))


def certain_boolean_eliq_csp(tbox: TBox, abox: ABox, q,
                             template: Optional[Template] = None) -> bool:
    """Certain answer of the Boolean tree query via homomorphism duality.

    An empty template (no omitting type) means no model can avoid the
    query, so every ABox entails it; an empty signature restriction maps
    vacuously otherwise.
    """
    tmpl = template if template is not None else template_from_omq(tbox, q)
    if not tmpl.points:
        return True
    return csp_hom(restrict_abox(abox, tmpl.signature), tmpl) is None


def booleanize_eliq(tbox: TBox, abox: ABox, concept: Concept,
                    individual: str) -> tuple:
    """Reduce answering C(x) at an individual to a Boolean query: mark the
    individual with a fresh concept name P and ask for exists x (P and C).

    Returns (tbox, marked ABox, Boolean query) with the marker name
    recoverable from the query concept.
    """
    if individual not in abox.individuals():
        raise ValueError(f"{individual!r} is not an ABox individual")
    used = tbox.concept_names() | abox.concept_names() | concept_names(concept)
    p = "P_mark"
    i = 0
    while p in used:
        i += 1
        p = f"P_mark{i}"
    marked = ABox(abox.concept_assertions | {(p, individual)},
                  abox.role_assertions)
    return tbox, marked, ELIQ(And(Atom(p), concept), "x")


def certain_answer_eliq_csp(tbox: TBox, abox: ABox, concept: Concept,
                            individual: str) -> bool:
    """Certain answer of the (non-Boolean) tree query at an individual via
    booleanization and homomorphism duality."""
    _, marked, q = booleanize_eliq(tbox, abox, concept, individual)
    return certain_boolean_eliq_csp(tbox, marked, q)


# ---------------------------------------------------------------------------
# Exact unraveling entailment
# ---------------------------------------------------------------------------

def unraveling_entails(tbox: TBox, q, abox: ABox,
                       template: Optional[Template] = None) -> bool:
    """Decide whether the TBox and the *unraveling* of the ABox entail the
    Boolean tree query, without materializing the unraveling.

    The unraveling is a forest with finitely many subtree shapes, indexed
    by (individual, incoming role edge); candidate template values per
    state form a greatest fixpoint of arc consistency respecting the
    non-backtracking condition.  The query is entailed exactly when some
    root state's candidate set empties (no homomorphism exists).
    """
    tmpl = template if template is not None else template_from_omq(tbox, q)
    if not tmpl.points:
        return True
    sigma = tmpl.signature
    tgt = tmpl.interpretation()
    tdom = sorted(tgt.domain)

    labels = {}
    for n, a in abox.concept_assertions:
        if n in sigma.concept_names:
            labels.setdefault(a, set()).add(n)
    succ = {}
    for n, a, b in abox.role_assertions:
        succ.setdefault((a, Role(n)), set()).add(b)
        succ.setdefault((b, Role(n, True)), set()).add(a)
    roles = sorted({Role(n) for n, _, _ in abox.role_assertions} |
                   {Role(n, True) for n, _, _ in abox.role_assertions})

    def base_cand(b):
        need = labels.get(b, ())
        return {d for d in tdom if all(d in tgt.concept(n) for n in need)}

    def transitions(state):
        b, incoming = state
        out = []
        for role in roles:
            for b2 in sorted(succ.get((b, role), ())):
                if incoming is not None:
                    prev_elem, prev_role = incoming
                    if b2 == prev_elem and role == prev_role.inverse():
                        continue  # non-backtracking condition
                out.append((role, (b2, (b, role))))
        return out

    roots = [(a, None) for a in sorted(abox.individuals())]
    cand = {}
    trans = {}
    frontier = list(roots)
    while frontier:
        state = frontier.pop()
        if state in cand:
            continue
        cand[state] = base_cand(state[0])
        trans[state] = transitions(state)
        for _, s2 in trans[state]:
            if s2 not in cand:
                frontier.append(s2)

    def edge_ok(d, role, d2):
        if role.name not in sigma.role_names:
            return True
        pairs = tgt.role_ext.get(role.name, frozenset())
        return ((d, d2) in pairs) if not role.inverted else ((d2, d) in pairs)

    changed = True
    while changed:
        changed = False
        for state in sorted(cand, key=str):
            keep = set()
            for d in cand[state]:
                if all(any(edge_ok(d, role, d2) for d2 in cand[s2])
                       for role, s2 in trans[state]):
                    keep.add(d)
            if keep != cand[state]:
                cand[state] = keep
                changed = True
    return any(not cand[root] for root in roots)


# ---------------------------------------------------------------------------
# Enriched signature abstraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbstractionMap:
    """Per hidden concept name: the fresh symbols (Z, r, s) and the hiding
    concept all r.some s.not Z replacing it."""
    hidden: tuple  # of (name, z name, r name, s name, Concept)

    def hiding_concept(self, name: str) -> Concept:
        for n, _z, _r, _s, h in self.hidden:
            if n == name:
                return h
        raise KeyError(name)

    def as_dict(self):
        return {n: {"Z": z, "r": r, "s": s} for n, z, r, s, _h in self.hidden}


def _substitute_atoms(c: Concept, mapping: dict) -> Concept:
    if isinstance(c, Atom):
        return mapping.get(c.name, c)
    if isinstance(c, Not):
        return Not(_substitute_atoms(c.sub, mapping))
    if isinstance(c, And):
        return And(_substitute_atoms(c.left, mapping),
                   _substitute_atoms(c.right, mapping))
    if isinstance(c, Or):
        return Or(_substitute_atoms(c.left, mapping),
                  _substitute_atoms(c.right, mapping))
    if isinstance(c, Exists):
        return Exists(c.role, _substitute_atoms(c.filler, mapping))
    if isinstance(c, Forall):
        return Forall(c.role, _substitute_atoms(c.filler, mapping))
    from .syntax import Implies
    if isinstance(c, Implies):
        return Implies(_substitute_atoms(c.left, mapping),
                       _substitute_atoms(c.right, mapping))
    return c


def _fresh(base: str, used: set) -> str:
    name = base
    i = 0
    while name in used:
        i += 1
        name = f"{base}{i}"
    used.add(name)
    return name


def enriched_abstraction(tbox: TBox, sigma: Signature) -> tuple:
    """Replace every concept name outside the signature by its hiding
    concept and append the witness axioms top sub some r_B.top and
    top sub some s_B.Z_B per hidden name.

    The signature must contain all role names of the TBox.  Returns the
    enriched TBox and the abstraction map.
    """
    if not tbox.role_names() <= sigma.role_names:
        raise ValueError("the signature must contain all role names of the TBox")
    hidden_names = sorted(tbox.concept_names() - sigma.concept_names)
    used = set(tbox.concept_names()) | set(tbox.role_names()) | \
        set(sigma.concept_names) | set(sigma.role_names)
    entries = []
    mapping = {}
    extra = []
    for b in hidden_names:
        z = _fresh(f"Z_{b}", used)
        rb = _fresh(f"r_{b}", used)
        sb = _fresh(f"s_{b}", used)
        h = Forall(Role(rb), Exists(Role(sb), Not(Atom(z))))
        entries.append((b, z, rb, sb, h))
        mapping[b] = h
        extra.append((Top(), Exists(Role(rb), Top())))
        extra.append((Top(), Exists(Role(sb), Atom(z))))
    inclusions = {( _substitute_atoms(l, mapping), _substitute_atoms(r, mapping))
                  for l, r in tbox.inclusions}
    enriched = TBox(frozenset(inclusions) | frozenset(extra), tbox.functional)
    return enriched, AbstractionMap(tuple(entries))


def admits_trivial_models(tbox: TBox) -> bool:
    """Checks the singleton interpretation with all extensions empty."""
    trivial = Interpretation.of({"point"}, set())
    return is_model(trivial, tbox)


# ---------------------------------------------------------------------------
# CSP -> TBox encoding
# ---------------------------------------------------------------------------

MARKER = "__M"


@dataclass(frozen=True)
class TemplateEncoding:
    """The materializable TBox encoding a CSP template.

    ``core`` is the pre-abstraction TBox over the template-point names
    (it admits trivial models); ``tbox`` is its enriched abstraction plus
    the witness axioms.  The marker concept occurs in no inclusion, so
    its Boolean query is entailed exactly by inconsistency.
    """
    tbox: TBox
    core: TBox
    marker: str
    sigma: Signature
    abstraction: AbstractionMap
    point_names: tuple

    def manifest(self) -> dict:
        return {
            "marker": self.marker,
            "signature": {
                "concepts": sorted(self.sigma.concept_names),
                "roles": sorted(self.sigma.role_names),
            },
            "points": list(self.point_names),
            "hidden": self.abstraction.as_dict(),
        }


def tbox_from_template(template: Template) -> TemplateEncoding:
    """Build the hiding encoding: point concepts A_d with a dom-guarded
    covering disjunction, pairwise disjointness, forbidden-edge and
    forbidden-label bottom rules; then hide the point concepts behind the
    enriched signature abstraction."""
    sigma = template.signature
    points = template.individuals()
    if not points:
        raise ValueError("the template must have at least one point")
    used = set(sigma.concept_names) | set(sigma.role_names) | {MARKER}
    point_name = {}
    for d in points:
        point_name[d] = _fresh(f"A_{d}", used)
    atoms = {d: Atom(point_name[d]) for d in points}
    cover = disjoin([atoms[d] for d in points])

    inclusions = set()
    # dom sub cover, expanded into its three guarded families
    for r in sorted(sigma.role_names):
        inclusions.add((Exists(Role(r), Top()), cover))
        inclusions.add((Top(), Forall(Role(r), cover)))
    for a in sorted(sigma.concept_names):
        inclusions.add((Atom(a), cover))
    # pairwise disjointness
    for i, d in enumerate(points):
        for e in points[i + 1:]:
            inclusions.add((And(atoms[d], atoms[e]), Bot()))
    # forbidden edges and labels
    edges = {(n, a, b) for n, a, b in template.abox.role_assertions}
    labels = {(n, a) for n, a in template.abox.concept_assertions}
    for r in sorted(sigma.role_names):
        for d in points:
            for e in points:
                if (r, d, e) not in edges:
                    inclusions.add((And(atoms[d], Exists(Role(r), atoms[e])), Bot()))
    for a in sorted(sigma.concept_names):
        for d in points:
            if (a, d) not in labels:
                inclusions.add((And(atoms[d], Atom(a)), Bot()))

    core = TBox(frozenset(inclusions), frozenset())
    enriched, amap = enriched_abstraction(core, sigma)
    return TemplateEncoding(enriched, core, MARKER, sigma, amap,
                            tuple(point_name[d] for d in points))


def template_entails_marker(encoding: TemplateEncoding, abox: ABox,
                            budget: int = 10**6) -> bool:
    """Certain answer of exists x M(x) w.r.t. the encoding TBox.

    The marker occurs in no inclusion, so entailment coincides with
    inconsistency of the knowledge base; the input must not mention the
    marker itself.
    """
    if encoding.marker in abox.concept_names():
        raise ValueError(f"input ABox must not use the marker {encoding.marker}")
    return not kb_consistent(encoding.tbox, abox, budget=budget)
