"""Finite interpretations and the model-theoretic toolbox: concept
evaluation, model checking, query matching, homomorphism and simulation
solvers, bounded unfoldings and ABox unravelings.

Domain elements are arbitrary hashable values; named individuals are the
subset of the domain interpreted under the standard name assumption (the
same name denotes the same element across structures).  Unfoldings and
unraveling slices use word elements: the base element for words of length
zero and tuples ``(d0, r1, d1, ...)`` with Role objects at odd positions
for longer words.

Every operation is a pure function over immutable inputs; solvers keep
their working state per call, so concurrent use needs no coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .syntax import (
    ABox, And, Atom, Bot, CQ, Concept, ELIQ, ELQ, Exists, Forall, Implies,
    Not, Or, PAnd, PAtom, PEQ, PExists, POr, Query, Role, TBox, Top, UCQ,
)


def _ekey(e):
    """Deterministic sort key for mixed string/word domain elements."""
    if isinstance(e, tuple):
        return (1, tuple(str(x) for x in e))
    return (0, str(e))


@dataclass(frozen=True)
class Interpretation:
    domain: frozenset
    named: frozenset
    concept_ext: Mapping[str, frozenset]
    role_ext: Mapping[str, frozenset]

    def __post_init__(self):
        if not self.named <= self.domain:
            raise ValueError("named individuals must belong to the domain")

    @staticmethod
    def of(domain, named=None, concept_ext=None, role_ext=None) -> "Interpretation":
        domain = frozenset(domain)
        named = frozenset(domain if named is None else named)
        cext = {k: frozenset(v) for k, v in (concept_ext or {}).items()}
        rext = {k: frozenset(tuple(p) for p in v) for k, v in (role_ext or {}).items()}
        return Interpretation(domain, named, cext, rext)

    @staticmethod
    def from_abox(abox: ABox) -> "Interpretation":
        """Read an ABox as a finite interpretation over its individuals."""
        cext = {}
        for name, a in abox.concept_assertions:
            cext.setdefault(name, set()).add(a)
        rext = {}
        for name, a, b in abox.role_assertions:
            rext.setdefault(name, set()).add((a, b))
        inds = frozenset(abox.individuals())
        return Interpretation(inds, inds,
                              {k: frozenset(v) for k, v in cext.items()},
                              {k: frozenset(v) for k, v in rext.items()})

    def concept(self, name: str) -> frozenset:
        return self.concept_ext.get(name, frozenset())

    def role(self, role: Role) -> frozenset:
        pairs = self.role_ext.get(role.name, frozenset())
        if role.inverted:
            return frozenset((b, a) for a, b in pairs)
        return pairs

    def successors(self, d, role: Role):
        if role.inverted:
            return sorted((a for a, b in self.role_ext.get(role.name, ()) if b == d),
                          key=_ekey)
        return sorted((b for a, b in self.role_ext.get(role.name, ()) if a == d),
                      key=_ekey)

    def to_abox(self, mangle=None) -> ABox:
        """Forget namedness and render as an ABox; ``mangle`` maps elements
        to identifier strings (defaults to str)."""
        mangle = mangle or _default_mangle
        cas = {(n, mangle(d)) for n, ds in self.concept_ext.items() for d in ds}
        ras = {(n, mangle(a), mangle(b)) for n, ps in self.role_ext.items() for a, b in ps}
        return ABox(frozenset(cas), frozenset(ras))


def _default_mangle(e) -> str:
    if isinstance(e, tuple):
        parts = []
        for x in e:
            if isinstance(x, Role):
                parts.append(x.name + ("_inv" if x.inverted else ""))
            else:
                parts.append(str(x))
        return ".".join(parts)
    return str(e)


def interpretation_to_text(i: Interpretation) -> str:
    """ABox text format extended with a ``named:`` header line."""
    mangle = _default_mangle
    named = " ".join(sorted(mangle(d) for d in i.named))
    body = i.to_abox().__str__()
    # elements outside every extension still need to exist: list them too
    extra = sorted(mangle(d) for d in i.domain)
    return f"named: {named}\ndomain: {' '.join(extra)}\n{body}"


def interpretation_from_text(text: str) -> Interpretation:
    named = []
    domain = []
    lines = []
    for raw in text.splitlines():
        stmt = raw.split("#", 1)[0].strip()
        if not stmt:
            continue
        if stmt.startswith("named:"):
            named = stmt[len("named:"):].split()
        elif stmt.startswith("domain:"):
            domain = stmt[len("domain:"):].split()
        else:
            lines.append(stmt)
    from .syntax import parse_abox
    if lines:
        abox = parse_abox("\n".join(lines))
        base = Interpretation.from_abox(abox)
    else:
        base = Interpretation.of(frozenset(domain or named), frozenset())
    all_domain = frozenset(domain) | base.domain | frozenset(named)
    return Interpretation(all_domain, frozenset(named), base.concept_ext, base.role_ext)


# ---------------------------------------------------------------------------
# Concept evaluation and model checking
# ---------------------------------------------------------------------------

def eval_concept(i: Interpretation, c: Concept) -> frozenset:
    """The standard extension C^I; absent names have empty extension."""
    if isinstance(c, Top):
        return i.domain
    if isinstance(c, Bot):
        return frozenset()
    if isinstance(c, Atom):
        return i.concept(c.name) & i.domain
    if isinstance(c, Not):
        return i.domain - eval_concept(i, c.sub)
    if isinstance(c, And):
        return eval_concept(i, c.left) & eval_concept(i, c.right)
    if isinstance(c, Or):
        return eval_concept(i, c.left) | eval_concept(i, c.right)
    if isinstance(c, Implies):
        return (i.domain - eval_concept(i, c.left)) | eval_concept(i, c.right)
    if isinstance(c, Exists):
        filler = eval_concept(i, c.filler)
        return frozenset(d for d, e in i.role(c.role) if e in filler and d in i.domain)
    if isinstance(c, Forall):
        filler = eval_concept(i, c.filler)
        bad = frozenset(d for d, e in i.role(c.role) if e not in filler)
        return i.domain - bad
    raise TypeError(f"not a concept: {c!r}")


def respects_functionality(i: Interpretation, role: Role) -> bool:
    seen = set()
    for d, _e in i.role(role):
        if d in seen:
            return False
        seen.add(d)
    return True


def is_model(i: Interpretation, t: TBox, abox: Optional[ABox] = None) -> bool:
    """True iff I satisfies every CI, functionality assertion and, when an
    ABox is given, every assertion (standard name assumption)."""
    for lhs, rhs in t.inclusions:
        if not eval_concept(i, lhs) <= eval_concept(i, rhs):
            return False
    for role in t.functional:
        if not respects_functionality(i, role):
            return False
    if abox is not None:
        if not frozenset(abox.individuals()) <= i.named:
            return False
        for name, a in abox.concept_assertions:
            if a not in i.concept(name):
                return False
        for name, a, b in abox.role_assertions:
            if (a, b) not in i.role_ext.get(name, frozenset()):
                return False
    return True


# ---------------------------------------------------------------------------
# Query matching
# ---------------------------------------------------------------------------

def _match_cq(i: Interpretation, q: CQ, binding: dict) -> bool:
    # check already-ground atoms, collect constraints per variable
    for name, v in q.concept_atoms:
        if v in binding and binding[v] not in i.concept(name):
            return False
    for name, x, y in q.role_atoms:
        if x in binding and y in binding and (binding[x], binding[y]) not in \
                i.role_ext.get(name, frozenset()):
            return False
    todo = sorted(q.variables() - set(binding), key=str)
    if not todo:
        return True
    # most-constrained-first: order by number of atoms touching the variable
    def weight(v):
        w = sum(1 for _, u in q.concept_atoms if u == v)
        w += sum(1 for _, x, y in q.role_atoms if v in (x, y))
        return -w
    todo.sort(key=weight)

    domain = sorted(i.domain, key=_ekey)

    def consistent(v, d, bnd):
        for name, u in q.concept_atoms:
            if u == v and d not in i.concept(name):
                return False
        for name, x, y in q.role_atoms:
            pairs = i.role_ext.get(name, frozenset())
            if x == v and y == v:
                if (d, d) not in pairs:
                    return False
            elif x == v and y in bnd:
                if (d, bnd[y]) not in pairs:
                    return False
            elif y == v and x in bnd:
                if (bnd[x], d) not in pairs:
                    return False
        return True

    def search(k, bnd):
        if k == len(todo):
            return True
        v = todo[k]
        for d in domain:
            if consistent(v, d, bnd):
                bnd[v] = d
                if search(k + 1, bnd):
                    return True
                del bnd[v]
        return False

    return search(0, dict(binding))


def _match_peq(i: Interpretation, f, binding: dict) -> bool:
    if isinstance(f, PAtom):
        if len(f.args) == 1:
            return binding[f.args[0]] in i.concept(f.pred)
        return (binding[f.args[0]], binding[f.args[1]]) in i.role_ext.get(f.pred, frozenset())
    if isinstance(f, PAnd):
        return _match_peq(i, f.left, binding) and _match_peq(i, f.right, binding)
    if isinstance(f, POr):
        return _match_peq(i, f.left, binding) or _match_peq(i, f.right, binding)
    if isinstance(f, PExists):
        for d in sorted(i.domain, key=_ekey):
            binding[f.var] = d
            if _match_peq(i, f.body, binding):
                del binding[f.var]
                return True
        binding.pop(f.var, None)
        return False
    raise TypeError(f"not a PEQ formula: {f!r}")


def match_query(i: Interpretation, q: Query, answers: tuple) -> bool:
    """True iff some assignment sends the answer variables to ``answers``
    and satisfies the query matrix in I."""
    if isinstance(q, (ELIQ, ELQ)):
        if len(answers) != 1:
            raise ValueError("ELIQ/ELQ take exactly one answer")
        return answers[0] in eval_concept(i, q.concept)
    if isinstance(q, CQ):
        if len(answers) != len(q.answer_vars):
            raise ValueError("answer arity mismatch")
        binding = dict(zip(q.answer_vars, answers))
        return _match_cq(i, q, binding)
    if isinstance(q, UCQ):
        return any(match_query(i, d, answers) for d in q.disjuncts)
    if isinstance(q, PEQ):
        if len(answers) != len(q.answer_vars):
            raise ValueError("answer arity mismatch")
        binding = dict(zip(q.answer_vars, answers))
        # free answer variables that do not occur in the formula are
        # unconstrained, matching first-order semantics
        return _match_peq(i, q.formula, binding)
    raise TypeError(f"not a query: {q!r}")


# ---------------------------------------------------------------------------
# Homomorphisms
# ---------------------------------------------------------------------------

def _hom_ok(s: Interpretation, g: Interpretation, h: dict) -> bool:
    for name, ds in s.concept_ext.items():
        target = g.concept(name)
        for d in ds:
            if h[d] not in target:
                return False
    for name, pairs in s.role_ext.items():
        target = g.role_ext.get(name, frozenset())
        for a, b in pairs:
            if (h[a], h[b]) not in target:
                return False
    return True


def find_homomorphism(s: Interpretation, g: Interpretation,
                      preserve: Iterable = ()) -> Optional[dict]:
    """A map preserving concept memberships and role edges, fixing
    ``preserve`` pointwise; None when provably absent.

    Backtracking over source elements ordered by degree, with an
    arc-consistency pre-pruning pass over the candidate sets.
    """
    preserve = set(preserve)
    if not preserve <= s.named:
        raise ValueError("preserve must be a subset of the source's named individuals")
    # unary candidate sets
    labels = {d: set() for d in s.domain}
    for name, ds in s.concept_ext.items():
        for d in ds:
            labels[d].add(name)
    glabels = {d: set() for d in g.domain}
    for name, ds in g.concept_ext.items():
        for d in ds:
            if d in glabels:
                glabels[d].add(name)
    cand = {}
    for d in s.domain:
        if d in preserve:
            if d not in g.domain or not labels[d] <= glabels.get(d, set()):
                return None
            cand[d] = [d]
        else:
            cand[d] = sorted((e for e in g.domain if labels[d] <= glabels[e]), key=_ekey)
            if not cand[d]:
                return None

    edges = []
    for name, pairs in s.role_ext.items():
        gpairs = g.role_ext.get(name, frozenset())
        succ_by = {}
        pred_by = {}
        for a, b in gpairs:
            succ_by.setdefault(a, set()).add(b)
            pred_by.setdefault(b, set()).add(a)
        for a, b in pairs:
            edges.append((a, b, succ_by, pred_by))

    # arc consistency
    changed = True
    while changed:
        changed = False
        for a, b, succ_by, pred_by in edges:
            keep = [d for d in cand[a] if any(e in succ_by.get(d, ()) for e in cand[b])]
            if len(keep) != len(cand[a]):
                cand[a] = keep
                changed = True
                if not keep:
                    return None
            keep = [e for e in cand[b] if any(d in pred_by.get(e, ()) for d in cand[a])]
            if len(keep) != len(cand[b]):
                cand[b] = keep
                changed = True
                if not keep:
                    return None

    degree = {d: 0 for d in s.domain}
    for name, pairs in s.role_ext.items():
        for a, b in pairs:
            degree[a] += 1
            degree[b] += 1
    order = sorted(s.domain, key=lambda d: (-degree[d], len(cand[d]), _ekey(d)))

    adj = {}
    for name, pairs in s.role_ext.items():
        gpairs = g.role_ext.get(name, frozenset())
        for a, b in pairs:
            adj.setdefault(a, []).append((b, gpairs, True))
            adj.setdefault(b, []).append((a, gpairs, False))

    h = {}

    def consistent(d, val):
        for other, gpairs, forward in adj.get(d, ()):
            if other in h:
                pair = (val, h[other]) if forward else (h[other], val)
                if pair not in gpairs:
                    return False
            if other == d:
                pair = (val, val) if forward else (val, val)
                if pair not in gpairs:
                    return False
        return True

    def search(k):
        if k == len(order):
            return True
        d = order[k]
        for val in cand[d]:
            if consistent(d, val):
                h[d] = val
                if search(k + 1):
                    return True
                del h[d]
        return False

    if not search(0):
        return None
    assert _hom_ok(s, g, h)
    return dict(h)


# ---------------------------------------------------------------------------
# Simulations
# ---------------------------------------------------------------------------

def find_simulation(s: Interpretation, g: Interpretation,
                    variant: str = "plain") -> Optional[frozenset]:
    """The greatest (i-)simulation containing (a, a) for every named
    individual of the source, or None when no simulation exists.

    Greatest-fixpoint refinement: start from the concept-compatible full
    relation and drop pairs whose role obligations lack a matching move.
    """
    if variant not in ("plain", "i"):
        raise ValueError("variant must be 'plain' or 'i'")
    slabels = {d: set() for d in s.domain}
    for name, ds in s.concept_ext.items():
        for d in ds:
            slabels[d].add(name)
    glabels = {d: set() for d in g.domain}
    for name, ds in g.concept_ext.items():
        for d in ds:
            if d in glabels:
                glabels[d].add(name)

    rel = {(d, e) for d in s.domain for e in g.domain if slabels[d] <= glabels[e]}

    roles = sorted({Role(n) for n in s.role_ext} |
                   ({Role(n, True) for n in s.role_ext} if variant == "i" else set()))
    moves_s = {}
    moves_g = {}
    for role in roles:
        for d, d2 in s.role(role):
            moves_s.setdefault((d, role), set()).add(d2)
        for e, e2 in g.role(role):
            moves_g.setdefault((e, role), set()).add(e2)

    changed = True
    while changed:
        changed = False
        for (d, e) in sorted(rel, key=lambda p: (_ekey(p[0]), _ekey(p[1]))):
            ok = True
            for role in roles:
                for d2 in moves_s.get((d, role), ()):
                    targets = moves_g.get((e, role), set())
                    if not any((d2, e2) in rel for e2 in targets):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                rel.discard((d, e))
                changed = True
    for a in s.named:
        if a not in g.named or (a, a) not in rel:
            return None
    return frozenset(rel)


# ---------------------------------------------------------------------------
# Unfolding (bounded slices)
# ---------------------------------------------------------------------------

def _tail(word):
    return word[-1] if isinstance(word, tuple) else word


def unfold(i: Interpretation, depth: int, variant: str = "i") -> Interpretation:
    """The depth-bounded prefix of the (i-)unfolding.

    Words start at named individuals and continue through anonymous
    elements only; length-0 words are the named elements themselves, and
    edges among them are kept as in I.  The i-variant walks role names and
    inverses with the non-backtracking condition; the plain variant walks
    role names only.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if variant not in ("plain", "i"):
        raise ValueError("variant must be 'plain' or 'i'")
    roles = sorted({Role(n) for n in i.role_ext} |
                   ({Role(n, True) for n in i.role_ext} if variant == "i" else set()))
    words = [d for d in sorted(i.named, key=_ekey)]
    frontier = list(words)
    edges = set()  # (word, Role, word), role as stored edge direction d -r-> e
    for step in range(depth):
        new_frontier = []
        for w in frontier:
            d = _tail(w)
            prev = None
            if isinstance(w, tuple) and len(w) >= 3:
                prev = (w[-3], w[-2])  # (element, role used to reach tail)
            for role in roles:
                for e in i.successors(d, role):
                    if e in i.named:
                        continue  # words pass through anonymous elements only
                    if variant == "i" and prev is not None:
                        prev_elem, prev_role = prev
                        if e == prev_elem and role == prev_role.inverse():
                            continue
                    w2 = w + (role, e) if isinstance(w, tuple) else (w, role, e)
                    edges.add((w, role, w2))
                    new_frontier.append(w2)
        words.extend(new_frontier)
        frontier = new_frontier
        if not frontier:
            break

    domain = frozenset(words)
    named = frozenset(i.named)
    cext = {}
    for name, ds in i.concept_ext.items():
        cext[name] = frozenset(w for w in domain if _tail(w) in ds)
    rext = {name: set() for name in i.role_ext}
    for name, pairs in i.role_ext.items():
        for a, b in pairs:
            if a in named and b in named:
                rext[name].add((a, b))
    for w, role, w2 in edges:
        if role.inverted:
            rext.setdefault(role.name, set()).add((w2, w))
        else:
            rext.setdefault(role.name, set()).add((w, w2))
    return Interpretation(domain, named, cext,
                          {k: frozenset(v) for k, v in rext.items()})


def unfold_tail_map(j: Interpretation) -> dict:
    """The tail map of an unfolding slice, a homomorphism onto the source."""
    return {w: _tail(w) for w in j.domain}


# ---------------------------------------------------------------------------
# ABox unraveling (bounded slices)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnravelingSlice:
    """All unraveling individuals of length <= depth with the induced
    assertions.  Words are the base individual (length 0) or tuples
    ``(b0, r0, b1, ...)`` with Role objects at odd positions."""
    base: ABox
    depth: int
    individuals: frozenset
    concept_assertions: frozenset  # (name, word)
    role_assertions: frozenset     # (name, word, word)

    def tail(self, word):
        return _tail(word)

    def interpretation(self) -> Interpretation:
        cext = {}
        for n, w in self.concept_assertions:
            cext.setdefault(n, set()).add(w)
        rext = {}
        for n, w1, w2 in self.role_assertions:
            rext.setdefault(n, set()).add((w1, w2))
        named = frozenset(w for w in self.individuals if not isinstance(w, tuple))
        return Interpretation(self.individuals, named,
                              {k: frozenset(v) for k, v in cext.items()},
                              {k: frozenset(v) for k, v in rext.items()})

    def to_abox(self) -> ABox:
        m = _default_mangle
        return ABox(frozenset((n, m(w)) for n, w in self.concept_assertions),
                    frozenset((n, m(a), m(b)) for n, a, b in self.role_assertions))


def unravel_abox(abox: ABox, depth: int) -> UnravelingSlice:
    """The depth-bounded slice of the unraveling: non-backtracking
    role-or-inverse walks through the data, concept labels copied to every
    word with the same tail, and one role assertion per word extension."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    roles = sorted({Role(n) for n in abox.role_names()} |
                   {Role(n, True) for n in abox.role_names()})
    succ = {}
    for name, a, b in abox.role_assertions:
        succ.setdefault((a, Role(name)), set()).add(b)
        succ.setdefault((b, Role(name, True)), set()).add(a)

    inds = sorted(abox.individuals())
    words = list(inds)
    role_assertions = set()
    frontier = list(inds)
    for _ in range(depth):
        new_frontier = []
        for w in frontier:
            b = _tail(w)
            prev = None
            if isinstance(w, tuple) and len(w) >= 3:
                prev = (w[-3], w[-2])
            for role in roles:
                for b2 in sorted(succ.get((b, role), ()), key=str):
                    if prev is not None and b2 == prev[0] and role == prev[1].inverse():
                        continue  # (b_{i-1}, r_{i-1}^-) != (b_{i+1}, r_i)
                    w2 = w + (role, b2) if isinstance(w, tuple) else (w, role, b2)
                    if role.inverted:
                        role_assertions.add((role.name, w2, w))
                    else:
                        role_assertions.add((role.name, w, w2))
                    new_frontier.append(w2)
        words.extend(new_frontier)
        frontier = new_frontier
        if not frontier:
            break

    by_tail = {}
    for w in words:
        by_tail.setdefault(_tail(w), []).append(w)
    concept_assertions = set()
    for name, b in abox.concept_assertions:
        for w in by_tail.get(b, ()):
            concept_assertions.add((name, w))
    return UnravelingSlice(abox, depth, frozenset(words),
                           frozenset(concept_assertions), frozenset(role_assertions))


# ---------------------------------------------------------------------------
# Bounded countermodel search (the "bruteforce" engine's core)
# ---------------------------------------------------------------------------

def enumerate_interpretations(domain, concepts, roles, fixed_edges=frozenset(),
                              named=None):
    """All interpretations over ``domain`` whose role extensions extend
    ``fixed_edges`` by nothing (edges fixed) and whose concept extensions
    range over all subsets.  Deterministic order."""
    import itertools
    domain = sorted(domain, key=_ekey)
    named = frozenset(domain if named is None else named)
    rext = {}
    for name, a, b in fixed_edges:
        rext.setdefault(name, set()).add((a, b))
    for name in roles:
        rext.setdefault(name, set())
    concepts = sorted(concepts)
    subsets = list(itertools.chain.from_iterable(
        itertools.combinations(domain, k) for k in range(len(domain) + 1)))
    for assignment in itertools.product(subsets, repeat=len(concepts)):
        cext = {c: frozenset(s) for c, s in zip(concepts, assignment)}
        yield Interpretation(frozenset(domain), named, cext,
                             {k: frozenset(v) for k, v in rext.items()})


def bruteforce_certain_answer(t: TBox, abox: ABox, q: Query, answers: tuple) -> tuple:
    """Search for a countermodel among interpretations whose domain is
    Ind(A) and whose role edges are exactly those of A, with concept
    extensions ranging over all subsets.

    Returns (holds, complete): a found countermodel refutes soundly
    (holds=False is exact); holds=True only exhausts the searched class,
    so it comes flagged with complete=False unless the class is empty.
    """
    sig_concepts = sorted(t.concept_names() |
                          _query_concept_names(q) | abox.concept_names())
    base = Interpretation.from_abox(abox)
    for i in enumerate_interpretations(base.domain, sig_concepts, base.role_ext.keys(),
                                       fixed_edges=abox.role_assertions):
        # concept assertions of A must hold
        if not all(a in i.concept(n) for n, a in abox.concept_assertions):
            continue
        if not is_model(i, t):
            continue
        if not match_query(i, q, answers):
            return (False, True)
    return (True, False)


def _query_concept_names(q: Query) -> set[str]:
    from .syntax import concept_names
    if isinstance(q, (ELIQ, ELQ)):
        return concept_names(q.concept)
    if isinstance(q, CQ):
        return {n for n, _ in q.concept_atoms}
    if isinstance(q, UCQ):
        out = set()
        for d in q.disjuncts:
            out |= _query_concept_names(d)
        return out
    if isinstance(q, PEQ):
        out = set()

        def walk(f):
            if isinstance(f, PAtom):
                if len(f.args) == 1:
                    out.add(f.pred)
            elif isinstance(f, (PAnd, POr)):
                walk(f.left)
                walk(f.right)
            else:
                walk(f.body)

        walk(q.formula)
        return out
    raise TypeError(f"not a query: {q!r}")
