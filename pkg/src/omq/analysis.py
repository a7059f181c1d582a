"""TBox property analysis: disjunction-property refutation (witnessing
non-materializability), unraveling-tolerance refutation, dichotomy-style
classification, and the graph/SAT constructions used as stress inputs.

Refuters enumerate small ABoxes over the TBox signature up to
isomorphism and bounded tree queries; every emitted witness re-verifies
against the entailment oracle at report time.  Budgets make the searches
semi-decisions: a refutation is definitive, exhaustion is only evidence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .syntax import (
    ABox, And, Atom, Bot, Concept, ELIQ, ELQ, Exists, Not, Or, Role, TBox,
    Top, concept_names, concept_sort_key, conjoin, dialect, eliq_to_cq,
    is_depth_one, is_horn_alcfi, print_concept,
)
from .types import entails_eliq, entails_eliq_disjunction
from .csp import (
    Signature, booleanize_eliq, template_from_omq, unraveling_entails,
)

_IND_NAMES = "abcdefgh"


@dataclass(frozen=True)
class Budget:
    max_individuals: int = 3
    max_eliq_depth: int = 1
    max_disjuncts: int = 2


@dataclass(frozen=True)
class DisjunctionViolation:
    """A disjunction of tree-query facts entailed though no disjunct is."""
    abox: ABox
    disjuncts: tuple  # of (Concept, individual)

    def verify(self, tbox: TBox) -> bool:
        pairs = list(self.disjuncts)
        if not entails_eliq_disjunction(tbox, self.abox, pairs):
            return False
        return all(not entails_eliq(tbox, self.abox, c, a) for c, a in pairs)


@dataclass(frozen=True)
class UnravelingViolation:
    """A certain answer that the unraveled data no longer entails."""
    abox: ABox
    concept: Concept
    individual: str

    def verify(self, tbox: TBox) -> bool:
        if not entails_eliq(tbox, self.abox, self.concept, self.individual):
            return False
        _, marked, q = booleanize_eliq(tbox, self.abox, self.concept,
                                       self.individual)
        return not unraveling_entails(tbox, q, marked)


@dataclass(frozen=True)
class RefutationResult:
    status: str  # 'refuted' | 'none-found' | 'unsupported-dialect'
    witness: Optional[object]
    checked_aboxes: int
    budget: Budget


# ---------------------------------------------------------------------------
# Canonical ABox enumeration
# ---------------------------------------------------------------------------

def _slots(concepts, roles, n):
    names = list(_IND_NAMES[:n])
    slots = [("c", cn, i) for cn in sorted(concepts) for i in range(n)]
    slots += [("r", rn, i, j) for rn in sorted(roles)
              for i in range(n) for j in range(n)]
    return names, slots


def _apply_perm(slot, perm):
    if slot[0] == "c":
        return ("c", slot[1], perm[slot[2]])
    return ("r", slot[1], perm[slot[2]], perm[slot[3]])


def enumerate_aboxes(concepts, roles, max_individuals,
                     exactly: Optional[int] = None):
    """All non-empty ABoxes over the signature with at most (or exactly)
    the given number of individuals, one per isomorphism class, every
    individual occurring in some assertion.  Deterministic order: by
    individual count, then by assertion bitmask."""
    sizes = [exactly] if exactly is not None else range(1, max_individuals + 1)
    for n in sizes:
        names, slots = _slots(concepts, roles, n)
        index = {s: k for k, s in enumerate(slots)}
        perms = []
        for perm in itertools.permutations(range(n)):
            perms.append(tuple(index[_apply_perm(s, perm)] for s in slots))
        nslots = len(slots)
        for mask in range(1, 1 << nslots):
            bits = [k for k in range(nslots) if mask >> k & 1]
            used = set()
            for k in bits:
                s = slots[k]
                used.add(s[2])
                if s[0] == "r":
                    used.add(s[3])
            if len(used) != n:
                continue
            canonical = True
            for pm in perms[1:]:
                pmask = 0
                for k in bits:
                    pmask |= 1 << pm[k]
                if pmask < mask:
                    canonical = False
                    break
            if not canonical:
                continue
            cas = []
            ras = []
            for k in bits:
                s = slots[k]
                if s[0] == "c":
                    cas.append((s[1], names[s[2]]))
                else:
                    ras.append((s[1], names[s[2]], names[s[3]]))
            yield ABox(frozenset(cas), frozenset(ras))


def abox_isomorphic(a: ABox, b: ABox) -> bool:
    """Exact isomorphism of ABoxes (bijective, assertion-preserving both
    ways); backtracking over degree-compatible bijections."""
    ia, ib = sorted(a.individuals()), sorted(b.individuals())
    if len(ia) != len(ib):
        return False
    if len(a.concept_assertions) != len(b.concept_assertions):
        return False
    if len(a.role_assertions) != len(b.role_assertions):
        return False

    def signature(abox, x):
        labels = frozenset(n for n, y in abox.concept_assertions if y == x)
        out = sorted(n for n, y, _ in abox.role_assertions if y == x)
        inc = sorted(n for n, _, y in abox.role_assertions if y == x)
        return (labels, tuple(out), tuple(inc))

    sig_a = {x: signature(a, x) for x in ia}
    sig_b = {x: signature(b, x) for x in ib}
    if sorted(sig_a.values()) != sorted(sig_b.values()):
        return False
    candidates = {x: [y for y in ib if sig_b[y] == sig_a[x]] for x in ia}

    def check(mapping):
        for n, x in a.concept_assertions:
            if (n, mapping[x]) not in b.concept_assertions:
                return False
        for n, x, y in a.role_assertions:
            if (n, mapping[x], mapping[y]) not in b.role_assertions:
                return False
        return True

    def search(k, mapping, taken):
        if k == len(ia):
            return check(mapping)
        x = ia[k]
        for y in candidates[x]:
            if y in taken:
                continue
            mapping[x] = y
            taken.add(y)
            if search(k + 1, mapping, taken):
                return True
            taken.discard(y)
            del mapping[x]
        return False

    return search(0, {}, set())


# ---------------------------------------------------------------------------
# Tree-query candidates
# ---------------------------------------------------------------------------

def _eliq_candidates(sigma: Signature, depth: int, allow_inverse: bool):
    level = [Atom(n) for n in sorted(sigma.concept_names)]
    out = list(level)
    roles = [Role(r) for r in sorted(sigma.role_names)]
    if allow_inverse:
        roles += [Role(r, True) for r in sorted(sigma.role_names)]
    for _ in range(depth):
        level = [Exists(role, c) for role in roles for c in level]
        out.extend(level)
    return out


# ---------------------------------------------------------------------------
# Refuters
# ---------------------------------------------------------------------------

def refute_disjunction_property(tbox: TBox,
                                budget: Budget = Budget()) -> RefutationResult:
    """Search for an entailed disjunction of tree-query facts none of
    whose disjuncts is entailed.  Queries are ELQs for ALC/ALCF (where the
    disjunction property is characterized over ELQs) and ELIQs otherwise."""
    dl = dialect(tbox)
    allow_inverse = dl in ("ALCI", "ALCFI")
    sigma = Signature.of_tbox(tbox)
    eliqs = _eliq_candidates(sigma, budget.max_eliq_depth, allow_inverse)
    checked = 0
    for abox in enumerate_aboxes(sorted(sigma.concept_names),
                                 sorted(sigma.role_names),
                                 budget.max_individuals):
        checked += 1
        inds = sorted(abox.individuals())
        facts = [(c, a) for c in eliqs for a in inds]
        entailed = {}
        for c, a in facts:
            entailed[(c, a)] = entails_eliq(tbox, abox, c, a)
        open_facts = [f for f in facts if not entailed[f]]
        for k in range(2, budget.max_disjuncts + 1):
            found = None
            for combo in itertools.combinations(open_facts, k):
                if entails_eliq_disjunction(tbox, abox, list(combo)):
                    found = combo
                    break
            if found is not None:
                witness = DisjunctionViolation(abox, tuple(found))
                assert witness.verify(tbox)
                return RefutationResult("refuted", witness, checked, budget)
    return RefutationResult("none-found", None, checked, budget)


def refute_unraveling_tolerance(tbox: TBox,
                                budget: Budget = Budget()) -> RefutationResult:
    """Search for an entailed tree-query fact that the unraveled data no
    longer entails.  Exact only for ALC/ALCI (the unraveling side runs
    through the CSP template); other dialects report unsupported-dialect."""
    if dialect(tbox) not in ("ALC", "ALCI"):
        return RefutationResult("unsupported-dialect", None, 0, budget)
    sigma = Signature.of_tbox(tbox)
    eliqs = _eliq_candidates(sigma, budget.max_eliq_depth, True)
    templates = {}
    checked = 0
    for abox in enumerate_aboxes(sorted(sigma.concept_names),
                                 sorted(sigma.role_names),
                                 budget.max_individuals):
        checked += 1
        for c in eliqs:
            for a in sorted(abox.individuals()):
                if not entails_eliq(tbox, abox, c, a):
                    continue
                _, marked, q = booleanize_eliq(tbox, abox, c, a)
                key = q.concept
                if key not in templates:
                    templates[key] = template_from_omq(tbox, q)
                if not unraveling_entails(tbox, q, marked,
                                          template=templates[key]):
                    witness = UnravelingViolation(abox, c, a)
                    assert witness.verify(tbox)
                    return RefutationResult("refuted", witness, checked, budget)
    return RefutationResult("none-found", None, checked, budget)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

PTIME_DEFINITIVE = "PTime + monadic Datalog!=-rewritable"
PTIME_CANDIDATE = "PTime candidate (evidence only, not proof)"
CONP_HARD = "coNP-hard"


@dataclass(frozen=True)
class ClassificationReport:
    dialect: str
    depth_one: bool
    horn: bool
    materializable: tuple       # (status, detail)
    unraveling_tolerant: tuple  # (status, detail)
    verdict: Optional[str]
    caveats: tuple
    budget: Budget

    def as_dict(self):
        def show(part):
            status, detail = part
            if isinstance(detail, (DisjunctionViolation, UnravelingViolation)):
                detail = repr(detail)
            return {"status": status, "detail": detail}
        return {
            "dialect": self.dialect,
            "depth_one": self.depth_one,
            "horn": self.horn,
            "materializable": show(self.materializable),
            "unraveling_tolerant": show(self.unraveling_tolerant),
            "verdict": self.verdict,
            "caveats": list(self.caveats),
            "budget": {
                "max_individuals": self.budget.max_individuals,
                "max_eliq_depth": self.budget.max_eliq_depth,
                "max_disjuncts": self.budget.max_disjuncts,
            },
        }


def classify(tbox: TBox, budget: Budget = Budget()) -> ClassificationReport:
    """Run both refuters and assemble the dichotomy-style report.

    A definitive PTime verdict needs the Horn certificate; refuted
    materializability on a depth-one TBox yields the coNP-hard verdict;
    everything else stays evidence with explicit caveats.
    """
    dl = dialect(tbox)
    horn = is_horn_alcfi(tbox)
    depth_one = is_depth_one(tbox)
    caveats = []

    if horn:
        materializable = ("yes-evidence", "Horn TBoxes are materializable")
        ut = ("yes-evidence", "Horn TBoxes are unraveling tolerant")
        return ClassificationReport(dl, depth_one, True, materializable, ut,
                                    PTIME_DEFINITIVE, tuple(caveats), budget)

    mat_result = refute_disjunction_property(tbox, budget)
    if mat_result.status == "refuted":
        materializable = ("refuted", mat_result.witness)
    else:
        materializable = ("unknown", f"no violation on {mat_result.checked_aboxes} "
                                     f"canonical ABoxes")

    ut_result = refute_unraveling_tolerance(tbox, budget)
    if ut_result.status == "refuted":
        ut = ("refuted", ut_result.witness)
    elif ut_result.status == "unsupported-dialect":
        ut = ("unsupported-dialect",
              "bounded-slice refutation needs ALC/ALCI")
    else:
        ut = ("unknown", f"no violation on {ut_result.checked_aboxes} "
                         f"canonical ABoxes")

    verdict = None
    if depth_one and materializable[0] == "refuted":
        verdict = CONP_HARD
    elif depth_one and materializable[0] == "unknown" and ut[0] == "unknown":
        verdict = PTIME_CANDIDATE
        caveats.append("refutation budgets exhausted; materializability "
                       "is only evidenced, not proved")
    elif depth_one and ut[0] == "refuted":
        caveats.append("not unraveling tolerant; the materializability "
                       "refuter outcome governs the dichotomy verdict")
    return ClassificationReport(dl, depth_one, horn, materializable, ut,
                                verdict, tuple(caveats), budget)


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------

def gen_kcolor_tbox(k: int) -> TBox:
    """The k-coloring TBox: monochromatic edges or shared colors derive
    the marker M, and every element wears some color."""
    if k < 2:
        raise ValueError("k must be at least 2")
    colors = [Atom(f"A{i}") for i in range(1, k + 1)]
    m = Atom("M")
    inclusions = set()
    for i in range(k):
        for j in range(i + 1, k):
            inclusions.add((And(colors[i], colors[j]), m))
    for i in range(k):
        inclusions.add((And(colors[i], Exists(Role("r"), colors[i])), m))
    cover = colors[0]
    for c in colors[1:]:
        cover = Or(cover, c)
    inclusions.add((Top(), cover))
    return TBox(frozenset(inclusions), frozenset())


def gen_cycle_abox(n: int, symmetric: bool = False) -> ABox:
    """An n-cycle over role r; symmetric adds both edge directions."""
    if n < 1:
        raise ValueError("n must be at least 1")
    names = [f"a{i}" for i in range(n)]
    ras = {("r", names[i], names[(i + 1) % n]) for i in range(n)}
    if symmetric:
        ras |= {("r", names[(i + 1) % n], names[i]) for i in range(n)}
    return ABox(frozenset(), frozenset(ras))


def minimize_witness(tbox: TBox, witness: DisjunctionViolation) -> DisjunctionViolation:
    """Prune disjuncts while the disjunction stays entailed."""
    pairs = list(witness.disjuncts)
    changed = True
    while changed and len(pairs) > 2:
        changed = False
        for i in range(len(pairs)):
            rest = pairs[:i] + pairs[i + 1:]
            if entails_eliq_disjunction(tbox, witness.abox, rest):
                pairs = rest
                changed = True
                break
    return DisjunctionViolation(witness.abox, tuple(pairs))


def _concept_as_abox(concept: Concept, root: str, prefix: str):
    """View a tree query concept as an ABox with the given root name."""
    cq = eliq_to_cq(ELIQ(concept, "x"))
    rename = {"x": root}
    for v in sorted(cq.variables() - {"x"}):
        rename[v] = f"{prefix}_{v}"
    cas = {(n, rename[v]) for n, v in cq.concept_atoms}
    ras = {(n, rename[x], rename[y]) for n, x, y in cq.role_atoms}
    return cas, ras


def gen_2p2sat_reduction(tbox: TBox, witness: DisjunctionViolation,
                         formula) -> tuple:
    """Encode a 2+2 formula against a minimal disjunction violation.

    ``formula`` is a sequence of clauses (p1, p2, n1, n2); a literal is a
    variable index (int) or a truth constant (bool).  Returns the ABox,
    the tree query, and the distinguished individual f; the contract is:
    the formula is unsatisfiable iff the query is certain at f.
    """
    witness = minimize_witness(tbox, witness)
    pairs = list(witness.disjuncts)
    k = len(pairs) - 1
    if k < 1:
        raise ValueError("a violation needs at least two disjuncts")
    used_roles = set(tbox.role_names()) | set(witness.abox.role_names())

    def fresh_role(base):
        name = base
        i = 0
        while name in used_roles:
            i += 1
            name = f"{base}_{i}"
        used_roles.add(name)
        return name

    role_c = fresh_role("c")
    role_h = fresh_role("h")
    roles_p = [fresh_role("p1"), fresh_role("p2")]
    roles_n = [fresh_role("n1"), fresh_role("n2")]
    roles_r = [fresh_role(f"r{j}") for j in range(k + 1)]

    nvars = 0
    for clause in formula:
        for lit in clause:
            if isinstance(lit, bool):
                continue
            nvars = max(nvars, lit + 1)

    cas = set()
    ras = set()

    def lit_ind(lit):
        if lit is True:
            return "const1"
        if lit is False:
            return "const0"
        return f"z{lit}"

    # clause scaffolding
    for ci, clause in enumerate(formula):
        c_name = f"cl{ci}"
        ras.add((role_c, "f", c_name))
        p1, p2, n1, n2 = clause
        ras.add((roles_p[0], c_name, lit_ind(p1)))
        ras.add((roles_p[1], c_name, lit_ind(p2)))
        ras.add((roles_n[0], c_name, lit_ind(n1)))
        ras.add((roles_n[1], c_name, lit_ind(n2)))

    # per-variable copies of the violation ABox, wired through the h-gadget
    def copy_violation(i):
        def rn(x):
            return f"{x}__copy{i}"
        for n, x in witness.abox.concept_assertions:
            cas.add((n, rn(x)))
        for n, x, y in witness.abox.role_assertions:
            ras.add((n, rn(x), rn(y)))
        return rn

    # shared satisfied-by-construction copies of each disjunct concept
    droots = {}
    for j in range(1, k + 1):
        droots[j] = f"d{j}"
        c, r = _concept_as_abox(pairs[j][0], f"d{j}", f"d{j}")
        cas |= c
        ras |= r

    for i in range(nvars):
        rn = copy_violation(i)
        z = f"z{i}"
        ras.add((roles_r[0], z, rn(pairs[0][1])))
        for j in range(1, k + 1):
            b = f"b{i}_{j}"
            ras.add((role_h, z, b))
            ras.add((roles_r[j], b, rn(pairs[j][1])))
            for l in range(1, k + 1):
                if l != j:
                    ras.add((roles_r[l], b, droots[l]))

    # truth constants: const1 is true by construction, const0 false
    troot = "t0"
    c, r = _concept_as_abox(pairs[0][0], troot, troot)
    cas |= c
    ras |= r
    ras.add((roles_r[0], "const1", troot))
    b0 = "b_const0"
    ras.add((role_h, "const0", b0))
    for j in range(1, k + 1):
        ras.add((roles_r[j], b0, droots[j]))

    tt = Exists(Role(roles_r[0]), pairs[0][0])
    ff = Exists(Role(role_h),
                conjoin([Exists(Role(roles_r[j]), pairs[j][0])
                         for j in range(1, k + 1)]))
    query = Exists(Role(role_c),
                   conjoin([Exists(Role(roles_p[0]), ff),
                            Exists(Role(roles_p[1]), ff),
                            Exists(Role(roles_n[0]), tt),
                            Exists(Role(roles_n[1]), tt)]))
    return ABox(frozenset(cas), frozenset(ras)), ELIQ(query, "x"), "f"


def brute_2p2_satisfiable(formula, nvars: Optional[int] = None) -> bool:
    """Propositional oracle: try all assignments."""
    if nvars is None:
        nvars = 0
        for clause in formula:
            for lit in clause:
                if not isinstance(lit, bool):
                    nvars = max(nvars, lit + 1)
    for bits in range(1 << nvars):
        def val(lit):
            if isinstance(lit, bool):
                return lit
            return bool(bits >> lit & 1)
        ok = True
        for p1, p2, n1, n2 in formula:
            if not (val(p1) or val(p2) or not val(n1) or not val(n2)):
                ok = False
                break
        if ok:
            return True
    return False
