"""Datalog(!=) programs: representation, bottom-up evaluation, and the
monadic rewriting built from a TBox and an ELIQ.

Programs evaluate over ABoxes with inequality read as distinctness of
individual names.  The unary relation ``dom`` is built in and always
holds the active domain Ind(A); the rewriting uses it to seed the
trivial type-set fact at assertion-poor individuals and to keep the
paper's domain-independent goal rules safe.

Evaluation is semi-naive by default; the naive fixpoint is kept as an
independent reference implementation.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .syntax import (
    ABox, Atom, Concept, ELIQ, ELQ, Role, TBox, concept_sort_key, dialect,
    is_horn_alcfi,
)
from .types import compute_types, closure, closure_roles, succ_relation

DOM = "dom"


class SizeGuardError(RuntimeError):
    """The rewriting would need an impractical number of IDB relations."""


class NoOracleError(RuntimeError):
    """No exact certain-answer oracle applies to the TBox's dialect."""


@dataclass(frozen=True)
class DAtom:
    pred: str
    args: tuple

    def __str__(self):
        return f"{self.pred}({','.join(self.args)})"


@dataclass(frozen=True)
class DRule:
    head: DAtom
    body: tuple            # of DAtom
    neq: tuple = ()        # of (var, var) pairs

    def variables(self):
        out = set(self.head.args)
        for a in self.body:
            out |= set(a.args)
        for x, y in self.neq:
            out |= {x, y}
        return out

    def __str__(self):
        parts = [str(a) for a in self.body]
        parts += [f"{x} != {y}" for x, y in self.neq]
        return f"{self.head} :- {', '.join(parts)}." if parts else f"{self.head}."


@dataclass(frozen=True)
class Program:
    rules: tuple
    goal: str = "goal"
    goal_arity: int = 1

    def __post_init__(self):
        body_vars_ok = all(
            set(r.head.args) | {v for p in r.neq for v in p}
            <= {v for a in r.body for v in a.args}
            for r in self.rules)
        if not body_vars_ok:
            raise ValueError("unsafe rule: head/inequality variable not in body")
        for r in self.rules:
            for a in r.body:
                if a.pred == self.goal:
                    raise ValueError("the goal relation must not occur in bodies")

    def idb(self) -> frozenset:
        return frozenset(r.head.pred for r in self.rules)

    def is_monadic(self) -> bool:
        return all(len(r.head.args) == 1 for r in self.rules
                   if r.head.pred != self.goal)

    def __str__(self):
        return print_program(self)


def print_program(p: Program) -> str:
    lines = [f"{p.goal}/{p.goal_arity}."]
    lines += [str(r) for r in sorted(p.rules, key=str)]
    return "\n".join(lines) + "\n"


_HEADER_RE = re.compile(r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*/\s*(?P<arity>\d+)\s*\.?")
_DATOM_RE = re.compile(
    r"(?P<pred>[A-Za-z_][A-Za-z0-9_]*)\s*\(\s*(?P<args>[^)]*)\)\s*")
_NEQ_RE = re.compile(r"(?P<x>[A-Za-z_][A-Za-z0-9_]*)\s*!=\s*(?P<y>[A-Za-z_][A-Za-z0-9_]*)")


def parse_program(text: str) -> Program:
    """Parse the ``.dl`` format: a ``goal/arity.`` header, then one
    ``head :- atom, atom, x != y.`` rule per line."""
    from .syntax import ParseError
    goal, goal_arity = "goal", 1
    rules = []
    saw_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stmt = raw.split("#", 1)[0].strip()
        if not stmt:
            continue
        if not saw_header:
            m = _HEADER_RE.fullmatch(stmt)
            if not m:
                raise ParseError("expected a goal/arity header", lineno)
            goal, goal_arity = m.group("name"), int(m.group("arity"))
            saw_header = True
            continue
        head_s, sep, body_s = stmt.partition(":-")
        if not sep:
            head_s = stmt
            body_s = ""
        m = _DATOM_RE.fullmatch(head_s.strip().rstrip("."))
        if not m:
            raise ParseError(f"not a head atom: {head_s.strip()!r}", lineno)
        head = DAtom(m.group("pred"),
                     tuple(v.strip() for v in m.group("args").split(",") if v.strip()))
        body = []
        neq = []
        for part in re.split(r",(?![^()]*\))", body_s.rstrip(".")):
            part = part.strip()
            if not part:
                continue
            nm = _NEQ_RE.fullmatch(part)
            if nm:
                neq.append((nm.group("x"), nm.group("y")))
                continue
            am = _DATOM_RE.fullmatch(part)
            if not am:
                raise ParseError(f"not an atom: {part!r}", lineno)
            body.append(DAtom(am.group("pred"),
                              tuple(v.strip() for v in am.group("args").split(",")
                                    if v.strip())))
        rules.append(DRule(head, tuple(body), tuple(neq)))
    if not saw_header:
        raise ParseError("empty program", 1)
    return Program(tuple(rules), goal, goal_arity)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _edb_facts(abox: ABox) -> dict:
    facts = {}
    for name, a in abox.concept_assertions:
        facts.setdefault(name, set()).add((a,))
    for name, a, b in abox.role_assertions:
        facts.setdefault(name, set()).add((a, b))
    facts[DOM] = {(a,) for a in abox.individuals()}
    return facts


def _join(rule: DRule, facts: dict, delta: Optional[dict], delta_pred_index: int):
    """All head tuples derivable from the rule; with a delta, the body atom
    at ``delta_pred_index`` ranges over the delta relation only."""
    body = rule.body
    out = set()

    def extend(i, binding):
        if i == len(body):
            for x, y in rule.neq:
                if binding[x] == binding[y]:
                    return
            out.add(tuple(binding[v] for v in rule.head.args))
            return
        atom = body[i]
        source = facts
        if delta is not None and i == delta_pred_index:
            source = delta
        for tup in sorted(source.get(atom.pred, ())):
            if len(tup) != len(atom.args):
                continue
            new = dict(binding)
            ok = True
            for var, val in zip(atom.args, tup):
                if new.get(var, val) != val:
                    ok = False
                    break
                new[var] = val
            if ok:
                extend(i + 1, new)

    extend(0, {})
    return out


def evaluate(program: Program, abox: ABox, method: str = "seminaive") -> frozenset:
    """Least-fixpoint answers of the goal relation on the ABox."""
    if method == "naive":
        return _evaluate_naive(program, abox)
    if method != "seminaive":
        raise ValueError("method must be 'seminaive' or 'naive'")
    facts = _edb_facts(abox)
    idb = program.idb()
    for p in idb:
        facts.setdefault(p, set())
    # first round: full join
    delta = {}
    for rule in program.rules:
        derived = _join(rule, facts, None, -1)
        fresh = derived - facts[rule.head.pred]
        if fresh:
            delta.setdefault(rule.head.pred, set()).update(fresh)
    for p, ts in delta.items():
        facts[p].update(ts)
    while delta:
        new_delta = {}
        for rule in program.rules:
            positions = [i for i, a in enumerate(rule.body) if a.pred in delta]
            for i in positions:
                derived = _join(rule, facts, delta, i)
                fresh = derived - facts[rule.head.pred]
                if fresh:
                    new_delta.setdefault(rule.head.pred, set()).update(fresh)
        for p, ts in new_delta.items():
            facts[p].update(ts)
        delta = new_delta
    return frozenset(facts.get(program.goal, ()))


def _evaluate_naive(program: Program, abox: ABox) -> frozenset:
    facts = _edb_facts(abox)
    for p in program.idb():
        facts.setdefault(p, set())
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            derived = _join(rule, facts, None, -1)
            if not derived <= facts[rule.head.pred]:
                facts[rule.head.pred].update(derived)
                changed = True
    return frozenset(facts.get(program.goal, ()))


# ---------------------------------------------------------------------------
# The monadic rewriting
# ---------------------------------------------------------------------------

def build_rewriting(tbox: TBox, q, max_idbs: int = 4096) -> Program:
    """The monadic Datalog(!=) program for the OMQ (TBox, ELIQ).

    IDB relations stand for sets of types; only sets reachable from the
    concept-name seeds (and the full set, seeded on the active domain)
    under role propagation and intersection are materialized, which
    preserves the program's answers since unreachable relations never
    derive a fact.  Exceeding ``max_idbs`` reachable sets raises
    SizeGuardError.
    """
    concept = q.concept if isinstance(q, (ELIQ, ELQ)) else q
    types = compute_types(tbox, concept)
    succ = succ_relation(tbox, concept, types)
    cl = closure(tbox, concept)
    roles = closure_roles(cl)
    tlist = sorted(types, key=lambda t: sorted(map(concept_sort_key, t)))
    index = {t: i for i, t in enumerate(tlist)}
    full = frozenset(types)

    def name_of(tset: frozenset) -> str:
        mask = 0
        for t in tset:
            mask |= 1 << index[t]
        return f"P{mask:x}"

    succ_by_role = {}
    for (t, role, t2) in succ:
        succ_by_role.setdefault(role, set()).add((t, t2))

    def prop(role, t0: frozenset, t1: frozenset) -> frozenset:
        pairs = succ_by_role.get(role, ())
        return frozenset(t for t in t0 if any((t, t2) in pairs for t2 in t1))

    concept_names = sorted({c.name for c in cl if isinstance(c, Atom)})
    seeds = {full}
    seed_rules = [DRule(DAtom(name_of(full), ("x",)), (DAtom(DOM, ("x",)),))]
    for a in concept_names:
        ta = frozenset(t for t in types if Atom(a) in t)
        seeds.add(ta)
        seed_rules.append(DRule(DAtom(name_of(ta), ("x",)), (DAtom(a, ("x",)),)))

    family = set(seeds)
    frontier = set(seeds)
    prop_rules = []
    inter_rules = []
    emitted_prop = set()
    emitted_inter = set()
    while frontier:
        if len(family) > max_idbs:
            raise SizeGuardError(
                f"more than {max_idbs} reachable type-set relations")
        new = set()
        for t0 in sorted(family, key=name_of):
            for t1 in sorted(family, key=name_of):
                key = (name_of(t0), name_of(t1))
                if key not in emitted_inter:
                    emitted_inter.add(key)
                    meet = t0 & t1
                    if meet != t0 and meet != t1:
                        inter_rules.append(
                            DRule(DAtom(name_of(meet), ("x",)),
                                  (DAtom(name_of(t0), ("x",)),
                                   DAtom(name_of(t1), ("x",)))))
                        if meet not in family:
                            new.add(meet)
                if t0 not in frontier and t1 not in frontier:
                    continue
                for role in roles:
                    pkey = (name_of(t0), role, name_of(t1))
                    if pkey in emitted_prop:
                        continue
                    emitted_prop.add(pkey)
                    target = prop(role, t0, t1)
                    edge = DAtom(role.name, ("y", "x") if role.inverted else ("x", "y"))
                    prop_rules.append(
                        DRule(DAtom(name_of(target), ("x",)),
                              (DAtom(name_of(t0), ("x",)), edge,
                               DAtom(name_of(t1), ("y",)))))
                    if target not in family:
                        new.add(target)
        family |= new
        frontier = new

    goal_rules = []
    for tset in sorted(family, key=name_of):
        if all(concept in t for t in tset):
            goal_rules.append(DRule(DAtom("goal", ("x",)),
                                    (DAtom(name_of(tset), ("x",)),)))
    empty = frozenset()
    if empty in family:
        goal_rules.append(DRule(DAtom("goal", ("x",)),
                                (DAtom(DOM, ("x",)), DAtom(name_of(empty), ("y",)))))
    for role in sorted(tbox.functional):
        e1 = DAtom(role.name, ("y", "z1") if not role.inverted else ("z1", "y"))
        e2 = DAtom(role.name, ("y", "z2") if not role.inverted else ("z2", "y"))
        goal_rules.append(DRule(DAtom("goal", ("x",)),
                                (DAtom(DOM, ("x",)), e1, e2), (("z1", "z2"),)))

    rules = tuple(seed_rules + inter_rules + prop_rules + goal_rules)
    return Program(rules, "goal", 1)


# ---------------------------------------------------------------------------
# Empirical soundness/completeness reporting
# ---------------------------------------------------------------------------

@dataclass
class SoundnessReport:
    oracle: str
    checked: int
    sound: bool
    complete: bool
    sound_counterexamples: tuple
    completeness_counterexamples: tuple


def soundness_status(tbox: TBox, q, program: Program,
                     corpus: Iterable[ABox]) -> SoundnessReport:
    """Check the program against an exact oracle on the corpus.

    Soundness failures indicate an implementation bug; completeness
    failures are evidence against unraveling tolerance of the TBox, not
    an error.  Raises NoOracleError when no exact oracle applies.
    """
    concept = q.concept if isinstance(q, (ELIQ, ELQ)) else q
    if is_horn_alcfi(tbox):
        oracle_name = "chase"
        from .chase import complete, horn_entails_eliq

        def oracle(abox, a):
            return horn_entails_eliq(tbox, abox, ELIQ(concept, "x"), a)
    elif dialect(tbox) in ("ALC", "ALCI"):
        oracle_name = "csp"
        from .csp import certain_answer_eliq_csp

        def oracle(abox, a):
            return certain_answer_eliq_csp(tbox, abox, concept, a)
    else:
        raise NoOracleError(f"no exact oracle for dialect {dialect(tbox)}")

    sound_cex = []
    complete_cex = []
    checked = 0
    for abox in corpus:
        answers = {t[0] for t in evaluate(program, abox)}
        for a in sorted(abox.individuals()):
            checked += 1
            truth = oracle(abox, a)
            if a in answers and not truth:
                sound_cex.append((abox, a))
            if truth and a not in answers:
                complete_cex.append((abox, a))
    return SoundnessReport(oracle_name, checked,
                           not sound_cex, not complete_cex,
                           tuple(sound_cex), tuple(complete_cex))


# ---------------------------------------------------------------------------
# Unions and conjunctive glue
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlueRule:
    """The CQ-shaped head rule: goal(answer_vars) <- atoms and one
    sub-goal call per (variable, program index) pair."""
    answer_vars: tuple
    atoms: tuple = ()      # of DAtom over answer/extra variables
    calls: tuple = ()      # of (variable, program index)


def _rename_program(p: Program, prefix: str):
    mapping = {pred: f"{prefix}{pred}" for pred in p.idb()}
    rules = []
    for r in p.rules:
        head = DAtom(mapping[r.head.pred], r.head.args)
        body = tuple(DAtom(mapping.get(a.pred, a.pred), a.args) for a in r.body)
        rules.append(DRule(head, body, r.neq))
    return rules, mapping[p.goal]


def union_programs(programs, glue: Optional[GlueRule] = None) -> Program:
    """A single program answering the union of the inputs (UCQ case), or
    the conjunctive glue over their goals.  IDB names are renamed apart."""
    programs = list(programs)
    if not programs:
        raise ValueError("need at least one program")
    all_rules = []
    subgoals = []
    for i, p in enumerate(programs):
        rules, goal_name = _rename_program(p, f"u{i}_")
        all_rules.extend(rules)
        subgoals.append((goal_name, p.goal_arity))
    if glue is None:
        arity = programs[0].goal_arity
        if any(a != arity for _, a in subgoals):
            raise ValueError("plain union needs equal goal arities")
        args = tuple(f"x{i}" for i in range(arity))
        for goal_name, _ in subgoals:
            all_rules.append(DRule(DAtom("goal", args), (DAtom(goal_name, args),)))
        return Program(tuple(all_rules), "goal", arity)
    body = list(glue.atoms)
    for var, i in glue.calls:
        goal_name, arity = subgoals[i]
        if arity != 1:
            raise ValueError("glue calls expect unary sub-goals")
        body.append(DAtom(goal_name, (var,)))
    bound = {v for a in body for v in a.args}
    for v in glue.answer_vars:
        if v not in bound:
            body.append(DAtom(DOM, (v,)))
    all_rules.append(DRule(DAtom("goal", tuple(glue.answer_vars)), tuple(body)))
    return Program(tuple(all_rules), "goal", len(glue.answer_vars))
