import random

import pytest

from omq.syntax import ABox, Atom, ELIQ, Exists, Role, TBox, parse_abox, parse_tbox
from omq.chase import horn_entails_eliq
from omq.datalog import (
    DAtom, DOM, DRule, GlueRule, NoOracleError, Program, SizeGuardError,
    build_rewriting, evaluate, parse_program, print_program, soundness_status,
    union_programs,
)

from genutil import rand_abox

A = Atom("A")
r = Role("r")

T_EXISTS_L = parse_tbox("some r.A sub A")

REACHABILITY = Program((
    DRule(DAtom("goal", ("x",)), (DAtom("P", ("x",)),)),
    DRule(DAtom("P", ("x",)), (DAtom("A", ("x",)),)),
    DRule(DAtom("P", ("x",)), (DAtom("r", ("x", "y")), DAtom("P", ("y",)))),
), "goal", 1)

FUNC_VIOLATION = Program((
    DRule(DAtom("goal", ()), (DAtom("r", ("x", "y1")), DAtom("r", ("x", "y2"))),
          (("y1", "y2"),)),
    DRule(DAtom("goal", ()), (DAtom("M", ("x",)),)),
), "goal", 0)


def test_reachability_program():
    got = evaluate(REACHABILITY, parse_abox("r(a,b)\nA(b)"))
    assert got == {("a",), ("b",)}
    got = evaluate(REACHABILITY, parse_abox("r(a,b)\nr(b,c)\nA(c)\nr(z,z)"))
    assert got == {("a",), ("b",), ("c",)}


def test_no_goal_rule_is_empty():
    p = Program((DRule(DAtom("P", ("x",)), (DAtom("A", ("x",)),)),), "goal", 1)
    assert evaluate(p, parse_abox("A(a)")) == frozenset()


def test_functionality_violation_program():
    assert evaluate(FUNC_VIOLATION, parse_abox("r(a,b1)\nr(a,b2)")) == {()}
    assert evaluate(FUNC_VIOLATION, parse_abox("r(a,b)")) == frozenset()
    assert evaluate(FUNC_VIOLATION, parse_abox("M(a)")) == {()}


def test_program_validation():
    with pytest.raises(ValueError, match="unsafe"):
        Program((DRule(DAtom("goal", ("x",)), (DAtom("A", ("y",)),)),))
    with pytest.raises(ValueError, match="goal"):
        Program((DRule(DAtom("P", ("x",)), (DAtom("goal", ("x",)),)),
                 DRule(DAtom("goal", ("x",)), (DAtom("A", ("x",)),))))


def test_seminaive_equals_naive_random():
    rng = random.Random(61)
    preds_u = ["A", "B", "P", "Q"]
    preds_b = ["r", "s"]
    for _ in range(150):
        rules = []
        for _k in range(rng.randint(1, 5)):
            head_pred = rng.choice(["goal", "P", "Q"])
            head_vars = ("x",) if head_pred != "goal" else ("x",)
            body = []
            variables = ["x"]
            for _j in range(rng.randint(1, 3)):
                if rng.random() < 0.5:
                    body.append(DAtom(rng.choice(preds_u), (rng.choice(variables),)))
                else:
                    v = f"y{_j}"
                    body.append(DAtom(rng.choice(preds_b),
                                      (rng.choice(variables), v)))
                    variables.append(v)
            if not any("x" in a.args for a in body):
                body.append(DAtom(DOM, ("x",)))
            neq = ()
            if len(variables) >= 2 and rng.random() < 0.3:
                neq = ((variables[0], variables[-1]),)
            rules.append(DRule(DAtom(head_pred, head_vars), tuple(body), neq))
        if not any(ru.head.pred == "goal" for ru in rules):
            continue
        try:
            p = Program(tuple(rules), "goal", 1)
        except ValueError:
            continue
        abox = rand_abox(rng, n_individuals=4, n_assertions=6,
                         concepts=("A", "B"), roles=("r", "s"))
        assert evaluate(p, abox, "seminaive") == evaluate(p, abox, "naive")


def test_monotone_for_inequality_free():
    rng = random.Random(62)
    for _ in range(60):
        abox = rand_abox(rng, n_individuals=4, n_assertions=5,
                         concepts=("A",), roles=("r",))
        extra = rand_abox(rng, n_individuals=3, n_assertions=3,
                          concepts=("A",), roles=("r",))
        bigger = abox.union(extra)
        assert evaluate(REACHABILITY, abox) <= evaluate(REACHABILITY, bigger)


def test_program_text_roundtrip():
    for p in (REACHABILITY, FUNC_VIOLATION):
        back = parse_program(print_program(p))
        assert set(back.rules) == set(p.rules)
        assert (back.goal, back.goal_arity) == (p.goal, p.goal_arity)


# -- build_rewriting ----------------------------------------------------------

def test_rewriting_empty_tbox():
    p = build_rewriting(TBox.of(), ELIQ(A, "x"))
    assert p.is_monadic()
    assert evaluate(p, parse_abox("A(a)\nr(a,b)")) == {("a",)}
    assert evaluate(p, parse_abox("B(b)")) == frozenset()


def test_rewriting_matches_reachability():
    p = build_rewriting(T_EXISTS_L, ELIQ(A, "x"))
    assert p.is_monadic()
    rng = random.Random(63)
    for _ in range(120):
        abox = rand_abox(rng, n_individuals=5, n_assertions=7,
                         concepts=("A",), roles=("r",))
        assert evaluate(p, abox) == evaluate(REACHABILITY, abox), abox
    # the chase agrees as well
    for _ in range(40):
        abox = rand_abox(rng, n_individuals=4, n_assertions=5,
                         concepts=("A",), roles=("r",))
        answers = {t[0] for t in evaluate(p, abox)}
        for a in sorted(abox.individuals()):
            assert (a in answers) == horn_entails_eliq(T_EXISTS_L, abox, ELIQ(A, "x"), a)


def test_rewriting_unraveling_intolerant_tbox_incomplete():
    # A and some r.A sub B, not A and some r.not A sub B: on the loop
    # r(a,a) the certain answer holds but the monadic program cannot see it
    t2 = parse_tbox("A and some r.A sub B\nnot A and some r.not A sub B")
    p = build_rewriting(t2, ELIQ(Atom("B"), "x"))
    assert evaluate(p, parse_abox("r(a,a)")) == frozenset()
    from omq.semantics import bruteforce_certain_answer
    holds, _ = bruteforce_certain_answer(t2, parse_abox("r(a,a)"),
                                         ELIQ(Atom("B"), "x"), ("a",))
    assert holds


def test_rewriting_functionality_goal_rules():
    t = parse_tbox("func(r)\ntop sub top")
    p = build_rewriting(t, ELIQ(Atom("M"), "x"))
    # inconsistency makes every individual an answer
    answers = evaluate(p, parse_abox("r(a,b1)\nr(a,b2)"))
    assert answers == {("a",), ("b1",), ("b2",)}
    assert evaluate(p, parse_abox("r(a,b)")) == frozenset()
    # on consistent data only the M-individual answers the unary query
    assert evaluate(p, parse_abox("M(a)\nr(a,b)")) == {("a",)}


def test_rewriting_size_guard():
    t = parse_tbox("some r.A sub A")
    with pytest.raises(SizeGuardError):
        build_rewriting(t, ELIQ(A, "x"), max_idbs=1)


def test_rule5_effect_inconsistency_means_all_answers():
    t = parse_tbox("A sub bot")
    p = build_rewriting(t, ELIQ(Atom("B"), "x"))
    got = evaluate(p, parse_abox("A(a)\nB(b)\nr(b,c)"))
    assert got == {("a",), ("b",), ("c",)}
    assert evaluate(p, parse_abox("B(b)")) == {("b",)}


# -- soundness_status ---------------------------------------------------------

def test_soundness_horn_reachability():
    p = build_rewriting(T_EXISTS_L, ELIQ(A, "x"))
    rng = random.Random(64)
    corpus = [rand_abox(rng, n_individuals=4, n_assertions=5,
                        concepts=("A",), roles=("r",)) for _ in range(30)]
    report = soundness_status(T_EXISTS_L, ELIQ(A, "x"), p, corpus)
    assert report.oracle == "chase"
    assert report.sound and report.complete
    assert report.checked > 0


def test_soundness_empty_corpus_vacuous():
    p = build_rewriting(TBox.of(), ELIQ(A, "x"))
    report = soundness_status(TBox.of(), ELIQ(A, "x"), p, [])
    assert report.sound and report.complete and report.checked == 0


def test_soundness_no_oracle():
    t = parse_tbox("func(r)\nA sub A1 or A2")
    p = build_rewriting(t, ELIQ(A, "x"))
    with pytest.raises(NoOracleError):
        soundness_status(t, ELIQ(A, "x"), p, [])


# -- union_programs -----------------------------------------------------------

def test_union_single_program():
    u = union_programs([REACHABILITY])
    rng = random.Random(65)
    for _ in range(30):
        abox = rand_abox(rng, concepts=("A",), roles=("r",))
        assert evaluate(u, abox) == evaluate(REACHABILITY, abox)


def reach_to(name):
    return Program((
        DRule(DAtom("goal", ("x",)), (DAtom("P", ("x",)),)),
        DRule(DAtom("P", ("x",)), (DAtom(name, ("x",)),)),
        DRule(DAtom("P", ("x",)), (DAtom("r", ("x", "y")), DAtom("P", ("y",)))),
    ), "goal", 1)


def test_union_answers_ucq():
    u = union_programs([reach_to("A"), reach_to("B")])
    rng = random.Random(66)
    for _ in range(60):
        abox = rand_abox(rng, n_individuals=4, n_assertions=6,
                         concepts=("A", "B"), roles=("r",))
        expect = evaluate(reach_to("A"), abox) | evaluate(reach_to("B"), abox)
        assert evaluate(u, abox) == expect


def test_glue_empty_phi_is_intersection():
    glue = GlueRule(("x",), (), (("x", 0), ("x", 1)))
    u = union_programs([reach_to("A"), reach_to("B")], glue)
    rng = random.Random(67)
    for _ in range(60):
        abox = rand_abox(rng, n_individuals=4, n_assertions=6,
                         concepts=("A", "B"), roles=("r",))
        expect = evaluate(reach_to("A"), abox) & evaluate(reach_to("B"), abox)
        assert evaluate(u, abox) == expect


def test_glue_with_atoms():
    # goal(x) <- r(x,y) and goal_A(y): reach-an-A via one explicit hop
    glue = GlueRule(("x",), (DAtom("r", ("x", "y")),), (("y", 0),))
    u = union_programs([reach_to("A")], glue)
    got = evaluate(u, parse_abox("r(a,b)\nr(b,c)\nA(c)"))
    assert got == {("a",), ("b",)}
