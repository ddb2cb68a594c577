import pytest

from ontopath.cypher import emit_cypher
from ontopath.errors import UnsupportedPathError
from ontopath.query import (
    C2RPQ,
    ConceptAtom,
    DataTest,
    EdgeStep,
    RoleAtom,
    TestAtom,
    TestNot,
    UC2RPQ,
    concat_path,
    parse_query,
    star_path,
    union_path,
)
from ontopath.rewriter import rewrite_ncq
from ontopath.tbox import Role, parse_tbox


def single(q: C2RPQ) -> UC2RPQ:
    return UC2RPQ(q.answer_vars, (q,))


def test_label_test_branch():
    q = C2RPQ(("x",), frozenset({ConceptAtom(frozenset({"Teacher"}), "x")}))
    assert emit_cypher(single(q)).text == (
        "MATCH (x) WHERE x:Teacher RETURN DISTINCT x AS c0\n"
    )


def test_edge_union_packs_into_one_relationship():
    q = parse_query("q(x,y) :- (mentors|teaches)(x,y)", extended=True)
    assert emit_cypher(single(q)).text == (
        "MATCH (x)-[:mentors|teaches]->(y) RETURN DISTINCT x AS c0, y AS c1\n"
    )


def test_star_with_terminal_label_test():
    q = parse_query("q(x,y) :- (partOf*.<Region>)(x,y)", extended=True)
    assert emit_cypher(single(q)).text == (
        "MATCH (x)-[:partOf*0..]->(y) WHERE y:Region "
        "RETURN DISTINCT x AS c0, y AS c1\n"
    )


def test_inverse_edge_uses_pattern_direction():
    q = parse_query("q(x,y) :- inv(teaches)(x,y)", extended=True)
    assert emit_cypher(single(q)).text == (
        "MATCH (x)<-[:teaches]-(y) RETURN DISTINCT x AS c0, y AS c1\n"
    )


def test_union_of_mixed_shapes_distributes_into_branches():
    q = parse_query("q(x) :- (<GradStudent|Student>|enrolledIn.<Course>)(x,w)",
                    extended=True)
    text = emit_cypher(single(q)).text
    branches = text.strip().split("\nUNION\n")
    assert len(branches) == 2
    assert "MATCH (x) WHERE (x:GradStudent OR x:Student) RETURN DISTINCT x AS c0" in branches
    assert ("MATCH (x)-[:enrolledIn]->(`__w0`) WHERE `__w0`:Course "
            "RETURN DISTINCT x AS c0") not in branches  # w keeps its own name
    assert any("enrolledIn" in b and ":Course" in b for b in branches)


def test_node_data_test_condition():
    q = parse_query("q(x) :- Person(x), age>30(x)")
    text = emit_cypher(single(q)).text
    assert "coalesce(x.age > 30, false)" in text
    assert "x:Person" in text


def test_negated_test_wraps_not():
    q = C2RPQ(("x",), frozenset({
        ConceptAtom(frozenset({"Person"}), "x"),
        TestAtom(TestNot(DataTest("age", ">", 30)), ("x",)),
    }))
    assert "NOT (coalesce(x.age > 30, false))" in emit_cypher(single(q)).text


def test_edge_data_test_binds_relationship_variable():
    q = parse_query("q(x,y) :- r(x,y), since<=2000(x,y)")
    text = emit_cypher(single(q)).text
    assert "MATCH (x)-[e0:r]->(y) WHERE coalesce(e0.since <= 2000, false)" in text


def test_edge_data_test_without_host_edge_fails():
    q = C2RPQ(("x", "y"), frozenset({
        RoleAtom(star_path(EdgeStep(Role("r"))), "x", "y"),
        TestAtom(DataTest("since", "<=", 2000), ("x", "y")),
    }))
    with pytest.raises(UnsupportedPathError):
        emit_cypher(single(q))


def test_star_over_concat_is_unsupported():
    path = star_path(concat_path([EdgeStep(Role("r")), EdgeStep(Role("s"))]))
    q = C2RPQ(("x",), frozenset({RoleAtom(path, "x", "y")}))
    with pytest.raises(UnsupportedPathError):
        emit_cypher(single(q))


def test_star_over_mixed_direction_union_is_unsupported():
    path = star_path(union_path([EdgeStep(Role("r")),
                                 EdgeStep(Role("s", inverted=True))]))
    q = C2RPQ(("x",), frozenset({RoleAtom(path, "x", "y")}))
    with pytest.raises(UnsupportedPathError):
        emit_cypher(single(q))


def test_mixed_direction_union_distributes_outside_star():
    q = parse_query("q(x,y) :- (r|inv(s))(x,y)", extended=True)
    text = emit_cypher(single(q)).text
    assert "(x)-[:r]->(y)" in text
    assert "(x)<-[:s]-(y)" in text
    assert "UNION" in text


def test_nullary_query_emits_constant_column():
    q = C2RPQ((), frozenset({ConceptAtom(frozenset({"A"}), "x")}))
    result = emit_cypher(single(q))
    assert "RETURN DISTINCT 1 AS c0" in result.text
    assert any("nullary" in d for d in result.diagnostics)


def test_reserved_names_are_backticked():
    q = parse_query("q(x) :- (partOf*.<Region>)(x,__w0)", extended=True)
    text = emit_cypher(single(q)).text
    assert "`__w0`" in text


def test_exactly_one_return_per_branch():
    q = parse_query("q(x) :- teaches(x,y), Student(y)")
    t = parse_tbox("Teacher <= exists teaches . Student\nmentors <= teaches")
    rewriting = rewrite_ncq(q, t).to_uc2rpq()
    text = emit_cypher(rewriting).text
    for branch in text.strip().split("\nUNION\n"):
        assert branch.count("RETURN") == 1
        assert "DISTINCT" in branch
        assert branch.rstrip().endswith("AS c0")


def test_emission_is_deterministic():
    q = parse_query("q(x) :- teaches(x,y), (Student|TA)(y)")
    t = parse_tbox(
        "Teacher <= exists teaches . Student\nmentors <= teaches\n"
        "GradStudent <= Student\nexists partOf . Region <= Region\n"
    )
    first = emit_cypher(rewrite_ncq(q, t).to_uc2rpq())
    second = emit_cypher(rewrite_ncq(q, t).to_uc2rpq())
    assert first.text == second.text


def test_self_loop_role_atom():
    q = parse_query("q(x) :- r(x,x)")
    assert emit_cypher(single(q)).text == (
        "MATCH (x)-[:r]->(x) RETURN DISTINCT x AS c0\n"
    )
