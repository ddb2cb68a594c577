import random

from oracles import make_graph, random_graph, raw_certain_labels

from ontopath.chase import chase, certain_answers
from ontopath.query import parse_query
from ontopath.tbox import as_axiom, normalize, parse_tbox


def test_single_generation():
    g = make_graph({"a": ["Teacher"]})
    t = parse_tbox("Teacher <= exists teaches . Student")
    chased = chase(g, t, depth=1)
    assert "_:a/0" in chased.labels
    assert ("a", "teaches", "_:a/0") in chased.edges
    assert chased.has_label("_:a/0", "Student")


def test_depth_zero_only_label_closure():
    g = make_graph({"a": ["Teacher"]})
    t = parse_tbox("Teacher <= exists teaches . Student\nTeacher <= Employee")
    chased = chase(g, t, depth=0)
    assert set(chased.nodes) == {"a"}
    assert chased.has_label("a", "Employee")


def test_atomic_closure():
    g = make_graph({"b": ["B"]})
    chased = chase(g, parse_tbox("B <= A"), depth=1)
    assert chased.has_label("b", "A")


def test_witness_reuse_keeps_chase_small():
    g = make_graph({"a": ["A"]})
    t = parse_tbox("A <= exists r . A")
    chased = chase(g, t, depth=3)
    # One fresh node per generation, not an explosion.
    assert len(chased.labels) == 4


def test_inverse_existential_points_at_node():
    g = make_graph({"a": ["A"]})
    t = parse_tbox("A <= exists inv(r) . B")
    chased = chase(g, t, depth=1)
    assert ("_:a/0", "r", "a") in chased.edges


def test_role_closure_with_inversion():
    g = make_graph({"a": [], "b": []}, [("a", "mentors", "b")])
    t = parse_tbox("mentors <= teaches\ninv(teaches) <= taughtBy")
    chased = chase(g, t, depth=0)
    assert ("a", "teaches", "b") in chased.edges
    assert ("b", "taughtBy", "a") in chased.edges


def test_witness_naming_sidesteps_squatting_base_nodes():
    g = make_graph({"a": ["Teacher"], "_:a/0": []})
    t = parse_tbox("Teacher <= exists teaches . Student")
    chased = chase(g, t, depth=1)
    assert "_:a/0'" in chased.labels
    assert chased.has_label("_:a/0'", "Student")
    assert not chased.has_label("_:a/0", "Student")


def test_certain_answers_from_witness():
    g = make_graph({"a": ["Teacher"]})
    t = parse_tbox("Teacher <= exists teaches . Student")
    q = parse_query("q(x) :- teaches(x,y), Student(y)")
    assert certain_answers(q, g, t, depth=1) == {("a",)}


def test_anonymous_nodes_excluded_from_answers():
    g = make_graph({"a": ["Teacher"]})
    t = parse_tbox("Teacher <= exists teaches . Student")
    q = parse_query("q(x) :- Student(x)")
    assert certain_answers(q, g, t, depth=2) == set()


def test_empty_tbox_is_plain_evaluation():
    from ontopath.graph import eval_query
    from ontopath.tbox import TBox

    g = make_graph({"a": ["A"], "b": []}, [("a", "r", "b")])
    q = parse_query("q(x) :- A(x), r(x,y)")
    assert certain_answers(q, g, TBox(()), depth=2) == eval_query(q, g)


def test_boolean_query_may_use_witnesses():
    g = make_graph({"a": ["Teacher"]})
    t = parse_tbox("Teacher <= exists teaches . Student")
    q = parse_query("q() :- Student(y)")
    assert certain_answers(q, g, t, depth=1) == {()}


_TBOX_CORPUS = [
    "A <= B\nB <= C",
    "A <= exists r . B\nexists r . B <= C",
    "Student & Employee <= TA\nTA <= exists paidBy . Dept",
    "exists partOf . Region <= Region",
    "mentors <= teaches\nTeacher <= exists teaches . Student",
    "A <= exists r . (B & C)\nexists s . top <= D",
    "inv(employs) <= worksFor\nA <= exists employs . B",
    "top <= A\nA & B <= C",
]


def test_chase_matches_raw_structural_chase():
    """The production chase on normal forms agrees with the raw oracle chase
    on entailed base-node labels, both for the original axioms."""
    rng = random.Random(42)
    for text in _TBOX_CORPUS:
        t = normalize(parse_tbox(text))
        for _ in range(6):
            g = random_graph(
                rng, max_nodes=4,
                roles=("r", "s", "partOf", "mentors", "teaches", "employs", "paidBy"),
                labels=("A", "B", "C", "D", "Student", "Employee", "TA",
                        "Region", "Teacher", "Dept"),
                edge_prob=0.12,
            )
            chased = chase(g, t, depth=3)
            raw = raw_certain_labels(g, t.axioms, depth=3)
            for node in g.nodes:
                mine = {l for l in chased.labels[node] if not l.startswith("__nf")}
                assert mine == set(raw[node]), (text, node)


def test_normalization_is_conservative():
    """Certain atomic answers over original names agree before/after
    normalization (raw chase on both axiom sets)."""
    rng = random.Random(99)
    for text in _TBOX_CORPUS:
        t = normalize(parse_tbox(text))
        norm_axioms = tuple(as_axiom(nf) for nf in t.normalized)
        for _ in range(6):
            g = random_graph(
                rng, max_nodes=4,
                roles=("r", "s", "partOf", "mentors", "teaches", "employs", "paidBy"),
                labels=("A", "B", "C", "D", "Student", "Employee", "TA",
                        "Region", "Teacher", "Dept"),
                edge_prob=0.12,
            )
            before = raw_certain_labels(g, t.axioms, depth=3)
            after = raw_certain_labels(g, norm_axioms, depth=3)
            for node in g.nodes:
                original_before = {l for l in before[node] if not l.startswith("__nf")}
                original_after = {l for l in after[node] if not l.startswith("__nf")}
                assert original_before == original_after, (text, node)


def test_depth_monotonicity():
    rng = random.Random(5)
    t = normalize(parse_tbox("A <= exists r . B\nexists r . B <= A\nB <= exists s . A"))
    q = parse_query("q(x) :- r(x,y), B(y)")
    for _ in range(10):
        g = random_graph(rng, max_nodes=5, roles=("r", "s"), labels=("A", "B"))
        previous = set()
        for depth in range(4):
            answers = certain_answers(q, g, t, depth)
            assert previous <= answers
            previous = answers
