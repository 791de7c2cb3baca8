import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cop.backends import StubBackend
from cop.capture import fragment_text, integrate_fragments, link_logical, link_semantic
from cop.errors import NoParsableLines, UnparsedPremise
from cop.model import PremiseGraph, RelationEdge
from cop.prompts import PromptSet

from fixtures import appendix
from helpers import make_context, union_find_components


def test_modus_ponens_chain_links_forward():
    context = make_context(["If the bear is red then the bear is big.",
                            "If the bear is big then the bear is cold."])
    graph = link_logical(context)
    assert [(e.source, e.target) for e in graph.edges] == [("p1", "p2")]


def test_fact_links_into_consuming_rule():
    context = make_context(["The bald eagle eats the tiger.",
                            "If something eats the tiger then it eats the bear."])
    graph = link_logical(context)
    assert [(e.source, e.target) for e in graph.edges] == [("p1", "p2")]


def test_unrelated_facts_stay_unlinked():
    context = make_context(["The bear is green.", "The dog is big."])
    assert link_logical(context).edges == ()


def test_facts_never_receive_edges():
    context = make_context(["If something is red then it is big.", "The bear is red."])
    graph = link_logical(context)
    assert all(edge.target != "p2" for edge in graph.edges)
    assert [(e.source, e.target) for e in graph.edges] == [("p2", "p1")]


def test_unparsed_premises_reported():
    context = make_context(["The bear is green.", "Something entirely unparseable happens there."])
    with pytest.raises(UnparsedPremise) as excinfo:
        link_logical(context)
    assert excinfo.value.premise_ids == ["p2"]


def test_link_logical_permutation_isomorphic():
    texts = appendix.CASE1_CONTEXT.split(". ")
    texts = [t if t.endswith(".") else t + "." for t in texts]
    context = make_context(texts)
    graph = link_logical(context)
    base_edges = {(context.premise(e.source).text, context.premise(e.target).text) for e in graph.edges}

    rng = random.Random(5)
    for _ in range(3):
        order = list(texts)
        rng.shuffle(order)
        shuffled_context = make_context(order)
        shuffled = link_logical(shuffled_context)
        edges = {
            (shuffled_context.premise(e.source).text, shuffled_context.premise(e.target).text)
            for e in shuffled.edges
        }
        assert edges == base_edges


def _graph(nodes, pairs):
    return PremiseGraph(
        nodes=tuple(nodes),
        edges=tuple(RelationEdge(a, b, origin="llm") for a, b in pairs),
    )


def test_four_fragments_with_two_singletons():
    # presentation: p1 irrelevant singleton, p2->p6 and p3->p4 relevant pieces, p5 singleton
    nodes = [f"p{i}" for i in range(1, 7)]
    graph = _graph(nodes, [("p2", "p6"), ("p3", "p4")])
    fragments = integrate_fragments(graph)
    assert [f.member_ids for f in fragments] == [("p1",), ("p2", "p6"), ("p3", "p4"), ("p5",)]
    singletons = [f.member_ids for f in fragments if len(f.member_ids) == 1]
    assert singletons == [("p1",), ("p5",)]


def test_edgeless_graph_gives_singletons():
    nodes = [f"p{i}" for i in range(1, 6)]
    fragments = integrate_fragments(_graph(nodes, []))
    assert [f.member_ids for f in fragments] == [(n,) for n in nodes]


def test_components_match_union_find_oracle():
    nodes = ["p1", "p2", "p3", "p4", "p5"]
    fragments = integrate_fragments(_graph(nodes, [("p1", "p2"), ("p2", "p3"), ("p4", "p5")]))
    assert [set(f.member_ids) for f in fragments] == [{"p1", "p2", "p3"}, {"p4", "p5"}]


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_fragments_partition_matches_oracle(data):
    n = data.draw(st.integers(1, 9))
    nodes = [f"p{i + 1}" for i in range(n)]
    pairs = data.draw(
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda t: t[0] != t[1]),
            max_size=12,
            unique=True,
        )
    )
    edge_pairs = list({(nodes[a], nodes[b]) for a, b in pairs})
    fragments = integrate_fragments(_graph(nodes, edge_pairs))
    expected = union_find_components(nodes, edge_pairs)
    assert [set(f.member_ids) for f in fragments] == expected
    covered = [m for f in fragments for m in f.member_ids]
    assert sorted(covered) == sorted(nodes)


def test_link_semantic_single_call_and_graph():
    context = make_context(appendix.CAPTURE_CONTEXT, question="How much will Mary pay?",
                           task_kind="math_numeric")
    backend = StubBackend(["\n".join(appendix.CAPTURE_LINES)])
    graph, parse = link_semantic(context, backend, PromptSet.default(), family="digsm")
    assert backend.calls == 1
    assert len(graph.edges) == len(appendix.CAPTURE_EDGES)
    assert set(graph.nodes) == {p.id for p in context.premises}


def test_link_semantic_single_premise_context():
    context = make_context(["Mary went to the store to buy fruit."],
                           question="What did Mary do?", task_kind="math_numeric")
    backend = StubBackend(["Mary went to the store to buy fruit. -> None."])
    graph, _ = link_semantic(context, backend, PromptSet.default(), family="digsm")
    assert graph.nodes == ("p1",)
    assert graph.edges == ()


def test_link_semantic_retries_once_then_raises():
    context = make_context(appendix.CAPTURE_CONTEXT, task_kind="math_numeric")
    backend = StubBackend(["no arrows here", "still no arrows"])
    with pytest.raises(NoParsableLines):
        link_semantic(context, backend, PromptSet.default(), family="digsm")
    assert backend.calls == 2


def test_fragment_text_follows_edges():
    nodes = [f"p{i}" for i in range(1, 5)]
    graph = _graph(nodes, [("p3", "p4"), ("p4", "p1"), ("p1", "p2")])
    context = make_context(["middle", "shortest", "three trees", "tallest"])
    fragments = integrate_fragments(graph)
    assert fragment_text(fragments[0], context) == "three trees tallest middle shortest"
