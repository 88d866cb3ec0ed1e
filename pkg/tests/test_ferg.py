import json
import statistics

import pytest
from hypothesis import given, strategies as st

from formgraph.dom import ElementKind, extract_form_model, parse_document
from formgraph.embedding import build_embedding_space
from formgraph.errors import MissingEmbedding, UnknownNode
from formgraph.ferg import (
    AdjacencyHints,
    Box,
    EdgeKind,
    Ferg,
    FergEdge,
    FergNode,
    PruningParams,
    build_local_graph,
    candidate_adjacency,
    ferg_to_dot,
    ferg_to_json,
    prune_auxiliary_edges,
    prune_text_text_edges,
    query_context,
    relate_input_fields,
    resolve_label,
)
from formgraph.node2vec import Node2VecParams
from formgraph.textembed import NgramProvider


def text_node(node_id, order=None):
    return FergNode(id=node_id, kind=ElementKind.TEXT_ELEMENT, doc_order=order or node_id, text=f"t{node_id}")


def input_node(node_id, order=None):
    return FergNode(id=node_id, kind=ElementKind.INPUT_FIELD, doc_order=order or node_id, text=f"i{node_id}")


def local_edge(a, b, w):
    return FergEdge(a=min(a, b), b=max(a, b), weight=w, kind=EdgeKind.LOCAL_TEXTUAL)


@pytest.fixture(scope="module")
def pruned_travel_graph(travel_analysis):
    return travel_analysis.graph


class TestCandidateAdjacency:
    def test_label_immediately_before_input_included(self):
        tree = parse_document('<form><label>From 1</label><input type="text" name="f1"></form>')
        model = extract_form_model(tree)
        pairs = candidate_adjacency(model, tree)
        label = model.texts[0].node
        field = model.fields[0].node
        assert (min(label, field), max(label, field)) in pairs

    def test_distant_fields_excluded_in_window_mode(self):
        spans = "".join(f"<span>s{i}</span>" for i in range(10))
        html = f'<form><input type="text" name="a">{spans}<input type="text" name="b"></form>'
        tree = parse_document(html)
        model = extract_form_model(tree)
        pairs = candidate_adjacency(model, tree)
        a, b = model.fields[0].node, model.fields[1].node
        assert (min(a, b), max(a, b)) not in pairs

    def test_geometry_mode_overrides_document_distance(self):
        spans = "".join(f"<span>s{i}</span>" for i in range(10))
        html = f'<form><input type="text" name="a">{spans}<input type="text" name="b"></form>'
        tree = parse_document(html)
        model = extract_form_model(tree)
        a, b = model.fields[0].node, model.fields[1].node
        boxes = {n: Box(0, 1000, 10, 10) for n in [t.node for t in model.texts]}
        boxes[a] = Box(0, 0, 100, 20)
        boxes[b] = Box(110, 0, 100, 20)  # 10px gap: adjacent
        pairs = candidate_adjacency(model, tree, AdjacencyHints(boxes=boxes))
        assert (min(a, b), max(a, b)) in pairs

    def test_geometry_gap_beyond_16px_excluded(self):
        html = '<form><input type="text" name="a"><input type="text" name="b"></form>'
        tree = parse_document(html)
        model = extract_form_model(tree)
        a, b = model.fields[0].node, model.fields[1].node
        boxes = {a: Box(0, 0, 100, 20), b: Box(130, 0, 100, 20)}  # 30px gap
        pairs = candidate_adjacency(model, tree, AdjacencyHints(boxes=boxes))
        assert pairs == set()


class TestBuildLocalGraph:
    def test_single_pair_single_edge(self):
        tree = parse_document('<form><label>Name</label><input type="text" name="n"></form>')
        model = extract_form_model(tree)
        space = build_embedding_space(model, tree, NgramProvider(), Node2VecParams())
        pairs = candidate_adjacency(model, tree)
        g = build_local_graph(space, pairs, model, tree)
        assert len(g.edges) == len(pairs) == 1
        edge = g.edges[0]
        assert edge.weight == pytest.approx(
            space.similarity(model.texts[0].node, model.fields[0].node)
        )

    def test_no_pairs_no_edges(self):
        tree = parse_document('<form><label>Name</label><input type="text" name="n"></form>')
        model = extract_form_model(tree)
        space = build_embedding_space(model, tree, NgramProvider(), Node2VecParams())
        g = build_local_graph(space, set(), model, tree)
        assert g.edges == ()
        assert len(g.nodes) == 2

    def test_missing_embedding_raises(self):
        tree = parse_document('<form><label>Name</label><input type="text" name="n"></form>')
        model = extract_form_model(tree)
        space = build_embedding_space(model, tree, NgramProvider(), Node2VecParams())
        with pytest.raises(MissingEmbedding):
            build_local_graph(space, {(998, 999)}, model, tree)

    def test_fixture_label_prefers_own_input(self, travel_analysis):
        # the From 1 label-input edge outweighs the From 1 label-To 1 edge
        tree, model, space = (
            travel_analysis.tree,
            travel_analysis.model,
            travel_analysis.space,
        )
        by_label = {t.text: t.node for t in model.texts}
        by_aria = {
            tree.node(f.node).attributes["aria-label"]: f.node for f in model.fields
        }
        pairs = candidate_adjacency(model, tree)
        g = build_local_graph(space, pairs, model, tree)
        weights = {(e.a, e.b): e.weight for e in g.edges}

        def weight(a, b):
            return weights[(min(a, b), max(a, b))]

        label = by_label["From 1"]
        assert weight(label, by_aria["From 1"]) > weight(label, by_aria["To 1"])


class TestPruneAuxiliary:
    def _graph(self, edges, nodes):
        return Ferg(nodes={n.id: n for n in nodes}, edges=tuple(edges))

    def test_keeps_strongest_text_input_edge(self):
        g = self._graph(
            [local_edge(0, 1, 0.8), local_edge(0, 2, 0.6)],
            [text_node(0), input_node(1), input_node(2)],
        )
        pruned = prune_auxiliary_edges(g)
        assert pruned.edges == (local_edge(0, 1, 0.8),)

    def test_single_attachment_untouched(self):
        g = self._graph([local_edge(0, 1, 0.3)], [text_node(0), input_node(1)])
        assert prune_auxiliary_edges(g).edges == g.edges

    def test_tie_breaks_to_lower_doc_order(self):
        g = self._graph(
            [local_edge(0, 1, 0.7), local_edge(0, 2, 0.7)],
            [text_node(0), input_node(1), input_node(2)],
        )
        pruned = prune_auxiliary_edges(g)
        assert pruned.edges == (local_edge(0, 1, 0.7),)

    def test_text_text_edges_untouched(self):
        g = self._graph(
            [local_edge(0, 1, 0.2), local_edge(0, 2, 0.9), local_edge(0, 3, 0.5)],
            [text_node(0), text_node(1), input_node(2), input_node(3)],
        )
        pruned = prune_auxiliary_edges(g)
        assert local_edge(0, 1, 0.2) in pruned.edges
        assert local_edge(0, 2, 0.9) in pruned.edges

    def test_every_text_keeps_at_most_one_input_edge(self, travel_analysis):
        g = travel_analysis.graph
        for node in g.nodes.values():
            if node.kind is not ElementKind.TEXT_ELEMENT:
                continue
            attached = [
                e
                for e in g.incident(node.id, EdgeKind.LOCAL_TEXTUAL)
                if g.nodes[e.other(node.id)].kind is ElementKind.INPUT_FIELD
            ]
            assert len(attached) <= 1


class TestPruneTextText:
    def _graph(self, weights):
        nodes = [text_node(i) for i in range(len(weights) + 1)]
        edges = [local_edge(i, i + 1, w) for i, w in enumerate(weights)]
        return Ferg(nodes={n.id: n for n in nodes}, edges=tuple(edges))

    def test_hand_computed_threshold(self):
        # mean 0.5, population stddev sqrt(0.26/3) ~ 0.29439, cut ~ 0.64720
        g = self._graph([0.2, 0.4, 0.9])
        pruned = prune_text_text_edges(g, PruningParams())
        kept = [e.weight for e in pruned.edges]
        assert kept == [0.9]
        mu = statistics.mean([0.2, 0.4, 0.9])
        sigma = statistics.pstdev([0.2, 0.4, 0.9])
        assert mu + 0.5 * sigma == pytest.approx(0.6472, abs=1e-4)

    def test_single_edge_retained(self):
        g = self._graph([0.05])
        assert prune_text_text_edges(g, PruningParams()).edges == g.edges

    def test_zero_spread_keeps_all(self):
        g = self._graph([0.4, 0.4, 0.4])
        assert len(prune_text_text_edges(g, PruningParams()).edges) == 3

    def test_sample_mode(self):
        g = self._graph([0.2, 0.4, 0.9])
        pruned = prune_text_text_edges(g, PruningParams(std_mode="sample"))
        assert [e.weight for e in pruned.edges] == [0.9]

    @given(
        st.lists(
            st.floats(min_value=-0.9, max_value=0.9), min_size=2, max_size=12
        ),
        st.floats(min_value=-0.05, max_value=0.05),
    )
    def test_shift_invariance(self, weights, shift):
        from hypothesis import assume
        from formgraph.ferg import _threshold

        cut = _threshold(weights, PruningParams())
        # stay away from the boundary: float rounding of w + shift must not
        # be able to flip a keep/drop decision
        assume(all(abs(w - cut) > 1e-9 for w in weights))
        base = self._graph(weights)
        shifted = self._graph([w + shift for w in weights])

        def kept_indices(graph):
            pruned = prune_text_text_edges(graph)
            return {(e.a, e.b) for e in pruned.edges}

        assert kept_indices(base) == kept_indices(shifted)

    def test_monotone_shrink(self, travel_analysis):
        # pruning never adds local edges and never drops nodes
        tree, model, space = (
            travel_analysis.tree,
            travel_analysis.model,
            travel_analysis.space,
        )
        pairs = candidate_adjacency(model, tree)
        g0 = build_local_graph(space, pairs, model, tree)
        g1 = prune_auxiliary_edges(g0)
        g2 = prune_text_text_edges(g1)
        assert set(g1.edges) <= set(g0.edges)
        assert set(g2.edges) <= set(g1.edges)
        assert g0.nodes == g1.nodes == g2.nodes


class TestRelateInputFields:
    def test_label_similarity_wins_over_input(self):
        nodes = [input_node(0), input_node(1), text_node(2), text_node(3)]
        g = Ferg(
            nodes={n.id: n for n in nodes},
            edges=(local_edge(0, 2, 0.9), local_edge(1, 3, 0.9)),
        )

        class FakeSpace:
            entries = {0: (1.0, 0.0), 1: (0.0, 1.0), 2: (1.0, 0.5), 3: (1.0, 0.4)}

            def similarity(self, a, b):
                from formgraph.embedding import cosine_sim

                return cosine_sim(self.entries[a], self.entries[b])

            def vector(self, node):
                return self.entries[node]

        from formgraph.embedding import cosine_sim

        related = relate_input_fields(FakeSpace(), g)
        edge = next(e for e in related.edges if e.kind is EdgeKind.RELEVANT_INPUT)
        label_sim = cosine_sim((1.0, 0.5), (1.0, 0.4))
        input_sim = cosine_sim((1.0, 0.0), (0.0, 1.0))
        assert label_sim > input_sim
        assert edge.weight == pytest.approx(max(label_sim, input_sim))

    def test_unlabeled_fields_use_input_similarity(self):
        nodes = [input_node(0), input_node(1)]
        g = Ferg(nodes={n.id: n for n in nodes}, edges=())

        class FakeSpace:
            entries = {0: (1.0, 1.0), 1: (1.0, 0.8)}

            def similarity(self, a, b):
                from formgraph.embedding import cosine_sim

                return cosine_sim(self.entries[a], self.entries[b])

            def vector(self, node):
                return self.entries[node]

        related = relate_input_fields(FakeSpace(), g)
        edges = [e for e in related.edges if e.kind is EdgeKind.RELEVANT_INPUT]
        assert len(edges) == 1  # single candidate: filter is a no-op

    def test_travel_fixture_retains_key_relations(self, travel_analysis):
        g = travel_analysis.graph
        nodes = travel_analysis.field_nodes
        relevant = {
            frozenset((e.a, e.b))
            for e in g.edges
            if e.kind is EdgeKind.RELEVANT_INPUT
        }
        assert frozenset((nodes["From 1"], nodes["To 1"])) in relevant
        assert frozenset((nodes["From 1"], nodes["From 2"])) in relevant


class TestQueryContext:
    def test_local_texts_start_with_label(self, travel_analysis):
        ctx = travel_analysis.context_for("From 1")
        assert ctx.local_texts[0][1] == "From 1"

    def test_isolated_field_has_empty_context(self):
        g = Ferg(nodes={0: input_node(0)}, edges=())
        ctx = query_context(g, 0)
        assert ctx.local_texts == () and ctx.relevant_fields == ()

    def test_unknown_node(self, pruned_travel_graph):
        with pytest.raises(UnknownNode):
            query_context(pruned_travel_graph, 10_000)

    def test_descending_weight_order(self, travel_analysis):
        for label in ("From 1", "To 1"):
            ctx = travel_analysis.context_for(label)
            weights = [w for _, _, w in ctx.relevant_fields]
            assert weights == sorted(weights, reverse=True)


class TestLabelResolution:
    def test_resolve_label_on_fixture(self, travel_analysis):
        g = travel_analysis.graph
        for label, node in travel_analysis.field_nodes.items():
            resolved = resolve_label(g, node)
            assert resolved is not None
            assert g.nodes[resolved].text == label


class TestExport:
    def test_json_shape(self, pruned_travel_graph):
        data = json.loads(ferg_to_json(pruned_travel_graph))
        assert {"nodes", "edges"} == set(data)
        assert {"a", "b", "weight", "kind"} <= set(data["edges"][0])

    def test_dot_contains_nodes_and_edges(self, pruned_travel_graph):
        dot = ferg_to_dot(pruned_travel_graph)
        assert dot.startswith("graph ferg {")
        assert "--" in dot
