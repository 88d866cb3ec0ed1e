import math

import pytest
from hypothesis import given, strategies as st

from formgraph.dom import extract_form_model, parse_document
from formgraph.embedding import (
    build_embedding_space,
    cosine_sim,
    document_hash,
    space_cache_key,
    space_from_json,
    space_to_json,
)
from formgraph.errors import DimensionMismatch
from formgraph.node2vec import Node2VecParams
from formgraph.textembed import NgramProvider


@pytest.fixture(scope="module")
def travel_space(travel_model, travel_tree):
    return build_embedding_space(travel_model, travel_tree, NgramProvider(), Node2VecParams())


class TestCosine:
    def test_self_similarity_is_one(self):
        assert cosine_sim((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)) == pytest.approx(1.0)

    def test_orthogonal_is_zero(self):
        assert cosine_sim((1.0, 0.0), (0.0, 1.0)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine_sim((1.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))

    def test_zero_vector_compares_as_zero(self):
        assert cosine_sim((0.0, 0.0), (1.0, 1.0)) == 0.0

    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=8),
        st.lists(st.floats(-10, 10), min_size=2, max_size=8),
    )
    def test_symmetry_and_bounds(self, a, b):
        size = min(len(a), len(b))
        u, v = tuple(a[:size]), tuple(b[:size])
        s = cosine_sim(u, v)
        assert s == cosine_sim(v, u)
        assert -1.0 - 1e-9 <= s <= 1.0 + 1e-9


class TestBuildSpace:
    def test_one_entry_per_non_container_node(self, travel_space, travel_model):
        expected = {ref.node for ref in travel_model.fields} | {
            t.node for t in travel_model.texts
        }
        assert set(travel_space.entries) == expected

    def test_combined_dims(self, travel_space):
        for vec in travel_space.entries.values():
            assert len(vec) == travel_space.text_dims + travel_space.struct_dims

    def test_two_entry_minimal_form(self):
        tree = parse_document('<form><label>Name</label><input type="text" name="n"></form>')
        model = extract_form_model(tree)
        space = build_embedding_space(model, tree, NgramProvider(), Node2VecParams())
        assert len(space.entries) == 2

    def test_label_closer_to_own_input_than_distant_one(
        self, travel_space, travel_model, travel_tree
    ):
        by_label = {t.text: t.node for t in travel_model.texts}
        fields = {
            travel_tree.node(f.node).attributes["aria-label"]: f.node
            for f in travel_model.fields
        }
        from_1_label = by_label["From 1"]
        assert travel_space.similarity(from_1_label, fields["From 1"]) > travel_space.similarity(
            from_1_label, fields["To 2"]
        )

    def test_field_without_text_attrs_gets_zero_text_part(self):
        tree = parse_document('<form><span>hint</span><input type="text"></form>')
        model = extract_form_model(tree)
        space = build_embedding_space(model, tree, NgramProvider(), Node2VecParams())
        field_node = model.fields[0].node
        assert all(v == 0.0 for v in space.text_part(field_node))
        assert any(v != 0.0 for v in space.struct_part(field_node))

    def test_combined_cosine_is_mean_of_part_cosines(self, travel_space, travel_model):
        nodes = [ref.node for ref in travel_model.fields][:3]
        for a in nodes:
            for b in nodes:
                if a == b:
                    continue
                text_cos = cosine_sim(travel_space.text_part(a), travel_space.text_part(b))
                struct_cos = cosine_sim(travel_space.struct_part(a), travel_space.struct_part(b))
                combined = travel_space.similarity(a, b)
                assert combined == pytest.approx((text_cos + struct_cos) / 2, abs=1e-9)

    def test_parts_unit_normalized(self, travel_space):
        for node in travel_space.entries:
            for part in (travel_space.text_part(node), travel_space.struct_part(node)):
                norm = math.sqrt(sum(v * v for v in part))
                if norm:
                    assert norm == pytest.approx(1.0, abs=1e-9)

    def test_rerun_is_bitwise_identical(self, travel_model, travel_tree, travel_space):
        again = build_embedding_space(
            travel_model, travel_tree, NgramProvider(), Node2VecParams()
        )
        assert again.entries == travel_space.entries


class TestExport:
    def test_json_round_trip(self, travel_space):
        text = space_to_json(travel_space)
        loaded = space_from_json(text)
        assert loaded == travel_space

    def test_cache_key_sensitivity(self, travel_tree):
        doc = document_hash(travel_tree)
        base = space_cache_key(doc, "ngram-256", Node2VecParams())
        assert base == space_cache_key(doc, "ngram-256", Node2VecParams())
        assert base != space_cache_key(doc, "ngram-512", Node2VecParams())
        assert base != space_cache_key(doc, "ngram-256", Node2VecParams(rng_seed=7))
