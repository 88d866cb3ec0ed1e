import math

import pytest

from formgraph import _sgns_py
from formgraph.dom import parse_document
from formgraph.embedding import cosine_sim
from formgraph.errors import GraphTooSmall
from formgraph.node2vec import (
    KERNEL_BACKEND,
    Node2VecParams,
    structural_embed,
    tree_adjacency,
)

PATH_HTML = "<a1><b1><c1><d1><e1></e1></d1></c1></b1></a1>"


@pytest.fixture(scope="module")
def path_tree():
    return parse_document(PATH_HTML)


class TestParams:
    def test_defaults(self):
        params = Node2VecParams()
        assert params.walks_per_node == 10
        assert params.walk_length == 40
        assert params.dims == 64
        assert params.rng_seed == 42

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            Node2VecParams(walks_per_node=0)
        with pytest.raises(ValueError):
            Node2VecParams(return_param=0.0)


class TestStructuralEmbed:
    def test_seeded_determinism_bitwise(self, path_tree):
        first = structural_embed(path_tree, Node2VecParams())
        second = structural_embed(path_tree, Node2VecParams())
        assert first == second

    def test_different_seed_differs(self, path_tree):
        first = structural_embed(path_tree, Node2VecParams())
        other = structural_embed(path_tree, Node2VecParams(rng_seed=7))
        assert first != other

    def test_path_graph_neighbor_ordering(self, path_tree):
        vectors = structural_embed(path_tree, Node2VecParams())
        ids = sorted(vectors)
        a, b, e = ids[0], ids[1], ids[4]
        assert cosine_sim(vectors[a], vectors[b]) > cosine_sim(vectors[a], vectors[e])

    def test_single_node_raises(self):
        tree = parse_document("<p>only</p>")
        with pytest.raises(GraphTooSmall):
            structural_embed(tree, Node2VecParams())

    def test_unit_norm(self, path_tree):
        for vec in structural_embed(path_tree, Node2VecParams()).values():
            assert math.sqrt(sum(v * v for v in vec)) == pytest.approx(1.0, abs=1e-9)

    def test_covers_containers_too(self, travel_tree):
        vectors = structural_embed(travel_tree, Node2VecParams(walks_per_node=2, walk_length=10, epochs=1))
        assert set(vectors) == {n.id for n in travel_tree.walk()}


class TestKernelParity:
    def test_pure_python_matches_selected_kernel(self, path_tree):
        if KERNEL_BACKEND == "python":
            pytest.skip("compiled kernel unavailable; nothing to compare")
        from formgraph import _sgns

        indptr, indices, _ = tree_adjacency(path_tree)
        args = (indptr, indices, 5, 16, 3, 12, 1.0, 1.0, 3, 2, 3, 0.025, 42)
        compiled = _sgns.train_embeddings(*args)
        pure = _sgns_py.train_embeddings(*args)
        assert compiled.tobytes() == pure.tobytes()

    def test_biased_walk_parity(self, path_tree):
        if KERNEL_BACKEND == "python":
            pytest.skip("compiled kernel unavailable; nothing to compare")
        from formgraph import _sgns

        indptr, indices, _ = tree_adjacency(path_tree)
        args = (indptr, indices, 5, 8, 2, 10, 0.5, 2.0, 2, 1, 2, 0.05, 9)
        assert _sgns.train_embeddings(*args).tobytes() == _sgns_py.train_embeddings(*args).tobytes()


def test_tree_adjacency_symmetry(travel_tree):
    indptr, indices, ids = tree_adjacency(travel_tree)
    n = len(ids)
    edges = set()
    for u in range(n):
        for k in range(indptr[u], indptr[u + 1]):
            edges.add((u, indices[k]))
    assert all((v, u) in edges for u, v in edges)
