"""One-stop form analysis: parse, embed, and build the pruned relation graph.

The builder owns the knobs (text provider, walk parameters, pruning, and
adjacency hints) and caches structural embeddings by tree topology, since
random walks only see the tree shape. Re-analyses of a page whose shape is
unchanged (e.g. the same form re-rendered with new feedback text) reuse the
trained vectors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .dom import (
    DomTree,
    FormModel,
    NAME_ATTR_ORDER,
    classify_nodes,
    extract_form_model,
    parse_document,
    serialize_tree,
)
from .embedding import EmbeddingSpace, build_embedding_space
from .ferg import (
    AdjacencyHints,
    Ferg,
    PruningParams,
    build_local_graph,
    candidate_adjacency,
    prune_auxiliary_edges,
    prune_text_text_edges,
    query_context,
    relate_input_fields,
    resolve_label,
)
from .node2vec import Node2VecParams, structural_embed, tree_adjacency
from .textembed import NgramProvider, TextEmbedProvider


@dataclass(frozen=True)
class FormAnalysis:
    tree: DomTree
    model: FormModel
    space: EmbeddingSpace
    graph: Ferg
    field_labels: dict[int, str]  # input node id -> canonical label
    field_nodes: dict[str, int]  # canonical label -> input node id
    fill_targets: dict[str, str]  # canonical label -> executor fill target

    def context_for(self, label: str):
        return query_context(self.graph, self.field_nodes[label])

    def field_html(self, label: str) -> str:
        return serialize_tree(self.tree, self.field_nodes[label])

    def labels_in_document_order(self) -> list[str]:
        ordered = sorted(
            self.field_nodes.items(), key=lambda kv: self.tree.node(kv[1]).doc_order
        )
        return [label for label, _ in ordered]


def _shape_key(tree: DomTree, params: Node2VecParams) -> str:
    indptr, indices, _ = tree_adjacency(tree)
    digest = hashlib.sha256()
    digest.update(indptr.tobytes())
    digest.update(indices.tobytes())
    digest.update(params.cache_token().encode())
    return digest.hexdigest()


@dataclass
class FormGraphBuilder:
    provider: TextEmbedProvider = field(default_factory=NgramProvider)
    node2vec_params: Node2VecParams = field(default_factory=Node2VecParams)
    pruning: PruningParams = field(default_factory=PruningParams)
    hints: AdjacencyHints = field(default_factory=AdjacencyHints)
    form_selector: Optional[str] = None
    _struct_cache: dict[str, dict[int, tuple]] = field(default_factory=dict, repr=False)

    def analyze_html(self, html) -> FormAnalysis:
        return self.analyze_tree(parse_document(html))

    def analyze_tree(self, tree: DomTree) -> FormAnalysis:
        model = extract_form_model(tree, self.form_selector)
        key = _shape_key(tree, self.node2vec_params)
        struct = self._struct_cache.get(key)
        if struct is None:
            struct = structural_embed(tree, self.node2vec_params)
            self._struct_cache[key] = struct
        space = build_embedding_space(
            model, tree, self.provider, self.node2vec_params, struct_vectors=struct
        )
        pairs = candidate_adjacency(model, tree, self.hints)
        graph = build_local_graph(space, pairs, model, tree)
        graph = prune_auxiliary_edges(graph)
        graph = prune_text_text_edges(graph, self.pruning)
        graph = relate_input_fields(space, graph, self.pruning)

        field_labels: dict[int, str] = {}
        used: dict[str, int] = {}
        for ref in model.fields:
            label_node = resolve_label(graph, ref.node)
            label = graph.nodes[label_node].text if label_node is not None else ""
            if not label:
                for attr in NAME_ATTR_ORDER:
                    if ref.name_attrs.get(attr):
                        label = ref.name_attrs[attr]
                        break
            if not label:
                label = f"field_{tree.node(ref.node).doc_order}"
            count = used.get(label, 0)
            used[label] = count + 1
            if count:
                label = f"{label} ({count + 1})"
            field_labels[ref.node] = label

        fill_targets = {}
        for ref in model.fields:
            label = field_labels[ref.node]
            fill_targets[label] = (
                ref.name_attrs.get("id") or ref.name_attrs.get("name") or label
            )
        field_nodes = {label: node for node, label in field_labels.items()}
        return FormAnalysis(
            tree=tree,
            model=model,
            space=space,
            graph=graph,
            field_labels=field_labels,
            field_nodes=field_nodes,
            fill_targets=fill_targets,
        )


__all__ = ["FormAnalysis", "FormGraphBuilder", "classify_nodes"]
