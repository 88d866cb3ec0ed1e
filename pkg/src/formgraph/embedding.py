"""Combined textual + structural embedding space over form entities.

Each non-container node gets one vector: the text part embeds the node's
visible text (or, for input fields, its naming attributes), the structural
part comes from random walks over the DOM tree. Both parts are unit-
normalized before concatenation so neither modality dominates cosine
similarity; with both parts nonzero the combined cosine equals the mean of
the per-part cosines.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .dom import DomTree, FormModel, serialize_tree
from .errors import DimensionMismatch
from .node2vec import Node2VecParams, structural_embed
from .textembed import TextEmbedProvider, l2_normalize

EmbeddingVector = tuple[float, ...]


def cosine_sim(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; zero vectors compare as 0.0."""
    if len(a) != len(b):
        raise DimensionMismatch(f"dims {len(a)} vs {len(b)}")
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for x, y in zip(a, b):
        dot += x * y
        norm_a += x * x
        norm_b += y * y
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (math.sqrt(norm_a) * math.sqrt(norm_b))


def is_zero(v: EmbeddingVector) -> bool:
    return all(x == 0.0 for x in v)


@dataclass(frozen=True)
class EmbeddingSpace:
    text_dims: int
    struct_dims: int
    provider_id: str
    entries: dict[int, EmbeddingVector]

    def vector(self, node_id: int) -> EmbeddingVector:
        return self.entries[node_id]

    def text_part(self, node_id: int) -> EmbeddingVector:
        return self.entries[node_id][: self.text_dims]

    def struct_part(self, node_id: int) -> EmbeddingVector:
        return self.entries[node_id][self.text_dims :]

    def similarity(self, a: int, b: int) -> float:
        return cosine_sim(self.entries[a], self.entries[b])


def text_embed(provider: TextEmbedProvider, text: str) -> EmbeddingVector:
    """Embed a string with the provider, enforcing unit norm (zero vector
    stays zero for empty text)."""
    return l2_normalize(provider.embed(text))


def build_embedding_space(
    model: FormModel,
    tree: DomTree,
    provider: TextEmbedProvider,
    params: Node2VecParams,
    struct_vectors: dict[int, EmbeddingVector] | None = None,
) -> EmbeddingSpace:
    """Combined vectors for every non-container node of the form model.

    struct_vectors may be passed in to reuse a previously trained structural
    embedding of the same tree (e.g. from a shape cache).
    """
    if struct_vectors is None:
        struct_vectors = structural_embed(tree, params)
    entries: dict[int, EmbeddingVector] = {}
    for ref in model.fields:
        text_part = text_embed(provider, ref.naming_text())
        struct_part = l2_normalize(struct_vectors[ref.node])
        entries[ref.node] = tuple(text_part) + tuple(struct_part)
    for elem in model.texts:
        text_part = text_embed(provider, elem.text)
        struct_part = l2_normalize(struct_vectors[elem.node])
        entries[elem.node] = tuple(text_part) + tuple(struct_part)
    return EmbeddingSpace(
        text_dims=provider.dims,
        struct_dims=params.dims,
        provider_id=provider.provider_id,
        entries=entries,
    )


# --- cache / export plumbing ---

def document_hash(tree: DomTree) -> str:
    return hashlib.sha256(serialize_tree(tree).encode("utf-8")).hexdigest()


def space_cache_key(doc_hash: str, provider_id: str, params: Node2VecParams) -> str:
    raw = f"{doc_hash}:{provider_id}:{params.cache_token()}"
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


def space_to_json(space: EmbeddingSpace) -> str:
    return json.dumps(
        {
            "text_dims": space.text_dims,
            "struct_dims": space.struct_dims,
            "provider_id": space.provider_id,
            "entries": {str(k): list(v) for k, v in space.entries.items()},
        },
        sort_keys=True,
    )


def space_from_json(text: str) -> EmbeddingSpace:
    data = json.loads(text)
    return EmbeddingSpace(
        text_dims=data["text_dims"],
        struct_dims=data["struct_dims"],
        provider_id=data["provider_id"],
        entries={int(k): tuple(v) for k, v in data["entries"].items()},
    )
