"""Structural node embeddings over the DOM tree via biased random walks.

The walk/skip-gram kernel runs either as a compiled extension or as the
pure-Python fallback; selection happens at import and can be forced with
FORMGRAPH_PURE_KERNEL=1. Both kernels are deterministic under the seed and
produce bitwise-identical results.
"""

from __future__ import annotations

import math
import os
from array import array
from dataclasses import dataclass

from .dom import DomTree
from .errors import GraphTooSmall

if os.environ.get("FORMGRAPH_PURE_KERNEL") == "1":
    from . import _sgns_py as _kernel
else:
    try:
        from . import _sgns as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _sgns_py as _kernel

KERNEL_BACKEND = _kernel.BACKEND


@dataclass(frozen=True)
class Node2VecParams:
    walks_per_node: int = 10
    walk_length: int = 40
    return_param: float = 1.0
    inout_param: float = 1.0
    dims: int = 64
    window: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    negative_samples: int = 5
    rng_seed: int = 42

    def __post_init__(self):
        counts = (
            self.walks_per_node,
            self.walk_length,
            self.dims,
            self.window,
            self.epochs,
            self.negative_samples,
        )
        if any(c < 1 for c in counts):
            raise ValueError("all node2vec counts must be >= 1")
        if self.return_param <= 0 or self.inout_param <= 0:
            raise ValueError("return and in-out parameters must be positive")

    def cache_token(self) -> str:
        return (
            f"w{self.walks_per_node}l{self.walk_length}p{self.return_param}"
            f"q{self.inout_param}d{self.dims}win{self.window}e{self.epochs}"
            f"lr{self.learning_rate}n{self.negative_samples}s{self.rng_seed}"
        )


def tree_adjacency(tree: DomTree) -> tuple[array, array, list[int]]:
    """CSR adjacency of the undirected parent-child graph over all nodes."""
    ids = sorted(tree.nodes)
    index = {node_id: i for i, node_id in enumerate(ids)}
    neighbors: list[list[int]] = [[] for _ in ids]
    for node in tree.walk():
        for child in node.children:
            neighbors[index[node.id]].append(index[child])
            neighbors[index[child]].append(index[node.id])
    indptr = array("q", [0])
    indices = array("q")
    for nbrs in neighbors:
        for nb in sorted(nbrs):
            indices.append(nb)
        indptr.append(len(indices))
    return indptr, indices, ids


def structural_embed(tree: DomTree, params: Node2VecParams) -> dict[int, tuple[float, ...]]:
    """One unit-normalized vector per DOM node (containers included).

    Raises GraphTooSmall for single-node trees.
    """
    if len(tree.nodes) < 2:
        raise GraphTooSmall("structural embedding needs at least 2 nodes")
    indptr, indices, ids = tree_adjacency(tree)
    weights = _kernel.train_embeddings(
        indptr,
        indices,
        len(ids),
        params.dims,
        params.walks_per_node,
        params.walk_length,
        params.return_param,
        params.inout_param,
        params.window,
        params.epochs,
        params.negative_samples,
        params.learning_rate,
        params.rng_seed,
    )
    vectors: dict[int, tuple[float, ...]] = {}
    dims = params.dims
    for i, node_id in enumerate(ids):
        row = weights[i * dims : (i + 1) * dims]
        norm = math.sqrt(sum(v * v for v in row))
        if norm > 0.0:
            vectors[node_id] = tuple(v / norm for v in row)
        else:
            vectors[node_id] = tuple(row)
    return vectors
