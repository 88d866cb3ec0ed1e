"""Form entity relation graph: construction, pruning, and queries.

The graph connects the non-container nodes of a form. Local textual edges
link adjacent elements (geometry when bounding boxes are available, a
document-order window otherwise) weighted by embedding cosine. After
pruning, relevant-input edges link input fields whose labels or naming
attributes resemble each other.
"""

from __future__ import annotations

import enum
import json
import math
import statistics
from dataclasses import dataclass, replace
from typing import Optional

from .dom import DomTree, ElementKind, FormModel
from .embedding import EmbeddingSpace, cosine_sim
from .errors import MissingEmbedding, UnknownNode


class EdgeKind(enum.Enum):
    LOCAL_TEXTUAL = "local_textual"
    RELEVANT_INPUT = "relevant_input"


@dataclass(frozen=True)
class FergNode:
    id: int
    kind: ElementKind
    doc_order: int
    text: str


@dataclass(frozen=True)
class FergEdge:
    a: int
    b: int
    weight: float
    kind: EdgeKind

    def other(self, node_id: int) -> int:
        return self.b if node_id == self.a else self.a


@dataclass(frozen=True)
class Ferg:
    nodes: dict[int, FergNode]
    edges: tuple[FergEdge, ...]

    def incident(self, node_id: int, kind: Optional[EdgeKind] = None) -> list[FergEdge]:
        return [
            e
            for e in self.edges
            if node_id in (e.a, e.b) and (kind is None or e.kind == kind)
        ]


@dataclass(frozen=True)
class PruningParams:
    lambda_factor: float = 0.5
    std_mode: str = "population"  # population | sample

    def __post_init__(self):
        if self.lambda_factor < 0:
            raise ValueError("lambda_factor must be >= 0")
        if self.std_mode not in ("population", "sample"):
            raise ValueError("std_mode must be population or sample")


@dataclass(frozen=True)
class Box:
    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True)
class AdjacencyHints:
    boxes: Optional[dict[int, Box]] = None
    sibling_window: int = 3


def _box_gap(a: Box, b: Box) -> float:
    dx = max(0.0, max(a.x - (b.x + b.w), b.x - (a.x + a.w)))
    dy = max(0.0, max(a.y - (b.y + b.h), b.y - (a.y + a.h)))
    return math.hypot(dx, dy)


def _non_container_sequence(model: FormModel, tree: DomTree) -> list[int]:
    ids = [ref.node for ref in model.fields] + [t.node for t in model.texts]
    return sorted(ids, key=lambda n: tree.node(n).doc_order)


def candidate_adjacency(
    model: FormModel, tree: DomTree, hints: Optional[AdjacencyHints] = None
) -> set[tuple[int, int]]:
    """Unordered pairs of non-container nodes considered visually adjacent.

    With bounding boxes: rectangles that touch or sit within 16px. Without:
    nodes within `sibling_window` positions of each other in document order.
    """
    hints = hints or AdjacencyHints()
    sequence = _non_container_sequence(model, tree)
    pairs: set[tuple[int, int]] = set()
    if hints.boxes:
        for i, a in enumerate(sequence):
            for b in sequence[i + 1 :]:
                if a in hints.boxes and b in hints.boxes:
                    if _box_gap(hints.boxes[a], hints.boxes[b]) <= 16.0:
                        pairs.add((min(a, b), max(a, b)))
    else:
        k = hints.sibling_window
        for i, a in enumerate(sequence):
            for j in range(i + 1, min(i + k + 1, len(sequence))):
                b = sequence[j]
                pairs.add((min(a, b), max(a, b)))
    return pairs


def build_local_graph(
    space: EmbeddingSpace,
    pairs: set[tuple[int, int]],
    model: FormModel,
    tree: DomTree,
) -> Ferg:
    """One local-textual edge per candidate pair, weighted by combined cosine."""
    nodes: dict[int, FergNode] = {}
    for ref in model.fields:
        node = tree.node(ref.node)
        nodes[ref.node] = FergNode(
            id=ref.node,
            kind=ElementKind.INPUT_FIELD,
            doc_order=node.doc_order,
            text=ref.naming_text(),
        )
    for elem in model.texts:
        node = tree.node(elem.node)
        nodes[elem.node] = FergNode(
            id=elem.node,
            kind=ElementKind.TEXT_ELEMENT,
            doc_order=node.doc_order,
            text=elem.text,
        )
    edges = []
    for a, b in sorted(pairs):
        if a not in space.entries or b not in space.entries:
            raise MissingEmbedding(f"pair ({a}, {b}) lacks an embedding")
        edges.append(
            FergEdge(a=a, b=b, weight=space.similarity(a, b), kind=EdgeKind.LOCAL_TEXTUAL)
        )
    return Ferg(nodes=nodes, edges=tuple(edges))


def _is_text_input_edge(g: Ferg, e: FergEdge) -> bool:
    ka = g.nodes[e.a].kind
    kb = g.nodes[e.b].kind
    return {ka, kb} == {ElementKind.TEXT_ELEMENT, ElementKind.INPUT_FIELD}


def _is_text_text_edge(g: Ferg, e: FergEdge) -> bool:
    return (
        g.nodes[e.a].kind is ElementKind.TEXT_ELEMENT
        and g.nodes[e.b].kind is ElementKind.TEXT_ELEMENT
    )


def prune_auxiliary_edges(g: Ferg) -> Ferg:
    """A text element keeps only its strongest edge to an input field.

    Ties break toward the input with the lower document order.
    """
    drop: set[FergEdge] = set()
    for node_id, node in g.nodes.items():
        if node.kind is not ElementKind.TEXT_ELEMENT:
            continue
        attached = [
            e
            for e in g.incident(node_id, EdgeKind.LOCAL_TEXTUAL)
            if _is_text_input_edge(g, e)
        ]
        if len(attached) < 2:
            continue
        best = max(
            attached, key=lambda e: (e.weight, -g.nodes[e.other(node_id)].doc_order)
        )
        drop.update(e for e in attached if e is not best)
    return replace(g, edges=tuple(e for e in g.edges if e not in drop))


def _threshold(weights: list[float], params: PruningParams) -> float:
    # statistics reduces via exact rationals: equal weights yield sigma == 0
    # exactly, so the strict < comparison keeps everything in that case
    mean = statistics.mean(weights)
    if params.std_mode == "population":
        sigma = statistics.pstdev(weights, mean)
    else:
        sigma = statistics.stdev(weights, mean)
    return mean + params.lambda_factor * sigma


def prune_text_text_edges(g: Ferg, params: Optional[PruningParams] = None) -> Ferg:
    """Drop text-text edges below the mean + lambda * stddev of their weights.

    A no-op with fewer than two such edges; the comparison is strict, so a
    zero spread keeps everything.
    """
    params = params or PruningParams()
    text_text = [e for e in g.edges if _is_text_text_edge(g, e)]
    if len(text_text) < 2:
        return g
    cut = _threshold([e.weight for e in text_text], params)
    keep = tuple(
        e for e in g.edges if not (_is_text_text_edge(g, e) and e.weight < cut)
    )
    return replace(g, edges=keep)


def resolve_label(g: Ferg, field: int) -> Optional[int]:
    """The field's label: its highest-weight attached text element."""
    attached = [
        e
        for e in g.incident(field, EdgeKind.LOCAL_TEXTUAL)
        if _is_text_input_edge(g, e)
    ]
    if not attached:
        return None
    best = max(attached, key=lambda e: (e.weight, -g.nodes[e.other(field)].doc_order))
    return best.other(field)


def relate_input_fields(
    space: EmbeddingSpace, g: Ferg, params: Optional[PruningParams] = None
) -> Ferg:
    """Score every input pair by max(label-label, input-input cosine) and keep
    the pairs above the mean + lambda * stddev cut."""
    params = params or PruningParams()
    inputs = sorted(
        (n.id for n in g.nodes.values() if n.kind is ElementKind.INPUT_FIELD)
    )
    labels = {f: resolve_label(g, f) for f in inputs}
    candidates: list[FergEdge] = []
    for i, a in enumerate(inputs):
        for b in inputs[i + 1 :]:
            input_sim = space.similarity(a, b)
            la, lb = labels[a], labels[b]
            if la is not None and lb is not None:
                sim = max(cosine_sim(space.vector(la), space.vector(lb)), input_sim)
            else:
                sim = input_sim
            candidates.append(FergEdge(a=a, b=b, weight=sim, kind=EdgeKind.RELEVANT_INPUT))
    if len(candidates) >= 2:
        cut = _threshold([e.weight for e in candidates], params)
        candidates = [e for e in candidates if not (e.weight < cut)]
    return replace(g, edges=g.edges + tuple(candidates))


@dataclass(frozen=True)
class FergContext:
    local_texts: tuple[tuple[int, str, float], ...]
    relevant_fields: tuple[tuple[int, str, float], ...]


def query_context(g: Ferg, field: int) -> FergContext:
    """Texts and related fields attached to `field`, strongest first."""
    if field not in g.nodes:
        raise UnknownNode(f"node {field} is not in the graph")

    def ranked(edges: list[FergEdge], want: ElementKind):
        out = []
        for e in edges:
            other = e.other(field)
            if g.nodes[other].kind is want:
                out.append((other, g.nodes[other].text, e.weight))
        out.sort(key=lambda item: (-item[2], g.nodes[item[0]].doc_order))
        return tuple(out)

    return FergContext(
        local_texts=ranked(g.incident(field, EdgeKind.LOCAL_TEXTUAL), ElementKind.TEXT_ELEMENT),
        relevant_fields=ranked(
            g.incident(field, EdgeKind.RELEVANT_INPUT), ElementKind.INPUT_FIELD
        ),
    )


def ferg_to_json(g: Ferg) -> str:
    return json.dumps(
        {
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "doc_order": n.doc_order,
                    "text": n.text,
                }
                for n in sorted(g.nodes.values(), key=lambda n: n.doc_order)
            ],
            "edges": [
                {"a": e.a, "b": e.b, "weight": e.weight, "kind": e.kind.value}
                for e in g.edges
            ],
        },
        indent=2,
        sort_keys=True,
    )


def ferg_to_dot(g: Ferg) -> str:
    lines = ["graph ferg {"]
    for n in sorted(g.nodes.values(), key=lambda n: n.doc_order):
        shape = "box" if n.kind is ElementKind.INPUT_FIELD else "ellipse"
        label = n.text.replace('"', "'")[:40]
        lines.append(f'  n{n.id} [shape={shape} label="{label}"];')
    for e in g.edges:
        style = "solid" if e.kind is EdgeKind.LOCAL_TEXTUAL else "dashed"
        lines.append(f'  n{e.a} -- n{e.b} [style={style} label="{e.weight:.3f}"];')
    lines.append("}")
    return "\n".join(lines)
