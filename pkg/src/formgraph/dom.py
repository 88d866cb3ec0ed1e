"""Lenient HTML parsing and classification of form entities.

The parser recovers from malformed markup the way browsers do for the common
cases (unclosed tags, stray end tags) and produces an immutable tree that is
safe to share across threads. Nodes are classified into input fields, text
elements, and containers; only the first two take part in graph construction
downstream.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Optional

from .errors import EmptyDocument, NoFormFound, NoInputFields

VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)

# Free-form input types; selection-style inputs (checkbox, radio, select,
# submit, ...) are treated as containers and never receive values.
FREE_FORM_TYPES = frozenset(
    "text number date email tel textarea password search".split()
)

# Fixed priority order for the naming attributes of an input field.
NAME_ATTR_ORDER = ("aria-label", "placeholder", "name", "id", "value")

_WS_RE = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


class ElementKind(enum.Enum):
    INPUT_FIELD = "input_field"
    TEXT_ELEMENT = "text_element"
    CONTAINER = "container"


@dataclass(frozen=True)
class DomNode:
    id: int
    tag: str
    attributes: dict[str, str]
    text: str
    children: tuple[int, ...]
    doc_order: int


@dataclass(frozen=True)
class DomTree:
    root: int
    nodes: dict[int, DomNode]

    def node(self, node_id: int) -> DomNode:
        return self.nodes[node_id]

    def walk(self, start: Optional[int] = None):
        """Yield nodes in document pre-order."""
        stack = [self.root if start is None else start]
        while stack:
            node = self.nodes[stack.pop()]
            yield node
            stack.extend(reversed(node.children))

    def parent_map(self) -> dict[int, int]:
        parents: dict[int, int] = {}
        for node in self.walk():
            for child in node.children:
                parents[child] = node.id
        return parents


class _MutableNode:
    __slots__ = ("tag", "attributes", "text_parts", "children")

    def __init__(self, tag: str, attributes: dict[str, str]):
        self.tag = tag
        self.attributes = attributes
        self.text_parts: list[str] = []
        self.children: list[_MutableNode] = []


class _TreeBuilder(HTMLParser):
    """Stack-based recovery: stray end tags are dropped, an end tag closes
    every element opened after its match."""

    _SKIP_TEXT = frozenset(("script", "style"))

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.top_level: list[_MutableNode] = []
        self.top_text: list[str] = []
        self.stack: list[_MutableNode] = []

    def _attach(self, node: _MutableNode):
        if self.stack:
            self.stack[-1].children.append(node)
        else:
            self.top_level.append(node)

    def handle_starttag(self, tag, attrs):
        node = _MutableNode(tag, {k: (v if v is not None else "") for k, v in attrs})
        self._attach(node)
        if tag not in VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self._attach(_MutableNode(tag, {k: (v if v is not None else "") for k, v in attrs}))

    def handle_endtag(self, tag):
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # no matching open tag: ignore, as browsers do

    def handle_data(self, data):
        if self.stack:
            if self.stack[-1].tag in self._SKIP_TEXT:
                return
            self.stack[-1].text_parts.append(data)
        elif data.strip():
            self.top_text.append(data)


def parse_document(html) -> DomTree:
    """Parse possibly-malformed HTML into a DomTree.

    Raises EmptyDocument when no element can be recovered.
    """
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    builder = _TreeBuilder()
    builder.feed(html)
    builder.close()

    if not builder.top_level:
        raise EmptyDocument("no element could be recovered from the document")

    if len(builder.top_level) == 1 and not builder.top_text:
        root = builder.top_level[0]
    else:
        root = _MutableNode("#document", {})
        root.children = builder.top_level
        root.text_parts = builder.top_text

    nodes: dict[int, DomNode] = {}
    counter = 0

    # pre-order ids: assign before recursing into children
    def freeze_preorder(mnode: _MutableNode) -> int:
        nonlocal counter
        node_id = counter
        counter += 1
        child_ids = tuple(freeze_preorder(c) for c in mnode.children)
        nodes[node_id] = DomNode(
            id=node_id,
            tag=mnode.tag,
            attributes=dict(mnode.attributes),
            text=normalize_ws("".join(mnode.text_parts)),
            children=child_ids,
            doc_order=node_id,
        )
        return node_id

    root_id = freeze_preorder(root)
    return DomTree(root=root_id, nodes=nodes)


def classify_nodes(tree: DomTree) -> dict[int, ElementKind]:
    """Partition every node into exactly one ElementKind."""
    kinds: dict[int, ElementKind] = {}
    for node in tree.walk():
        if node.tag == "textarea":
            kinds[node.id] = ElementKind.INPUT_FIELD
        elif node.tag == "input":
            input_type = node.attributes.get("type", "text").lower()
            if input_type in FREE_FORM_TYPES:
                kinds[node.id] = ElementKind.INPUT_FIELD
            else:
                kinds[node.id] = ElementKind.CONTAINER
        elif node.text:
            kinds[node.id] = ElementKind.TEXT_ELEMENT
        else:
            kinds[node.id] = ElementKind.CONTAINER
    return kinds


@dataclass(frozen=True)
class InputFieldRef:
    node: int
    input_type: str
    name_attrs: dict[str, str]

    def naming_text(self) -> str:
        """Naming attribute values joined in the fixed priority order."""
        return normalize_ws(
            " ".join(self.name_attrs[k] for k in NAME_ATTR_ORDER if k in self.name_attrs)
        )


@dataclass(frozen=True)
class TextElementRef:
    node: int
    text: str


@dataclass(frozen=True)
class FormContext:
    app_title: str
    app_description: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class FormModel:
    form_node: int
    fields: tuple[InputFieldRef, ...]
    texts: tuple[TextElementRef, ...]
    context: FormContext


def _find_forms(tree: DomTree) -> list[DomNode]:
    return [n for n in tree.walk() if n.tag == "form"]


def _select_form(tree: DomTree, form_selector) -> int:
    forms = _find_forms(tree)
    if form_selector is None:
        return forms[0].id if forms else tree.root
    if isinstance(form_selector, int) or (
        isinstance(form_selector, str) and form_selector.isdigit()
    ):
        index = int(form_selector)
        if 0 <= index < len(forms):
            return forms[index].id
        raise NoFormFound(f"form index {index} out of range ({len(forms)} forms)")
    if isinstance(form_selector, str) and form_selector.startswith("#"):
        wanted = form_selector[1:]
        for form in forms:
            if form.attributes.get("id") == wanted:
                return form.id
        raise NoFormFound(f"no form with id {wanted!r}")
    raise NoFormFound(f"unsupported form selector {form_selector!r}")


def extract_form_model(tree: DomTree, form_selector=None) -> FormModel:
    """Build the FormModel over the selected form subtree.

    Fields and texts are listed in document order; the form context carries
    the document title, meta description, and the label texts of the form.
    """
    form_node = _select_form(tree, form_selector)
    kinds = classify_nodes(tree)

    fields: list[InputFieldRef] = []
    texts: list[TextElementRef] = []
    for node in tree.walk(form_node):
        kind = kinds[node.id]
        if kind is ElementKind.INPUT_FIELD:
            input_type = (
                "textarea"
                if node.tag == "textarea"
                else node.attributes.get("type", "text").lower()
            )
            name_attrs = {
                k: node.attributes[k] for k in NAME_ATTR_ORDER if k in node.attributes
            }
            fields.append(InputFieldRef(node=node.id, input_type=input_type, name_attrs=name_attrs))
        elif kind is ElementKind.TEXT_ELEMENT:
            texts.append(TextElementRef(node=node.id, text=node.text))

    if not fields:
        raise NoInputFields("the selected form has no free-form input fields")

    title = ""
    description = ""
    for node in tree.walk():
        if node.tag == "title" and not title:
            title = node.text
        if node.tag == "meta" and node.attributes.get("name", "").lower() == "description":
            description = normalize_ws(node.attributes.get("content", ""))

    context = FormContext(
        app_title=title,
        app_description=description,
        labels=tuple(t.text for t in texts),
    )
    return FormModel(
        form_node=form_node,
        fields=tuple(fields),
        texts=tuple(texts),
        context=context,
    )


_ESCAPES = {"&": "&amp;", "<": "&lt;", ">": "&gt;"}


def _escape_text(text: str) -> str:
    for raw, enc in _ESCAPES.items():
        text = text.replace(raw, enc)
    return text


def _escape_attr(value: str) -> str:
    return _escape_text(value).replace('"', "&quot;")


def serialize_tree(tree: DomTree, node_id: Optional[int] = None) -> str:
    """Render the tree back to HTML. Reparsing the output of a parse yields
    an isomorphic tree for well-formed input."""
    node = tree.node(tree.root if node_id is None else node_id)
    if node.tag == "#document":
        return "".join(serialize_tree(tree, c) for c in node.children)
    attrs = "".join(f' {k}="{_escape_attr(v)}"' for k, v in node.attributes.items())
    if node.tag in VOID_TAGS:
        return f"<{node.tag}{attrs}>"
    inner = _escape_text(node.text) + "".join(
        serialize_tree(tree, c) for c in node.children
    )
    return f"<{node.tag}{attrs}>{inner}</{node.tag}>"


def tree_to_json(tree: DomTree, kinds: Optional[dict[int, ElementKind]] = None) -> str:
    """Debug dump of the classified tree as a JSON document."""
    kinds = kinds or classify_nodes(tree)
    entries = [
        {
            "id": node.id,
            "tag": node.tag,
            "kind": kinds[node.id].value,
            "doc_order": node.doc_order,
            "text": node.text,
        }
        for node in tree.walk()
    ]
    return json.dumps(entries, indent=2)
