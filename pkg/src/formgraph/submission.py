"""Form submission, DOM diffing, and feedback classification.

An executor abstracts the page under test behind four actions: navigate,
fill, submit, page. Feedback is whatever new or changed text after a
submission matches the keyword filter; a submission fails exactly when at
least one such piece of feedback exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

from .dom import DomTree, FormModel, parse_document
from .errors import ExecutorFailure, InvalidAssignment
from .simulator import SimulatedFormSpec, handle_submission, render_page

DEFAULT_FEEDBACK_KEYWORDS = (
    "not valid",
    "invalid",
    "valid",
    "required",
    "denied",
    "cannot",
    "must",
    "error",
    "same",
    "please select",
    "please enter",
)


@dataclass(frozen=True)
class FeedbackKeywords:
    keywords: tuple[str, ...] = DEFAULT_FEEDBACK_KEYWORDS

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("keyword list must be nonempty")
        object.__setattr__(
            self, "keywords", tuple(k.lower() for k in self.keywords)
        )

    def matches(self, text: str) -> bool:
        lowered = text.lower()
        return any(k in lowered for k in self.keywords)


@dataclass(frozen=True)
class Feedback:
    text: str
    scope: str  # inline | global
    field_label: Optional[str] = None
    field_node: Optional[int] = None


@dataclass(frozen=True)
class PageState:
    html: str
    url: str


class Executor(Protocol):
    def navigate(self, url: str) -> None: ...

    def fill(self, target: str, value: str) -> None: ...

    def submit(self) -> None: ...

    def page(self) -> PageState: ...


class SimulatorExecutor:
    """Executor over the built-in form simulator. One instance per pipeline;
    holds the current page like a browser session would."""

    def __init__(self, spec: SimulatedFormSpec):
        self.spec = spec
        self._values: dict[str, str] = {}
        self._page = PageState(html=render_page(spec), url=spec.base_url())

    def navigate(self, url: str) -> None:
        self._values = {}
        self._page = PageState(html=render_page(self.spec), url=self.spec.base_url())

    def fill(self, target: str, value: str) -> None:
        label = self._resolve(target)
        if label is None:
            raise ExecutorFailure(f"no field matches target {target!r}")
        self._values[label] = value

    def submit(self) -> None:
        result = handle_submission(self.spec, self._values)
        self._page = PageState(html=result.html, url=result.url)

    def page(self) -> PageState:
        return self._page

    def _resolve(self, target: str) -> Optional[str]:
        for f in self.spec.fields:
            if target == f.label or target == f.slug():
                return f.label
            if target in (f.attributes.get("id"), f.attributes.get("name")):
                return f.label
        return None


@dataclass
class SubmissionResult:
    before: DomTree
    after: Optional[DomTree]  # None on redirect
    after_html: str
    after_url: str
    redirected: bool
    outcome: Optional[str] = None  # success | failure, set by classify
    feedback: list[Feedback] = field(default_factory=list)


def submit(executor: Executor, model: FormModel, assignment: dict[str, str],
           field_targets: dict[str, str]) -> SubmissionResult:
    """Fill the form in document order and submit.

    `field_targets` maps the assignment's field labels to executor fill
    targets (DOM ids). Raises InvalidAssignment for unknown labels.
    """
    unknown = set(assignment) - set(field_targets)
    if unknown:
        raise InvalidAssignment(f"assignment keys not in form model: {sorted(unknown)}")
    before_state = executor.page()
    before = parse_document(before_state.html)
    for label in field_targets:  # document order of the model
        if label in assignment:
            executor.fill(field_targets[label], assignment[label])
    executor.submit()
    after_state = executor.page()
    redirected = after_state.url != before_state.url
    after_tree = None if redirected else parse_document(after_state.html)
    return SubmissionResult(
        before=before,
        after=after_tree,
        after_html=after_state.html,
        after_url=after_state.url,
        redirected=redirected,
    )


def _text_paths(tree: DomTree) -> dict[tuple, tuple[int, str]]:
    """Map structural paths (tag + sibling index chain) to node text."""
    paths: dict[tuple, tuple[int, str]] = {}

    def visit(node_id: int, prefix: tuple):
        node = tree.node(node_id)
        siblings_seen: dict[str, int] = {}
        paths[prefix] = (node.id, node.text)
        for child in node.children:
            child_tag = tree.node(child).tag
            index = siblings_seen.get(child_tag, 0)
            siblings_seen[child_tag] = index + 1
            visit(child, prefix + ((child_tag, index),))

    visit(tree.root, ((tree.node(tree.root).tag, 0),))
    return paths


def dom_diff(before: DomTree, after: DomTree) -> list[tuple[int, str]]:
    """Text fragments added or changed in `after`, matched by structural
    path. Deletions are ignored: feedback is additive text."""
    before_paths = {path: text for path, (_, text) in _text_paths(before).items()}
    fragments: list[tuple[int, str]] = []
    for path, (node_id, text) in sorted(_text_paths(after).items()):
        if not text:
            continue
        if before_paths.get(path, "") != text:
            fragments.append((node_id, text))
    return fragments


def all_text_fragments(tree: DomTree) -> list[tuple[int, str]]:
    return [(n.id, n.text) for n in tree.walk() if n.text]


def extract_feedback(
    fragments: list[tuple[int, str]], keywords: Optional[FeedbackKeywords] = None
) -> list[Feedback]:
    """Keep keyword-matching fragments as feedback, deduplicated by text."""
    keywords = keywords or FeedbackKeywords()
    out: list[Feedback] = []
    seen: set[str] = set()
    for node_id, text in fragments:
        if text in seen or not keywords.matches(text):
            continue
        seen.add(text)
        out.append(Feedback(text=text, scope="global", field_node=node_id))
    return out


def attach_feedback(builder, result: SubmissionResult, items: list[Feedback]) -> list[Feedback]:
    """Resolve feedback scope by re-running the local-context pipeline on the
    after page: a feedback text that ends up attached to an input field is
    inline feedback for that field, anything else (including everything on a
    redirect destination) is global."""
    from .errors import EmptyDocument, NoFormFound, NoInputFields
    from .ferg import EdgeKind

    if result.after is None:
        return [Feedback(text=i.text, scope="global") for i in items]
    try:
        analysis = builder.analyze_tree(result.after)
    except (NoFormFound, NoInputFields, EmptyDocument):
        return [Feedback(text=i.text, scope="global") for i in items]

    resolved: list[Feedback] = []
    for item in items:
        node_id = item.field_node
        attached_field: Optional[int] = None
        if node_id is not None and node_id in analysis.graph.nodes:
            best_weight = None
            for edge in analysis.graph.incident(node_id, EdgeKind.LOCAL_TEXTUAL):
                other = edge.other(node_id)
                other_node = analysis.graph.nodes[other]
                if other_node.kind.value != "input_field":
                    continue
                if best_weight is None or edge.weight > best_weight:
                    best_weight = edge.weight
                    attached_field = other
        if attached_field is not None:
            resolved.append(
                Feedback(
                    text=item.text,
                    scope="inline",
                    field_label=analysis.field_labels[attached_field],
                    field_node=attached_field,
                )
            )
        else:
            resolved.append(Feedback(text=item.text, scope="global"))
    return resolved


def classify_outcome(result: SubmissionResult) -> str:
    """Failure iff any feedback was extracted; success otherwise."""
    result.outcome = "failure" if result.feedback else "success"
    return result.outcome
