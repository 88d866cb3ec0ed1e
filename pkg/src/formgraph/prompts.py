"""Prompt construction for constraint and value generation.

Prompts are assembled from named sections in a fixed order; the surrounding
instruction text lives in template files shipped with the package and is
hashed into run records so results stay attributable. Building a prompt is
pure: identical inputs yield byte-identical bundles.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .constraints import Bindings, Constraint, ConstraintSet, catalog, parse_date
from .dom import FormContext
from .ferg import FergContext

CONSTRAINT_SECTIONS = (
    "TimeContext",
    "FormContext",
    "InputFieldAndLocalContext",
    "GlobalContext",
)
VALUE_SECTIONS = ("FormContext", "InputFieldAndLocalContext", "ConstraintsAndValues")


def _template_text(name: str) -> str:
    return resources.files("formgraph.templates").joinpath(name).read_text("utf-8")


def template_hash(kind: str) -> str:
    name = "constraint_prompt.txt" if kind == "constraint" else "value_prompt.txt"
    return hashlib.sha256(_template_text(name).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptBundle:
    kind: str  # constraint | value
    sections: tuple[tuple[str, str], ...]
    field_label: str
    # structured payload mirrored from the rendered sections; mock backends
    # read these instead of re-parsing prose
    constraint_set: Optional[ConstraintSet] = None
    bindings: Optional[Bindings] = None

    def section(self, name: str) -> str:
        for section_name, text in self.sections:
            if section_name == name:
                return text
        raise KeyError(name)

    def render(self) -> str:
        name = "constraint_prompt.txt" if self.kind == "constraint" else "value_prompt.txt"
        body = "\n\n".join(f"## {n}\n{text}" for n, text in self.sections)
        return _template_text(name).format(
            catalog=", ".join(t.name for t in catalog()),
            sections=body,
            field_label=self.field_label,
        )


def validate_bundle(bundle: PromptBundle) -> None:
    """Assert the section list matches the bundle kind's schema exactly."""
    names = tuple(n for n, _ in bundle.sections)
    if bundle.kind == "constraint":
        if names not in (CONSTRAINT_SECTIONS, CONSTRAINT_SECTIONS + ("Feedback",)):
            raise ValueError(f"bad constraint prompt sections: {names}")
    elif bundle.kind == "value":
        if names != VALUE_SECTIONS:
            raise ValueError(f"bad value prompt sections: {names}")
    else:
        raise ValueError(f"unknown bundle kind {bundle.kind!r}")


def _form_context_text(form_ctx: FormContext) -> str:
    lines = [
        f"Application title: {form_ctx.app_title or '(none)'}",
        f"Application description: {form_ctx.app_description or '(none)'}",
        "Labels in the form: " + "; ".join(form_ctx.labels),
    ]
    return "\n".join(lines)


def _local_context_text(field_html: str, ferg_ctx: FergContext) -> str:
    lines = [f"Field HTML: {field_html}"]
    if ferg_ctx.local_texts:
        lines.append("Nearby texts (strongest association first):")
        lines.extend(f"- {text}" for _, text, _ in ferg_ctx.local_texts)
    else:
        lines.append("Nearby texts: (none)")
    return "\n".join(lines)


def _global_context_text(ferg_ctx: FergContext, node_labels: dict[int, str]) -> str:
    if not ferg_ctx.relevant_fields:
        return "Related input fields: (none)"
    lines = ["Related input fields (strongest association first):"]
    for node, text, _ in ferg_ctx.relevant_fields:
        lines.append(f"- {node_labels.get(node, text)}")
    return "\n".join(lines)


def build_constraint_prompt(
    field_label: str,
    field_html: str,
    ferg_ctx: FergContext,
    form_ctx: FormContext,
    now: _dt.datetime,
    feedback: Optional[list[dict]] = None,
    node_labels: Optional[dict[int, str]] = None,
) -> PromptBundle:
    """Assemble the constraint prompt for one field.

    `feedback` items are dicts with "text" and optional "prior_value" keys;
    the Feedback section exists only when the list is nonempty.
    """
    sections = [
        ("TimeContext", f"Current date and time: {now.isoformat(sep=' ', timespec='seconds')}"),
        ("FormContext", _form_context_text(form_ctx)),
        ("InputFieldAndLocalContext", _local_context_text(field_html, ferg_ctx)),
        ("GlobalContext", _global_context_text(ferg_ctx, node_labels or {})),
    ]
    if feedback:
        lines = ["Previous submission feedback for this field:"]
        for item in feedback:
            prior = item.get("prior_value")
            if prior is not None:
                lines.append(f"- submitted value {prior!r} -> feedback: {item['text']}")
            else:
                lines.append(f"- feedback: {item['text']}")
        sections.append(("Feedback", "\n".join(lines)))
    return PromptBundle(
        kind="constraint", sections=tuple(sections), field_label=field_label
    )


def render_constraint_line(c: Constraint, bindings: Bindings) -> Optional[str]:
    """Human-readable line for one constraint, with bound field references
    inlined as literals. Returns None when an unbound reference makes the
    constraint inapplicable."""
    name = c.template
    phrase: Optional[str] = None
    if name == "toBeTruthy":
        phrase = "be empty" if c.negated else "not be empty"
        return f"- The value should {phrase}."
    if name == "toBeEqual":
        phrase = f"be equal to '{c.args[0]}'"
    elif name == "toBeEqualToField":
        ref = str(c.args[0])
        if ref not in bindings:
            return None
        phrase = f"be equal to '{bindings[ref]}'"
    elif name == "toHaveLengthCondition":
        phrase = f"have length {c.args[0]} {c.args[1]}"
    elif name == "toBeAlphabetical":
        phrase = "contain only letters and spaces"
    elif name == "toBeNumeric":
        phrase = "be a number"
    elif name == "toBeAlphanumeric":
        phrase = "contain only letters and digits"
    elif name == "toContainWhiteSpace":
        phrase = "contain whitespace"
    elif name == "toMatchPattern":
        phrase = f"match the pattern /{c.args[0]}/"
    elif name == "toBeDate":
        phrase = f"be a date in format {c.args[0]}" if c.args else "be a date"
    elif name in ("toBeAfterDate", "toBeBeforeDate"):
        ref = str(c.args[0])
        if ref in bindings:
            anchor = bindings[ref]
        elif parse_date(ref) is not None:
            anchor = ref
        else:
            return None
        direction = "after" if name == "toBeAfterDate" else "before"
        phrase = f"be a date {direction} '{anchor}'"
    elif name == "toBeEmail":
        phrase = "be a valid email address"
    elif name == "toBeInRange":
        phrase = f"be a number between {c.args[0]} and {c.args[1]}"
    else:  # freeTextConstraint
        return f"- {c.args[0]}"
    negation = "not " if c.negated else ""
    return f"- The value should {negation}{phrase}."


def build_value_prompt(
    field_label: str,
    field_html: str,
    ferg_ctx: FergContext,
    form_ctx: FormContext,
    constraints: ConstraintSet,
    bindings: Bindings,
    node_labels: Optional[dict[int, str]] = None,
) -> PromptBundle:
    """Assemble the value prompt: no time section, constraints rendered with
    already-generated values inlined and unbound references omitted."""
    lines = []
    for c in constraints.constraints:
        line = render_constraint_line(c, bindings)
        if line is not None:
            lines.append(line)
    rendered = "\n".join(lines) if lines else "(no constraints recorded for this field)"
    sections = (
        ("FormContext", _form_context_text(form_ctx)),
        ("InputFieldAndLocalContext", _local_context_text(field_html, ferg_ctx)),
        ("ConstraintsAndValues", rendered),
    )
    return PromptBundle(
        kind="value",
        sections=sections,
        field_label=field_label,
        constraint_set=constraints,
        bindings=dict(bindings),
    )
