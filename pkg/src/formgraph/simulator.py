"""Declarative form backend with ground-truth submission-state enumeration.

A form spec lists fields, ordered validation rules, and a success action.
Each rule owns one unique feedback text; the first rule whose requirement
fails renders that feedback (inline next to its field or in the global
message slot). Every distinct rule therefore corresponds to exactly one
form submission state, and the rule list plus the success action enumerate
the ground truth that generated test plans are scored against.

Submission handling is a pure function of (spec, assignment), so the
simulator is safe under concurrent use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .constraints import ConstraintSet, evaluate, parse_constraints
from .errors import DanglingFieldReference, SchemaError

SUCCESS = "__success__"


@dataclass(frozen=True)
class SimField:
    label: str
    input_type: str = "text"
    attributes: dict[str, str] = field(default_factory=dict)

    def slug(self) -> str:
        if "id" in self.attributes:
            return self.attributes["id"]
        if "name" in self.attributes:
            return self.attributes["name"]
        return "-".join(self.label.lower().split())


@dataclass(frozen=True)
class ValidationRule:
    fields: tuple[str, ...]
    requirements: tuple[ConstraintSet, ...]
    feedback_text: str
    scope: str  # inline | global
    scope_field: Optional[str]
    witness: dict[str, str]


@dataclass(frozen=True)
class SimulatedFormSpec:
    form_id: str
    title: str
    description: str
    intro: str
    submit_label: str
    fields: tuple[SimField, ...]
    rules: tuple[ValidationRule, ...]
    success_action: str  # redirect | message
    success_target: str  # url or message text
    success_witness: dict[str, str]
    page_template: Optional[str] = None

    def field_labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.fields)

    def field_by_label(self, label: str) -> SimField:
        for f in self.fields:
            if f.label == label:
                return f
        raise KeyError(label)

    def base_url(self) -> str:
        return f"sim://{self.form_id}/form"


@dataclass(frozen=True)
class FssRecord:
    input_subset: frozenset[str]
    feedback: str  # feedback text, or SUCCESS for the passing state
    kind: str  # success | failure


@dataclass(frozen=True)
class SimPage:
    html: str
    url: str
    redirected: bool


@dataclass(frozen=True)
class ObservedSubmission:
    assignment: dict[str, str]
    success: bool
    feedback_texts: tuple[str, ...]


def _validate_schema(data: dict) -> None:
    import jsonschema
    from importlib import resources

    schema = json.loads(
        resources.files("formgraph.schemas")
        .joinpath("form_spec.schema.json")
        .read_text("utf-8")
    )
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"form spec schema violation: {exc.message}") from exc


def load_form_spec(document: Union[dict, str, Path]) -> SimulatedFormSpec:
    """Load and validate a form spec from a dict, JSON text, or file path."""
    if isinstance(document, (str, Path)):
        path = Path(document)
        if path.exists():
            data = json.loads(path.read_text("utf-8"))
        else:
            try:
                data = json.loads(str(document))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not a readable spec path or JSON text: {document!r}") from exc
    else:
        data = document
    _validate_schema(data)

    fields = tuple(
        SimField(
            label=f["label"],
            input_type=f.get("input_type", "text"),
            attributes=dict(f.get("attributes", {})),
        )
        for f in data["fields"]
    )
    labels = [f.label for f in fields]
    if len(set(labels)) != len(labels):
        raise SchemaError("field labels must be unique")
    label_set = set(labels)

    rules = []
    seen_feedback = set()
    for raw in data["rules"]:
        for name in raw["fields"]:
            if name not in label_set:
                raise DanglingFieldReference(f"rule references unknown field {name!r}")
        requirements = []
        for expr in raw["requires"]:
            atom = parse_constraints(expr, known_fields=label_set)
            if atom.field not in raw["fields"]:
                raise SchemaError(
                    f"rule predicate targets {atom.field!r} outside its input subset"
                )
            for c in atom.constraints:
                for ref in c.field_refs():
                    if ref not in label_set:
                        raise DanglingFieldReference(
                            f"constraint references unknown field {ref!r}"
                        )
                    if ref not in raw["fields"]:
                        raise SchemaError(
                            f"rule predicate references {ref!r} outside its input subset"
                        )
            requirements.append(atom)
        if raw["feedback"] in seen_feedback:
            raise SchemaError(f"duplicate feedback text: {raw['feedback']!r}")
        seen_feedback.add(raw["feedback"])
        scope = raw.get("scope", {"kind": "global"})
        scope_field = scope.get("field")
        if scope["kind"] == "inline" and scope_field not in label_set:
            raise DanglingFieldReference(
                f"inline scope references unknown field {scope_field!r}"
            )
        witness = dict(raw.get("witness", {}))
        for name in witness:
            if name not in label_set:
                raise DanglingFieldReference(f"witness keys unknown field {name!r}")
        rules.append(
            ValidationRule(
                fields=tuple(raw["fields"]),
                requirements=tuple(requirements),
                feedback_text=raw["feedback"],
                scope=scope["kind"],
                scope_field=scope_field,
                witness=witness,
            )
        )

    success = data["success"]
    return SimulatedFormSpec(
        form_id=data["form_id"],
        title=data.get("title", data["form_id"]),
        description=data.get("description", ""),
        intro=data.get("intro", ""),
        submit_label=data.get("submit_label", "Submit"),
        fields=fields,
        rules=tuple(rules),
        success_action=success["action"],
        success_target=success.get("url") or success.get("message") or "",
        success_witness=dict(data["success_witness"]),
        page_template=data.get("page_template"),
    )


def rule_violated(rule: ValidationRule, assignment: dict[str, str]) -> bool:
    """A rule fires when any constraint of any of its requirement atoms fails."""
    for atom in rule.requirements:
        value = assignment.get(atom.field, "")
        for c in atom.constraints:
            if evaluate(c, value, assignment) is False:
                return True
    return False


def first_firing_rule(
    spec: SimulatedFormSpec, assignment: dict[str, str]
) -> Optional[ValidationRule]:
    full = {label: assignment.get(label, "") for label in spec.field_labels()}
    for rule in spec.rules:
        if rule_violated(rule, full):
            return rule
    return None


_ATTR_ESCAPE = (("&", "&amp;"), ("<", "&lt;"), (">", "&gt;"), ('"', "&quot;"))


def _attr(value: str) -> str:
    for raw, enc in _ATTR_ESCAPE:
        value = value.replace(raw, enc)
    return value


def _text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


_DEFAULT_TEMPLATE = """<html>
<head>
<title>{title}</title>
<meta name="description" content="{description}">
</head>
<body>
<div class="messages">{global_messages}</div>
<h1>{title}</h1>
<p>{intro}</p>
{form}
</body>
</html>
"""


def render_page(
    spec: SimulatedFormSpec,
    values: Optional[dict[str, str]] = None,
    firing: Optional[ValidationRule] = None,
    global_message: str = "",
) -> str:
    """Render the form page; a firing rule injects its feedback either into
    the global message slot or inline after its field's input."""
    values = values or {}
    rows = []
    for f in spec.fields:
        slug = f.slug()
        attrs = {
            "type": f.input_type,
            "id": slug,
            "name": slug,
            "aria-label": f.label,
        }
        attrs.update(f.attributes)
        if f.label in values and values[f.label]:
            attrs["value"] = values[f.label]
        attr_text = " ".join(f'{k}="{_attr(v)}"' for k, v in attrs.items())
        row = [
            '<div class="field-row">',
            f'<label for="{_attr(slug)}">{_text(f.label)}</label>',
            f"<input {attr_text}>",
        ]
        if (
            firing is not None
            and firing.scope == "inline"
            and firing.scope_field == f.label
        ):
            row.append(f'<div class="field-feedback">{_text(firing.feedback_text)}</div>')
        row.append("</div>")
        rows.append("\n".join(row))
    form = "\n".join(
        [
            f'<form id="{_attr(spec.form_id)}" action="/submit" method="post">',
            "\n".join(rows),
            f'<button type="submit">{_text(spec.submit_label)}</button>',
            "</form>",
        ]
    )
    if firing is not None and firing.scope == "global":
        global_message = firing.feedback_text
    template = spec.page_template or _DEFAULT_TEMPLATE
    return template.format(
        title=_text(spec.title),
        description=_attr(spec.description),
        intro=_text(spec.intro),
        global_messages=_text(global_message),
        form=form,
    )


def render_success_page(spec: SimulatedFormSpec) -> str:
    return (
        "<html>\n<head>\n<title>Results</title>\n</head>\n<body>\n"
        "<h1>Results</h1>\n<p>Browse the matching entries below.</p>\n"
        "</body>\n</html>\n"
    )


def handle_submission(spec: SimulatedFormSpec, assignment: dict[str, str]) -> SimPage:
    """Evaluate rules in order; the first violation renders its feedback,
    otherwise the success action runs. Pure and deterministic."""
    firing = first_firing_rule(spec, assignment)
    if firing is not None:
        html = render_page(spec, values=assignment, firing=firing)
        return SimPage(html=html, url=spec.base_url(), redirected=False)
    if spec.success_action == "redirect":
        return SimPage(
            html=render_success_page(spec), url=spec.success_target, redirected=True
        )
    html = render_page(spec, values=assignment, global_message=spec.success_target)
    return SimPage(html=html, url=spec.base_url(), redirected=False)


def enumerate_fss(spec: SimulatedFormSpec) -> list[FssRecord]:
    """One record per rule plus the single success record."""
    records = [
        FssRecord(
            input_subset=frozenset(rule.fields),
            feedback=rule.feedback_text,
            kind="failure",
        )
        for rule in spec.rules
    ]
    records.append(
        FssRecord(
            input_subset=frozenset(spec.field_labels()), feedback=SUCCESS, kind="success"
        )
    )
    return records


@dataclass(frozen=True)
class CoverageResult:
    covered: frozenset[str]
    total: int
    ratio: float
    rows: tuple[tuple[FssRecord, bool], ...]


def fss_coverage(
    truth: list[FssRecord], observed: list[ObservedSubmission]
) -> CoverageResult:
    """A record counts as covered when some observed submission produced
    exactly its feedback text (or a success, for the success record)."""
    seen_texts = set()
    seen_success = False
    for obs in observed:
        if obs.success:
            seen_success = True
        seen_texts.update(obs.feedback_texts)
    rows = []
    covered = set()
    for record in truth:
        hit = seen_success if record.kind == "success" else record.feedback in seen_texts
        rows.append((record, hit))
        if hit:
            covered.add(record.feedback)
    ratio = len(covered) / len(truth) if truth else 0.0
    return CoverageResult(
        covered=frozenset(covered), total=len(truth), ratio=ratio, rows=tuple(rows)
    )


def passing_check(observed: list[ObservedSubmission]) -> bool:
    return any(obs.success for obs in observed)


def verify_witnesses(spec: SimulatedFormSpec) -> list[str]:
    """Check that every rule's bundled witness actually triggers it and that
    the success witness passes. Returns a list of violation messages."""
    problems = []
    for rule in spec.rules:
        assignment = dict(spec.success_witness)
        assignment.update(rule.witness)
        firing = first_firing_rule(spec, assignment)
        if firing is None:
            problems.append(f"witness for {rule.feedback_text!r} passes the form")
        elif firing.feedback_text != rule.feedback_text:
            problems.append(
                f"witness for {rule.feedback_text!r} fires {firing.feedback_text!r}"
            )
    if first_firing_rule(spec, dict(spec.success_witness)) is not None:
        problems.append("success witness does not pass the form")
    return problems
