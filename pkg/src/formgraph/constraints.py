"""Typed, negatable constraints over form field values.

The catalog fixes fourteen evaluable matcher-style templates plus the
non-evaluable free-text escape hatch. Constraints parse from and serialize
back to a fluent expect-chain:

    expect(field('From 1'))
    .toBeTruthy()
    .not.toBeEqualToField('To 1')

Evaluation is pure: character-class templates (alphabetical, alphanumeric)
hold vacuously for empty values, and date/range comparisons hold vacuously
for values that do not parse; emptiness is owned by toBeTruthy and format
by toBeDate / toBeNumeric. That keeps every template independently
negatable.
"""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    ConstraintSyntaxError,
    NotNegatable,
    UnboundFieldReference,
    UnknownTemplate,
)

FREE_TEXT = "freeTextConstraint"


@dataclass(frozen=True)
class ConstraintTemplate:
    name: str
    arg_kinds: tuple[str, ...]  # literal | field | op | field_or_literal | text
    optional_args: int = 0

    @property
    def min_args(self) -> int:
        return len(self.arg_kinds) - self.optional_args

    @property
    def max_args(self) -> int:
        return len(self.arg_kinds)


_CATALOG: tuple[ConstraintTemplate, ...] = (
    ConstraintTemplate("toBeTruthy", ()),
    ConstraintTemplate("toBeEqual", ("literal",)),
    ConstraintTemplate("toBeEqualToField", ("field",)),
    ConstraintTemplate("toHaveLengthCondition", ("op", "literal")),
    ConstraintTemplate("toBeAlphabetical", ()),
    ConstraintTemplate("toBeNumeric", ()),
    ConstraintTemplate("toBeAlphanumeric", ()),
    ConstraintTemplate("toContainWhiteSpace", ()),
    ConstraintTemplate("toMatchPattern", ("literal",)),
    ConstraintTemplate("toBeDate", ("literal",), optional_args=1),
    ConstraintTemplate("toBeAfterDate", ("field_or_literal",)),
    ConstraintTemplate("toBeBeforeDate", ("field_or_literal",)),
    ConstraintTemplate("toBeEmail", ()),
    ConstraintTemplate("toBeInRange", ("literal", "literal")),
)

_FREE_TEXT_TEMPLATE = ConstraintTemplate(FREE_TEXT, ("text",))

_BY_NAME = {t.name: t for t in _CATALOG}
_BY_NAME[FREE_TEXT] = _FREE_TEXT_TEMPLATE


def catalog() -> list[ConstraintTemplate]:
    """The fourteen evaluable templates (free text excluded)."""
    return list(_CATALOG)


def template(name: str) -> ConstraintTemplate:
    return _BY_NAME[name]


@dataclass(frozen=True)
class Constraint:
    template: str
    args: tuple = ()
    negated: bool = False

    def is_evaluable(self) -> bool:
        return self.template != FREE_TEXT

    def field_refs(self) -> tuple[str, ...]:
        """Argument values that reference other fields by construction."""
        spec = _BY_NAME[self.template]
        return tuple(
            str(a)
            for a, kind in zip(self.args, spec.arg_kinds)
            if kind == "field"
        )


@dataclass(frozen=True)
class ConstraintSet:
    field: str
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        deduped: list[Constraint] = []
        for c in self.constraints:
            if c not in deduped:
                deduped.append(c)
        object.__setattr__(self, "constraints", tuple(deduped))


Bindings = dict[str, str]


class _NotEvaluable:
    def __repr__(self):
        return "NotEvaluable"

    def __bool__(self):
        raise TypeError("NotEvaluable has no truth value; compare with `is`")


NOT_EVALUABLE = _NotEvaluable()


# --- evaluation ---

_OPS = {
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}

_NUMERIC_RE = re.compile(r"^-?\d+(\.\d+)?$")
_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

_FORMAT_TOKENS = (("YYYY", "%Y"), ("YY", "%y"), ("DD", "%d"), ("MM", "%m"))


def _strptime_format(friendly: str) -> str:
    if "%" in friendly:
        return friendly
    fmt = friendly
    for token, code in _FORMAT_TOKENS:
        fmt = fmt.replace(token, code)
    return fmt


def parse_date(value: str, fmt: Optional[str] = None) -> Optional[_dt.date]:
    """Parse a date; strict when a format is given, otherwise try ISO-8601,
    then DD/MM with the current year, then DD/MM/YYYY."""
    value = value.strip()
    if not value:
        return None
    formats = [_strptime_format(fmt)] if fmt else ["%Y-%m-%d", "%d/%m", "%d/%m/%Y"]
    for candidate in formats:
        try:
            parsed = _dt.datetime.strptime(value, candidate)
        except ValueError:
            continue
        if "%y" not in candidate.lower():
            parsed = parsed.replace(year=_dt.date.today().year)
        return parsed.date()
    return None


def _resolve_date_ref(arg, bindings: Bindings) -> Optional[_dt.date]:
    raw = str(arg)
    if raw in bindings:
        return parse_date(bindings[raw])
    literal = parse_date(raw)
    if literal is not None:
        return literal
    raise UnboundFieldReference(f"no bound value or date literal for {raw!r}")


def _number(value: str) -> Optional[float]:
    return float(value) if _NUMERIC_RE.match(value.strip()) else None


def evaluate(c: Constraint, value: str, bindings: Optional[Bindings] = None):
    """True/False for evaluable constraints, NOT_EVALUABLE for free text.

    Raises UnboundFieldReference when a field reference cannot be resolved.
    """
    bindings = bindings or {}
    name = c.template
    if name == FREE_TEXT:
        return NOT_EVALUABLE

    if name == "toBeTruthy":
        result = value.strip() != ""
    elif name == "toBeEqual":
        result = value == str(c.args[0])
    elif name == "toBeEqualToField":
        ref = str(c.args[0])
        if ref not in bindings:
            raise UnboundFieldReference(f"field {ref!r} has no bound value")
        result = value == bindings[ref]
    elif name == "toHaveLengthCondition":
        result = _OPS[str(c.args[0])](len(value), int(c.args[1]))
    elif name == "toBeAlphabetical":
        result = all(ch.isalpha() or ch == " " for ch in value)
    elif name == "toBeNumeric":
        result = _NUMERIC_RE.match(value.strip()) is not None
    elif name == "toBeAlphanumeric":
        result = all(ch.isalnum() for ch in value)
    elif name == "toContainWhiteSpace":
        result = any(ch.isspace() for ch in value)
    elif name == "toMatchPattern":
        result = re.search(str(c.args[0]), value) is not None
    elif name == "toBeDate":
        fmt = str(c.args[0]) if c.args else None
        result = parse_date(value, fmt) is not None
    elif name in ("toBeAfterDate", "toBeBeforeDate"):
        own = parse_date(value)
        other = _resolve_date_ref(c.args[0], bindings)
        if own is None or other is None:
            result = True  # format violations are toBeDate's business
        elif name == "toBeAfterDate":
            result = own > other
        else:
            result = own < other
    elif name == "toBeEmail":
        result = _EMAIL_RE.match(value.strip()) is not None
    elif name == "toBeInRange":
        number = _number(value)
        if number is None:
            result = True  # non-numeric values are toBeNumeric's business
        else:
            result = float(c.args[0]) <= number <= float(c.args[1])
    else:  # pragma: no cover - catalog closure
        raise UnknownTemplate(name)

    return (not result) if c.negated else result


def negate(c: Constraint) -> Constraint:
    if c.template == FREE_TEXT:
        raise NotNegatable("free-text constraints cannot be negated")
    return replace(c, negated=not c.negated)


# --- hallucination guard ---

def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def map_to_catalog(name: str, max_ratio: float = 0.34) -> str:
    """Map a (possibly hallucinated) constraint name onto the catalog.

    Accepts the closest name within the normalized edit-distance bound;
    raises UnknownTemplate beyond it.
    """
    if name in _BY_NAME:
        return name
    best_name = None
    best = None
    for known in list(_BY_NAME):
        distance = _levenshtein(name.lower(), known.lower())
        if best is None or distance < best:
            best = distance
            best_name = known
    if best is not None and best / max(len(name), 1) <= max_ratio:
        return best_name
    raise UnknownTemplate(f"no catalog template within distance bound for {name!r}")


# --- fluent syntax ---

_HEADER_RE = re.compile(
    r"expect\s*\(\s*field\s*\(\s*(?P<quote>['\"])(?P<label>.*?)(?P=quote)\s*\)\s*\)",
    re.DOTALL,
)
_CALL_RE = re.compile(r"\s*\.\s*(?:(?P<neg>not)\s*\.\s*)?(?P<name>\w+)\s*\(")


def _scan_args(text: str, pos: int) -> tuple[list, int]:
    """Parse a comma-separated argument list starting after '('. Returns the
    args and the index just past the closing paren."""
    args: list = []
    token = ""
    in_quote = None
    escaped = False
    pending = False

    def flush():
        nonlocal token, pending
        raw = token.strip()
        token = ""
        if not pending and not raw:
            return
        pending = False
        try:
            args.append(int(raw))
            return
        except ValueError:
            pass
        try:
            args.append(float(raw))
            return
        except ValueError:
            pass
        args.append(raw)

    while pos < len(text):
        ch = text[pos]
        if in_quote:
            if escaped:
                token += ch
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == in_quote:
                in_quote = None
                args.append(token)
                token = ""
                pending = False
            else:
                token += ch
            pos += 1
            continue
        if ch in "'\"":
            in_quote = ch
            pending = True
            if token.strip():
                raise ConstraintSyntaxError(f"unexpected text before quote near {pos}")
            token = ""
        elif ch == ",":
            flush()
            pending = True
        elif ch == ")":
            flush()
            return args, pos + 1
        else:
            token += ch
        pos += 1
    raise ConstraintSyntaxError("unbalanced call chain: missing ')'")


def _scan_chain(text: str, known_fields=None) -> tuple[ConstraintSet, int]:
    header = _HEADER_RE.search(text)
    if not header:
        raise ConstraintSyntaxError("no expect(field(...)) header found")
    label = header.group("label")
    pos = header.end()
    constraints: list[Constraint] = []
    while True:
        call = _CALL_RE.match(text, pos)
        if not call:
            break
        args, pos = _scan_args(text, call.end())
        constraints.append(
            _build_constraint(call.group("name"), args, bool(call.group("neg")), known_fields)
        )
    return ConstraintSet(field=label, constraints=tuple(constraints)), pos


def _build_constraint(name: str, args: list, negated: bool, known_fields) -> Constraint:
    name = map_to_catalog(name)
    spec = _BY_NAME[name]
    # an equality against a known field label is a field reference
    if (
        name == "toBeEqual"
        and known_fields
        and len(args) == 1
        and isinstance(args[0], str)
        and args[0] in known_fields
    ):
        name = "toBeEqualToField"
        spec = _BY_NAME[name]
    if not (spec.min_args <= len(args) <= spec.max_args):
        raise ConstraintSyntaxError(
            f"{name} takes {spec.min_args}..{spec.max_args} args, got {len(args)}"
        )
    if name == "toHaveLengthCondition":
        if str(args[0]) not in _OPS:
            raise ConstraintSyntaxError(f"unknown length condition {args[0]!r}")
        try:
            args = [str(args[0]), int(args[1])]
        except (TypeError, ValueError):
            raise ConstraintSyntaxError(f"length bound must be an integer: {args[1]!r}")
    if name == "toBeInRange":
        try:
            args = [float(args[0]), float(args[1])]
        except (TypeError, ValueError):
            raise ConstraintSyntaxError(f"range bounds must be numeric: {args!r}")
    if name == "toMatchPattern":
        try:
            re.compile(str(args[0]))
        except re.error as exc:
            raise ConstraintSyntaxError(f"bad pattern {args[0]!r}: {exc}")
    return Constraint(template=name, args=tuple(args), negated=negated)


def parse_constraints(text: str, known_fields=None) -> ConstraintSet:
    """Parse one fluent expect-chain.

    known_fields, when given, lets equality constraints that name a form
    field resolve to field references instead of literals.
    """
    constraint_set, pos = _scan_chain(text, known_fields)
    tail = text[pos:].strip().strip(";").strip()
    if tail:
        raise ConstraintSyntaxError(f"unexpected trailing text: {tail[:40]!r}")
    return constraint_set


def _serialize_arg(arg) -> str:
    if isinstance(arg, bool):
        return "true" if arg else "false"
    if isinstance(arg, (int, float)):
        return repr(arg)
    escaped = str(arg).replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def serialize(constraint_set: ConstraintSet) -> str:
    """Render a constraint set back to the fluent syntax (round-trips)."""
    lines = [f"expect(field('{constraint_set.field}'))"]
    for c in constraint_set.constraints:
        rendered_args = ", ".join(_serialize_arg(a) for a in c.args)
        prefix = ".not." if c.negated else "."
        lines.append(f"{prefix}{c.template}({rendered_args})")
    return "\n".join(lines)


# --- JSON wire format for the run database ---

def constraint_set_to_dict(constraint_set: ConstraintSet) -> dict:
    return {
        "field": constraint_set.field,
        "constraints": [
            {"template": c.template, "args": list(c.args), "negated": c.negated}
            for c in constraint_set.constraints
        ],
    }


def constraint_set_from_dict(data: dict) -> ConstraintSet:
    return ConstraintSet(
        field=data["field"],
        constraints=tuple(
            Constraint(
                template=c["template"], args=tuple(c["args"]), negated=c["negated"]
            )
            for c in data["constraints"]
        ),
    )
