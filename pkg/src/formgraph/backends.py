"""Completion backends for constraint and value generation.

Three backends share one interface: a remote HTTP chat-completion endpoint
for production, a scripted mock that replays canned responses, and an
oracle mock that answers from a simulator spec's own rule set. The mocks
are deterministic, which is what anchors the offline test suite; the
oracle mock bounds what the pipeline can achieve with a perfect-knowledge
model.
"""

from __future__ import annotations

import datetime as _dt
import os
import re
from dataclasses import dataclass, field
from typing import Optional, Protocol

from . import constraints as cst
from .constraints import Constraint, ConstraintSet, evaluate, parse_date, serialize
from .errors import (
    BackendUnavailable,
    ContextTooLarge,
    MalformedResponse,
    NoConstraintFound,
    NoValueFound,
    UnboundFieldReference,
)
from .prompts import PromptBundle
from .simulator import SimulatedFormSpec


@dataclass(frozen=True)
class LlmBackendConfig:
    backend: str  # remote | oracle-mock | scripted-mock
    temperature: float = 0.0
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "FORMGRAPH_API_KEY"
    script: Optional[dict] = None
    spec_path: str = ""
    max_attempts: int = 2

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("completion temperature is fixed at 0")


@dataclass(frozen=True)
class LlmResponse:
    raw: str
    parsed: object = None


class CompletionBackend(Protocol):
    def complete(self, bundle: PromptBundle) -> LlmResponse: ...


# --- response parsing ---

_FENCE_RE = re.compile(r"```(?:\w+)?\s*(.*?)```", re.DOTALL)
_QUOTED_RE = re.compile(r"\"([^\"\n]*)\"|'([^'\n]*)'")


def parse_constraint_response(text: str, known_fields=None) -> ConstraintSet:
    """Extract and parse the first expect-chain in a response, ignoring any
    prose around it."""
    try:
        constraint_set, _ = cst._scan_chain(text, known_fields)
    except cst.ConstraintSyntaxError as exc:
        raise NoConstraintFound(f"no parseable expect-chain in response: {exc}")
    return constraint_set


def parse_value_response(text: str) -> str:
    """Extract a single value from a fenced or quoted span."""
    fenced = _FENCE_RE.search(text)
    if fenced:
        return fenced.group(1).strip()
    quoted = _QUOTED_RE.search(text)
    if quoted:
        value = quoted.group(1) if quoted.group(1) is not None else quoted.group(2)
        return value.strip()
    raise NoValueFound("response carries no fenced or quoted value")


# --- remote backend ---

class RemoteBackend:
    """HTTP chat-completion client (OpenAI-style wire format)."""

    def __init__(self, cfg: LlmBackendConfig):
        if not cfg.endpoint:
            raise ValueError("remote backend requires an endpoint")
        self.cfg = cfg
        self.api_key = os.environ.get(cfg.api_key_env, "")

    def complete(self, bundle: PromptBundle) -> LlmResponse:
        import requests

        payload = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": bundle.render()}],
            "temperature": 0,
        }
        last_error: Optional[Exception] = None
        for _ in range(self.cfg.max_attempts):
            try:
                response = requests.post(
                    self.cfg.endpoint,
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=60,
                )
                if response.status_code in (400, 413):
                    body = response.text.lower()
                    if "context" in body or "token" in body or response.status_code == 413:
                        raise ContextTooLarge(
                            f"backend rejected prompt for field {bundle.field_label!r}"
                        )
                response.raise_for_status()
                content = response.json()["choices"][0]["message"]["content"]
                return LlmResponse(raw=content)
            except ContextTooLarge:
                raise
            except Exception as exc:  # noqa: BLE001 - transport errors vary
                last_error = exc
        raise BackendUnavailable(
            f"completion endpoint {self.cfg.endpoint} failed: {last_error}",
            attempts=self.cfg.max_attempts,
        )


# --- scripted mock ---

class ScriptedMockBackend:
    """Replays canned responses per (prompt kind, field label).

    The script maps field labels to response lists; successive calls consume
    the list and then stick to the last entry. Unscripted fields fall back
    to a minimal constraint chain / empty value.
    """

    def __init__(self, script: dict):
        self.script = script or {}
        self._counters: dict[tuple[str, str], int] = {}

    def complete(self, bundle: PromptBundle) -> LlmResponse:
        table = self.script.get(
            "constraints" if bundle.kind == "constraint" else "values", {}
        )
        responses = table.get(bundle.field_label)
        if not responses:
            if bundle.kind == "constraint":
                return LlmResponse(raw=f"expect(field('{bundle.field_label}')).toBeTruthy()")
            return LlmResponse(raw='""')
        key = (bundle.kind, bundle.field_label)
        index = self._counters.get(key, 0)
        self._counters[key] = index + 1
        return LlmResponse(raw=responses[min(index, len(responses) - 1)])


# --- oracle mock ---

_CLOSED_LIST_RE = re.compile(r"\^\((?:[\w\s-]+\|)+[\w\s-]+\)\$")

_GENERIC_POOL = (
    "",
    "a",
    "ab",
    "abc",
    "a b",
    "abcdefg",
    "abc123",
    "abcdefgh",
    "x1!",
    "x1",
    "hello",
    "Hello World",
    "Alice",
    "Alice Johnson",
    "42",
    "0",
    "-1",
    "3",
    "2.5",
    "12345678",
    "passw0rd!",
    "user@example.com",
    "not-an-email",
    "not-a-date",
    "someday",
    "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa",
    "a" * 120,
)


class OracleMockBackend:
    """Perfect-knowledge stand-in: answers constraint prompts by translating
    the simulator's own rules for the field, and value prompts by brute-force
    search over a small candidate alphabet seeded with the spec's witness
    values.

    Closed-list patterns (e.g. a city whitelist) are deliberately translated
    into their observable character-class shape rather than leaked verbatim;
    the correct member values still surface through the witness-seeded
    candidate pool, which mirrors how a knowledgeable human would answer.
    """

    def __init__(self, spec: SimulatedFormSpec):
        self.spec = spec

    # -- constraint prompts --

    def _translate(self, c: Constraint) -> list[Constraint]:
        if c.template == "toMatchPattern" and not c.negated:
            pattern = str(c.args[0])
            if _CLOSED_LIST_RE.fullmatch(pattern):
                return [
                    Constraint("toBeAlphabetical"),
                    Constraint("toHaveLengthCondition", (">", 2)),
                ]
        return [c]

    @staticmethod
    def _inverse(c: Constraint, owner: str, label: str) -> Optional[Constraint]:
        """Mirror "must differ" constraints onto the referenced field: if the
        owner must differ from `label`, `label` equally must differ from the
        owner. Positive equality and date ordering stay directional (the
        later field is generated to satisfy them)."""
        if not c.args or str(c.args[0]) != label:
            return None
        if c.template == "toBeEqualToField" and c.negated:
            return Constraint("toBeEqualToField", (owner,), negated=True)
        return None

    def constraints_for(self, label: str) -> ConstraintSet:
        out: list[Constraint] = []
        for rule in self.spec.rules:
            for atom in rule.requirements:
                for c in atom.constraints:
                    if atom.field == label:
                        out.extend(self._translate(c))
                    else:
                        mirrored = self._inverse(c, atom.field, label)
                        if mirrored is not None:
                            out.extend(self._translate(mirrored))
        if not out:
            out = [Constraint("toBeTruthy")]
        return ConstraintSet(field=label, constraints=tuple(out))

    # -- value prompts --

    def _date_candidates(self, constraint_set: ConstraintSet, bindings) -> list[str]:
        anchors: list[_dt.date] = []
        for c in constraint_set.constraints:
            if c.template in ("toBeAfterDate", "toBeBeforeDate"):
                raw = str(c.args[0])
                anchor = (
                    parse_date(bindings[raw]) if raw in bindings else parse_date(raw)
                )
                if anchor:
                    anchors.append(anchor)
        candidates = []
        for anchor in anchors:
            for delta in (0, 1, 7, -1, -7, 30):
                day = anchor + _dt.timedelta(days=delta)
                candidates.append(f"{day.day:02d}/{day.month:02d}")
        candidates.extend(["08/04", "12/04", "15/06", "2025-04-08"])
        return candidates

    def _range_candidates(self, constraint_set: ConstraintSet) -> list[str]:
        candidates = []
        for c in constraint_set.constraints:
            if c.template == "toBeInRange":
                low, high = float(c.args[0]), float(c.args[1])
                for value in (low, high, (low + high) / 2, low - 1, high + 1, 0):
                    candidates.append(f"{value:g}")
        return candidates

    def _literal_candidates(self, constraint_set: ConstraintSet, bindings) -> list[str]:
        candidates = []
        for c in constraint_set.constraints:
            if c.template == "toBeEqual":
                candidates.append(str(c.args[0]))
            elif c.template == "toBeEqualToField":
                ref = str(c.args[0])
                if ref in bindings:
                    candidates.append(bindings[ref])
        return candidates

    def value_for(self, constraint_set: ConstraintSet, bindings) -> Optional[str]:
        label = constraint_set.field
        candidates: list[str] = []
        if label in self.spec.success_witness:
            candidates.append(self.spec.success_witness[label])
        candidates.extend(self._literal_candidates(constraint_set, bindings))
        candidates.extend(self._date_candidates(constraint_set, bindings))
        candidates.extend(self._range_candidates(constraint_set))
        candidates.extend(self.spec.success_witness.values())
        candidates.extend(_GENERIC_POOL)
        for candidate in candidates:
            ok = True
            for c in constraint_set.constraints:
                try:
                    if evaluate(c, candidate, bindings) is False:
                        ok = False
                        break
                except UnboundFieldReference:
                    continue  # unresolved references do not gate generation
            if ok:
                return candidate
        return None

    def complete(self, bundle: PromptBundle) -> LlmResponse:
        if bundle.kind == "constraint":
            return LlmResponse(raw=serialize(self.constraints_for(bundle.field_label)))
        constraint_set = bundle.constraint_set or ConstraintSet(field=bundle.field_label)
        value = self.value_for(constraint_set, bundle.bindings or {})
        if value is None:
            return LlmResponse(raw="No compliant value exists for this field.")
        escaped = value.replace('"', "'")
        return LlmResponse(raw=f'"{escaped}"')


def make_backend(cfg: LlmBackendConfig, spec: Optional[SimulatedFormSpec] = None):
    if cfg.backend == "remote":
        return RemoteBackend(cfg)
    if cfg.backend == "scripted-mock":
        return ScriptedMockBackend(cfg.script or {})
    if cfg.backend == "oracle-mock":
        if spec is None:
            raise ValueError("oracle-mock needs a simulator spec")
        return OracleMockBackend(spec)
    raise ValueError(f"unknown backend {cfg.backend!r}")


# --- retry policy: one reprompt on parse failure ---

def request_constraints(backend, bundle: PromptBundle, known_fields=None):
    """Complete + parse, reprompting once before giving up."""
    raws = []
    for _ in range(2):
        response = backend.complete(bundle)
        raws.append(response.raw)
        try:
            return parse_constraint_response(response.raw, known_fields), raws
        except NoConstraintFound:
            continue
    raise MalformedResponse(
        f"no constraint set parsed for {bundle.field_label!r} after reprompt"
    )


def request_value(backend, bundle: PromptBundle):
    raws = []
    for _ in range(2):
        response = backend.complete(bundle)
        raws.append(response.raw)
        try:
            return parse_value_response(response.raw), raws
        except NoValueFound:
            continue
    raise MalformedResponse(
        f"no value parsed for {bundle.field_label!r} after reprompt"
    )
