"""End-to-end test generation pipeline.

Orchestrates the loop: infer constraints per field, generate compliant
values, submit, classify feedback, and re-prompt with that feedback until a
submission passes (bounded by the iteration cap). Confirmed constraints are
then validated by negating one at a time against the live form; every
observed (assignment, outcome) pair is recorded append-only and distilled
into an executable four-step test plan.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .analysis import FormAnalysis, FormGraphBuilder
from .backends import request_constraints, request_value
from .constraints import (
    Constraint,
    ConstraintSet,
    constraint_set_to_dict,
    evaluate,
    negate,
)
from .dom import parse_document
from .errors import (
    BackendUnavailable,
    ContextTooLarge,
    MalformedResponse,
    NoPassingAssignment,
    TruthUnavailable,
    UnboundFieldReference,
    ValueGenerationFailed,
)
from .ferg import AdjacencyHints, PruningParams
from .node2vec import Node2VecParams
from .prompts import build_constraint_prompt, build_value_prompt, template_hash
from .simulator import (
    ObservedSubmission,
    SimulatedFormSpec,
    enumerate_fss,
    fss_coverage,
    passing_check,
)
from .submission import (
    FeedbackKeywords,
    all_text_fragments,
    attach_feedback,
    classify_outcome,
    dom_diff,
    extract_feedback,
    submit,
)
from .textembed import make_provider


@dataclass(frozen=True)
class PipelineConfig:
    max_feedback_iterations: int = 5
    seed: int = 42
    provider: str = "ngram"
    sibling_window: int = 3
    lambda_factor: float = 0.5
    std_mode: str = "population"
    node2vec: Node2VecParams = field(default_factory=Node2VecParams)
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        if self.max_feedback_iterations < 1:
            raise ValueError("max_feedback_iterations must be >= 1")
        object.__setattr__(
            self, "node2vec", replace(self.node2vec, rng_seed=self.seed)
        )

    def make_builder(self) -> FormGraphBuilder:
        return FormGraphBuilder(
            provider=make_provider(self.provider),
            node2vec_params=self.node2vec,
            pruning=PruningParams(
                lambda_factor=self.lambda_factor, std_mode=self.std_mode
            ),
            hints=AdjacencyHints(sibling_window=self.sibling_window),
        )

    def make_keywords(self) -> FeedbackKeywords:
        if self.keywords:
            return FeedbackKeywords(keywords=self.keywords)
        return FeedbackKeywords()


@dataclass
class RunRecord:
    index: int
    iteration: int
    kind: str  # initial_attempt | feedback_refinement | validation_probe |
    #            discrepancy | probe_skipped | static_probe
    constraints: dict[str, dict]
    assignment: dict[str, str]
    outcome: str  # success | failure | skipped
    feedback: list[dict]
    input_subset: list[str]
    redirected: bool = False
    after_url: str = ""
    probe: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "iteration": self.iteration,
            "kind": self.kind,
            "constraints": self.constraints,
            "assignment": self.assignment,
            "outcome": self.outcome,
            "feedback": self.feedback,
            "input_subset": self.input_subset,
            "redirected": self.redirected,
            "after_url": self.after_url,
            "probe": self.probe,
        }


def write_run_db(path, records: list[RunRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def load_run_db(path) -> list[RunRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(RunRecord(**json.loads(line)))
    return records


def observed_from_records(records: list[RunRecord]) -> list[ObservedSubmission]:
    out = []
    for record in records:
        if record.outcome == "skipped":
            continue
        out.append(
            ObservedSubmission(
                assignment=dict(record.assignment),
                success=record.outcome == "success",
                feedback_texts=tuple(f["text"] for f in record.feedback),
            )
        )
    return out


class FormTestPipeline:
    """One pipeline instance per form; prompting and submission run
    sequentially because feedback attribution depends on ordering."""

    def __init__(
        self,
        executor,
        backend,
        config: Optional[PipelineConfig] = None,
        truth_spec: Optional[SimulatedFormSpec] = None,
    ):
        self.executor = executor
        self.backend = backend
        self.config = config or PipelineConfig()
        self.truth_spec = truth_spec
        self.builder = self.config.make_builder()
        self.keywords = self.config.make_keywords()
        self.records: list[RunRecord] = []
        self.errors: dict[str, str] = {}
        self._base_url = ""

    # --- record plumbing ---

    def _record(self, **kwargs) -> RunRecord:
        record = RunRecord(index=len(self.records), **kwargs)
        self.records.append(record)
        return record

    @staticmethod
    def _constraints_dict(constraint_map: dict[str, ConstraintSet]) -> dict[str, dict]:
        return {
            label: constraint_set_to_dict(cs) for label, cs in constraint_map.items()
        }

    # --- constraint inference ---

    def infer_initial_constraints(
        self,
        analysis: FormAnalysis,
        now: _dt.datetime,
        feedback_map: Optional[dict[str, list[dict]]] = None,
    ) -> dict[str, ConstraintSet]:
        """One constraint prompt per field in document order. A field whose
        prompt fails after the reprompt falls back to {toBeTruthy}."""
        feedback_map = feedback_map or {}
        labels = analysis.labels_in_document_order()
        known = set(labels)
        out: dict[str, ConstraintSet] = {}
        for label in labels:
            bundle = build_constraint_prompt(
                label,
                analysis.field_html(label),
                analysis.context_for(label),
                analysis.model.context,
                now,
                feedback=feedback_map.get(label),
                node_labels=analysis.field_labels,
            )
            try:
                constraint_set, _ = request_constraints(self.backend, bundle, known)
                out[label] = replace(constraint_set, field=label)
            except (MalformedResponse, BackendUnavailable, ContextTooLarge) as exc:
                self.errors[label] = f"{type(exc).__name__}: {exc}"
                out[label] = ConstraintSet(
                    field=label, constraints=(Constraint("toBeTruthy"),)
                )
        return out

    # --- value generation ---

    def _check_value(self, constraint_set: ConstraintSet, value: str, bindings) -> bool:
        for c in constraint_set.constraints:
            if not c.is_evaluable():
                continue
            try:
                if evaluate(c, value, bindings) is False:
                    return False
            except UnboundFieldReference:
                continue
        return True

    def _value_for(self, analysis, label, constraint_set, bindings) -> str:
        bundle = build_value_prompt(
            label,
            analysis.field_html(label),
            analysis.context_for(label),
            analysis.model.context,
            constraint_set,
            bindings,
            node_labels=analysis.field_labels,
        )
        try:
            value, _ = request_value(self.backend, bundle)
        except (MalformedResponse, BackendUnavailable) as exc:
            raise ValueGenerationFailed(label, str(exc))
        if self._check_value(constraint_set, value, bindings):
            return value
        # one regeneration on violation
        try:
            value, _ = request_value(self.backend, bundle)
        except (MalformedResponse, BackendUnavailable) as exc:
            raise ValueGenerationFailed(label, str(exc))
        if self._check_value(constraint_set, value, bindings):
            return value
        raise ValueGenerationFailed(label, f"value {value!r} violates its constraints")

    def generate_values(
        self, analysis: FormAnalysis, constraint_map: dict[str, ConstraintSet]
    ) -> dict[str, str]:
        """Fields in document order; each prompt sees the values already
        generated for its related fields."""
        bindings: dict[str, str] = {}
        for label in analysis.labels_in_document_order():
            bindings[label] = self._value_for(
                analysis, label, constraint_map[label], bindings
            )
        return bindings

    # --- submission helpers ---

    def _run_submission(self, analysis: FormAnalysis, assignment: dict[str, str]):
        self.executor.navigate(self._base_url)
        result = submit(self.executor, analysis.model, assignment, analysis.fill_targets)
        if result.after is None:
            fragments = all_text_fragments(parse_document(result.after_html))
        else:
            fragments = dom_diff(result.before, result.after)
        raw_feedback = extract_feedback(fragments, self.keywords)
        result.feedback = attach_feedback(self.builder, result, raw_feedback)
        classify_outcome(result)
        return result

    def _subset_for(self, analysis, result, probe_constraint=None, probed_field=None):
        if probe_constraint is not None:
            subset = {probed_field, *probe_constraint.field_refs()}
            return sorted(subset)
        if result.outcome == "success":
            return analysis.labels_in_document_order()
        first = result.feedback[0]
        if first.scope == "inline" and first.field_label:
            return [first.field_label]
        return analysis.labels_in_document_order()

    @staticmethod
    def _feedback_dicts(result) -> list[dict]:
        return [
            {"text": f.text, "scope": f.scope, "field": f.field_label}
            for f in result.feedback
        ]

    # --- the feedback loop ---

    def feedback_loop(self, analysis: FormAnalysis, now: _dt.datetime):
        """Generate, submit, and refine until success or the iteration cap.

        Returns (final constraints, passing assignment or None, analysis of
        the page the passing constraints were inferred from).
        """
        constraint_map = self.infer_initial_constraints(analysis, now)
        current = analysis
        feedback_map: dict[str, list[dict]] = {}
        for iteration in range(1, self.config.max_feedback_iterations + 1):
            if iteration > 1:
                constraint_map = self.infer_initial_constraints(
                    current, now, feedback_map
                )
            bindings = self.generate_values(current, constraint_map)
            result = self._run_submission(current, bindings)
            self._record(
                iteration=iteration,
                kind="initial_attempt" if iteration == 1 else "feedback_refinement",
                constraints=self._constraints_dict(constraint_map),
                assignment=bindings,
                outcome=result.outcome,
                feedback=self._feedback_dicts(result),
                input_subset=self._subset_for(current, result),
                redirected=result.redirected,
                after_url=result.after_url,
            )
            if result.outcome == "success":
                return constraint_map, bindings, current
            # fold the latest feedback into the next round of prompts
            feedback_map = {}
            for item in result.feedback:
                if item.scope == "inline" and item.field_label:
                    targets = [item.field_label]
                else:
                    targets = current.labels_in_document_order()
                for target in targets:
                    feedback_map.setdefault(target, []).append(
                        {"text": item.text, "prior_value": bindings.get(target)}
                    )
            if result.after is not None:
                try:
                    current = self.builder.analyze_tree(result.after)
                except Exception:
                    pass  # keep the previous page context
        return constraint_map, None, current

    # --- constraint validation by negation ---

    def validate_constraints(
        self,
        analysis: FormAnalysis,
        constraint_map: dict[str, ConstraintSet],
        passing: dict[str, str],
    ) -> None:
        """Negate one constraint at a time, regenerate only that field's
        value, and submit. Success means the constraint was not enforced by
        the form (a discrepancy worth keeping as a test); failure confirms
        it and records the feedback for assertions."""
        for label in analysis.labels_in_document_order():
            constraint_set = constraint_map[label]
            for position, c in enumerate(constraint_set.constraints):
                if not c.is_evaluable():
                    continue
                probed = tuple(
                    negate(existing) if i == position else existing
                    for i, existing in enumerate(constraint_set.constraints)
                )
                probe_set = ConstraintSet(field=label, constraints=probed)
                context_bindings = {k: v for k, v in passing.items() if k != label}
                probe_info = {
                    "field": label,
                    "constraint": {
                        "template": c.template,
                        "args": list(c.args),
                        "negated": c.negated,
                    },
                }
                try:
                    value = self._value_for(analysis, label, probe_set, context_bindings)
                except ValueGenerationFailed as exc:
                    self._record(
                        iteration=0,
                        kind="probe_skipped",
                        constraints={label: constraint_set_to_dict(probe_set)},
                        assignment={},
                        outcome="skipped",
                        feedback=[{"text": str(exc), "scope": "global", "field": None}],
                        input_subset=self._subset_for(
                            analysis, None, negate(c), label
                        ),
                        probe=probe_info,
                    )
                    continue
                assignment = dict(passing)
                assignment[label] = value
                result = self._run_submission(analysis, assignment)
                self._record(
                    iteration=0,
                    kind="discrepancy" if result.outcome == "success" else "validation_probe",
                    constraints={label: constraint_set_to_dict(probe_set)},
                    assignment=assignment,
                    outcome=result.outcome,
                    feedback=self._feedback_dicts(result),
                    input_subset=self._subset_for(analysis, result, negate(c), label),
                    redirected=result.redirected,
                    after_url=result.after_url,
                    probe=probe_info,
                )

    # --- full run ---

    def run(self, now: Optional[_dt.datetime] = None):
        now = now or _dt.datetime.now()
        state = self.executor.page()
        self._base_url = state.url
        analysis = self.builder.analyze_html(state.html)
        constraint_map, passing, final_analysis = self.feedback_loop(analysis, now)
        if passing is not None:
            self.validate_constraints(final_analysis, constraint_map, passing)
        return PipelineResult(
            records=self.records,
            constraints=constraint_map,
            passing=passing,
            analysis=final_analysis,
        )


@dataclass
class PipelineResult:
    records: list[RunRecord]
    constraints: dict[str, ConstraintSet]
    passing: Optional[dict[str, str]]
    analysis: FormAnalysis


# --- static baseline generator ---

STATIC_TYPE_VALUES: dict[str, tuple[str, ...]] = {
    "text": ("Sample", "", "x", "a" * 120, "two words", "0"),
    "search": ("Sample", "", "a" * 120),
    "number": ("1", "0", "-99999999", "99999999", ""),
    "date": ("2030-12-31", "", "not-a-date", "00/00"),
    "email": ("test@example.com", "", "plainaddress"),
    "tel": ("+1 555 0100", "", "abc"),
    "password": ("password", "", "x"),
    "textarea": ("Sample text", ""),
}


def run_static_baseline(executor, config: Optional[PipelineConfig] = None) -> list[RunRecord]:
    """Type-driven extreme values: one submission per (field, canned value),
    with every other field held at its type's nominal value."""
    config = config or PipelineConfig()
    builder = config.make_builder()
    keywords = config.make_keywords()
    state = executor.page()
    base_url = state.url
    analysis = builder.analyze_html(state.html)
    types = {
        analysis.field_labels[ref.node]: ref.input_type for ref in analysis.model.fields
    }
    labels = analysis.labels_in_document_order()
    nominal = {
        label: STATIC_TYPE_VALUES.get(types[label], STATIC_TYPE_VALUES["text"])[0]
        for label in labels
    }
    plans: list[tuple[list[str], dict[str, str]]] = [(labels, dict(nominal))]
    for label in labels:
        for value in STATIC_TYPE_VALUES.get(types[label], STATIC_TYPE_VALUES["text"]):
            assignment = dict(nominal)
            assignment[label] = value
            plans.append(([label], assignment))

    records: list[RunRecord] = []
    for subset, assignment in plans:
        executor.navigate(base_url)
        result = submit(executor, analysis.model, assignment, analysis.fill_targets)
        if result.after is None:
            fragments = all_text_fragments(parse_document(result.after_html))
        else:
            fragments = dom_diff(result.before, result.after)
        raw_feedback = extract_feedback(fragments, keywords)
        result.feedback = attach_feedback(builder, result, raw_feedback)
        classify_outcome(result)
        records.append(
            RunRecord(
                index=len(records),
                iteration=0,
                kind="static_probe",
                constraints={},
                assignment=assignment,
                outcome=result.outcome,
                feedback=[
                    {"text": f.text, "scope": f.scope, "field": f.field_label}
                    for f in result.feedback
                ],
                input_subset=list(subset),
                redirected=result.redirected,
                after_url=result.after_url,
            )
        )
    return records


# --- test plan emission ---

@dataclass(frozen=True)
class TestCase:
    test_id: str
    target: str
    assignment: dict[str, str]
    fills: tuple[tuple[str, str], ...]  # (fill target, value) in document order
    expected: dict
    provenance: int


def emit_tests(
    records: list[RunRecord],
    analysis: FormAnalysis,
    target: str,
    seed: int = 42,
) -> tuple[list[TestCase], dict]:
    """Distill records into a deduplicated four-step test plan.

    Dedup key is (input subset, expected feedback text), matching submission
    state identity.
    """
    if not records:
        raise ValueError("no records to emit tests from")
    tests: list[TestCase] = []
    seen: set[tuple] = set()
    for record in records:
        if record.outcome == "skipped":
            continue
        if record.outcome == "success":
            expected = {
                "state": "success",
                "redirected": record.redirected,
                "url": record.after_url,
            }
            key = (frozenset(record.input_subset), "__success__")
        else:
            if not record.feedback:
                continue
            first = record.feedback[0]
            expected = {
                "state": "failure",
                "feedback": first["text"],
                "scope": first["scope"],
                "field": first.get("field"),
            }
            key = (frozenset(record.input_subset), first["text"])
        if key in seen:
            continue
        seen.add(key)
        fills = tuple(
            (analysis.fill_targets[label], record.assignment.get(label, ""))
            for label in analysis.labels_in_document_order()
            if label in record.assignment
        )
        tests.append(
            TestCase(
                test_id=f"t{len(tests) + 1:03d}",
                target=target,
                assignment=dict(record.assignment),
                fills=fills,
                expected=expected,
                provenance=record.index,
            )
        )
    plan = {
        "version": 1,
        "target": target,
        "seed": seed,
        "keywords": list(FeedbackKeywords().keywords),
        "prompt_template_hashes": {
            "constraint": template_hash("constraint"),
            "value": template_hash("value"),
        },
        "tests": [
            {
                "id": t.test_id,
                "actions": [
                    {"action": "navigate", "target": t.target},
                    *(
                        {"action": "fill", "target": fill_target, "value": value}
                        for fill_target, value in t.fills
                    ),
                    {"action": "submit"},
                    {"action": "assert_state", "expected": t.expected},
                ],
                "assignment": t.assignment,
                "expected": t.expected,
                "provenance": t.provenance,
            }
            for t in tests
        ],
    }
    return tests, plan


def validate_plan(plan: dict) -> None:
    import jsonschema
    from importlib import resources

    from .errors import SchemaError

    schema = json.loads(
        resources.files("formgraph.schemas")
        .joinpath("test_plan.schema.json")
        .read_text("utf-8")
    )
    try:
        jsonschema.validate(plan, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"test plan schema violation: {exc.message}") from exc


def run_tests(plan: dict, executor, keywords: Optional[FeedbackKeywords] = None) -> list[dict]:
    """Replay each test's four actions and check the expected state."""
    validate_plan(plan)
    if keywords is None:
        plan_keywords = tuple(plan.get("keywords", ()))
        keywords = FeedbackKeywords(keywords=plan_keywords) if plan_keywords else FeedbackKeywords()
    results = []
    for test in plan["tests"]:
        executor.navigate(plan["target"])
        before_state = executor.page()
        before = parse_document(before_state.html)
        for action in test["actions"]:
            if action["action"] == "fill":
                executor.fill(action["target"], action["value"])
        executor.submit()
        after_state = executor.page()
        redirected = after_state.url != before_state.url
        if redirected:
            fragments = all_text_fragments(parse_document(after_state.html))
        else:
            fragments = dom_diff(before, parse_document(after_state.html))
        feedback = extract_feedback(fragments, keywords)
        outcome = "failure" if feedback else "success"
        expected = test["expected"]
        if expected["state"] == "success":
            ok = outcome == "success"
            if ok and expected.get("redirected"):
                ok = redirected and after_state.url == expected["url"]
            detail = "" if ok else f"expected success, got {outcome or 'failure'}"
        else:
            texts = [f.text for f in feedback]
            ok = expected["feedback"] in texts
            detail = "" if ok else f"expected feedback {expected['feedback']!r}, got {texts}"
        results.append({"id": test["id"], "passed": ok, "detail": detail})
    return results


# --- coverage reporting ---

def coverage_report(
    records: list[RunRecord], truth_spec: Optional[SimulatedFormSpec]
) -> dict:
    """Coverage of ground-truth submission states, plus the passing flag.

    Raises TruthUnavailable without a simulator spec; callers degrade to an
    observed-state listing.
    """
    observed = observed_from_records(records)
    if truth_spec is None:
        raise TruthUnavailable("no ground truth spec for this target")
    truth = enumerate_fss(truth_spec)
    coverage = fss_coverage(truth, observed)
    return {
        "covered": sum(1 for _, hit in coverage.rows if hit),
        "total": coverage.total,
        "ratio": coverage.ratio,
        "passing": passing_check(observed),
        "rows": [
            {
                "kind": record.kind,
                "fields": sorted(record.input_subset),
                "feedback": record.feedback,
                "covered": hit,
            }
            for record, hit in coverage.rows
        ],
    }


def observed_listing(records: list[RunRecord]) -> list[dict]:
    """Fallback report for live targets: the distinct observed states."""
    seen = set()
    listing = []
    for obs in observed_from_records(records):
        key = ("success" if obs.success else tuple(sorted(obs.feedback_texts)))
        if key in seen:
            continue
        seen.add(key)
        listing.append(
            {
                "outcome": "success" if obs.success else "failure",
                "feedback": sorted(obs.feedback_texts),
            }
        )
    return listing


def render_coverage_table(report: dict) -> str:
    lines = [
        f"covered {report['covered']}/{report['total']} "
        f"({report['ratio']:.0%}) passing={str(report['passing']).lower()}",
    ]
    for row in report["rows"]:
        mark = "COVERED" if row["covered"] else "MISSED "
        lines.append(
            f"  [{mark}] {row['kind']:7s} {{{', '.join(row['fields'])}}} {row['feedback']}"
        )
    return "\n".join(lines)
