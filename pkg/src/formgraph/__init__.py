"""formgraph: graph-based web form analysis and test generation.

Parses a form page into a relation graph over its inputs and texts, infers
per-field constraints through a feedback loop against a pluggable
completion backend, validates them by negation against the form, and emits
an executable test plan scored against a built-in form simulator.
"""

from .analysis import FormAnalysis, FormGraphBuilder
from .constraints import (
    Constraint,
    ConstraintSet,
    catalog,
    evaluate,
    negate,
    parse_constraints,
    serialize,
)
from .dom import DomTree, ElementKind, FormModel, classify_nodes, extract_form_model, parse_document
from .embedding import EmbeddingSpace, build_embedding_space, cosine_sim
from .ferg import Ferg, FergEdge, PruningParams, query_context
from .node2vec import KERNEL_BACKEND, Node2VecParams, structural_embed
from .pipeline import FormTestPipeline, PipelineConfig, emit_tests, run_tests
from .simulator import (
    SimulatedFormSpec,
    enumerate_fss,
    fss_coverage,
    handle_submission,
    load_form_spec,
    passing_check,
)

__version__ = "0.1.0"
