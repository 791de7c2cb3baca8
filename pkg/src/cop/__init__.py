"""Concise and organized perception for LLM reasoning.

Reconstructs a premise context in three stages — capture locally-related
premises into a graph, grow a question-anchored mind map, linearize it
depth-first — then prompts a completion backend with the concise, ordered
result. Ships a benchmark harness (synthetic logic instances, DI-GSM
construction, accuracy/efficiency reports) and sentence-level
information-flow metrics.
"""

from .bench import BenchmarkReport, kendall_tau, perception_metrics, run_benchmark
from .capture import Fragment, integrate_fragments, link_logical, link_semantic
from .chaining import Closure, forward_chain_closure
from .datasets import build_digsm, generate_synthetic, load_dataset
from .flow import FlowMetrics, SaliencyRecord, compute_flow_metrics, normalize_step, summarize_groups
from .logicform import LogicRule, LogicTriple, parse_unified_logic
from .mindmap import MindMap, SubMindMap, build_mindmap, find_anchor_fragments, segment_submaps
from .model import GoldAnnotation, Premise, PremiseGraph, Question, ReasoningContext, RelationEdge
from .pipeline import PipelineConfig, ReasoningTrace, answer_with_cop
from .reconstruct import ReconstructedContext, Verdict, extract_answer, gold_reconstruct, reconstruct_context
from .relations import parse_relation_lines
from .segment import segment_context, split_sentences

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "Closure",
    "FlowMetrics",
    "Fragment",
    "GoldAnnotation",
    "LogicRule",
    "LogicTriple",
    "MindMap",
    "PipelineConfig",
    "Premise",
    "PremiseGraph",
    "Question",
    "ReasoningContext",
    "ReasoningTrace",
    "ReconstructedContext",
    "RelationEdge",
    "SaliencyRecord",
    "SubMindMap",
    "Verdict",
    "answer_with_cop",
    "build_digsm",
    "build_mindmap",
    "compute_flow_metrics",
    "extract_answer",
    "find_anchor_fragments",
    "forward_chain_closure",
    "generate_synthetic",
    "gold_reconstruct",
    "integrate_fragments",
    "kendall_tau",
    "link_logical",
    "link_semantic",
    "load_dataset",
    "normalize_step",
    "parse_relation_lines",
    "parse_unified_logic",
    "perception_metrics",
    "reconstruct_context",
    "run_benchmark",
    "segment_context",
    "segment_submaps",
    "split_sentences",
    "summarize_groups",
]
