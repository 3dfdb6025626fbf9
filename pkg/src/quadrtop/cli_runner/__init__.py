"""Input parsing, orchestration, corpus and the sampling oracle."""

from .corpus import corpus
from .oracle import oracle_b0
from .problem import ProblemSpec, SchemaError, parse_problem, quadric_problem
from .runner import RunReport, run_analyze

__all__ = ["ProblemSpec", "RunReport", "SchemaError", "corpus", "oracle_b0", "parse_problem", "quadric_problem", "run_analyze"]
