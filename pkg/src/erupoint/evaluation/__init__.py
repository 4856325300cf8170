from erupoint.evaluation.benchmark import (
    benchmark_table,
    summarize_benchmark,
    target_isolated,
)
from erupoint.evaluation.metrics import (
    EvalReport,
    classify_sample,
    evaluate,
    evaluation_table,
)

__all__ = (
    "EvalReport",
    "benchmark_table",
    "classify_sample",
    "evaluate",
    "evaluation_table",
    "summarize_benchmark",
    "target_isolated",
)
