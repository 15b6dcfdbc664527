"""Evaluation harness: scored episodes, statistics, judgments, ablations."""

from .ablation import (
    AblationConfig,
    Condition,
    EvalReport,
    render_summary,
    run_ablation_suite,
    task_scores,
)
from .charts import grouped_bars_svg, write_report_charts
from .episodes import (
    AgentRef,
    expert_agent_ref,
    logprob_eval,
    policy_agent_ref,
    run_episode,
    static_probe,
    switch_test,
)
from .evaluators import EpisodeTracker, compile_task_evaluator, ocr_evaluate
from .judgments import (
    IngestionError,
    JudgmentRecord,
    aggregate_judgments,
    ingest_judgment_file,
)
from .stats import (
    normalize_vs_specialist,
    permutation_test,
    rate_bounds,
    success_rate,
)

__all__ = [
    "AblationConfig", "AgentRef", "Condition", "EpisodeTracker", "EvalReport",
    "IngestionError", "JudgmentRecord", "aggregate_judgments",
    "compile_task_evaluator", "expert_agent_ref", "grouped_bars_svg",
    "ingest_judgment_file", "logprob_eval", "normalize_vs_specialist",
    "ocr_evaluate", "permutation_test", "policy_agent_ref", "rate_bounds", "render_summary",
    "run_ablation_suite", "run_episode", "static_probe", "success_rate",
    "switch_test", "task_scores", "write_report_charts",
]
