"""Evaluation tasks, answer extraction and rewards."""

from .scoring import (
    GAMMA,
    ParsedAnswer,
    ScoreReport,
    centipawn_delta_reward,
    extract_final_answer,
    iou,
    is_trivial_move,
    normalized_rank,
    score_choice,
    score_legal_moves,
    score_ood_mate,
    score_predict_move,
    score_task,
    summarize_reports,
)
from .tasks import (
    CHOICE_KINDS,
    DEFAULT_QUALITY_THRESHOLD_CP,
    EvalTask,
    TaskError,
    TaskInvariantError,
    TaskKind,
    UnsatisfiableTask,
    make_choice_task,
    make_legal_moves_task,
    make_ood_mate_task,
    make_predict_move_task,
    mating_moves,
    task_prompt,
)

__all__ = [name for name in dir() if not name.startswith("_")]
