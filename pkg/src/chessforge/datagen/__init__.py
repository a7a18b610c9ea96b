"""Training-data generators for the six dataset families."""

from .best import gen_best_line, gen_best_move
from .fba import KINDS as FBA_KINDS
from .fba import Question, answer_histogram, balance_fba, gen_fba
from .guided import GuidedCheck, RejectReason, gen_guided_prompt, make_guided_sample, verify_guided_output
from .rejection import Decision, Thresholds, make_rejection_sample, rebalance_accepted, rejection_filter
from .samples import Sample, SampleTask, dump_jsonl, iter_jsonl, load_samples
from .teacher import (
    TeacherConfig,
    TeacherError,
    TeacherMalformedResponse,
    TeacherStatusError,
    TeacherTimeout,
    teacher_complete,
)
from .vabp import (
    PromptBank,
    SearchTree,
    TreeNode,
    VabpParams,
    brute_force_minimax,
    build_vabp_tree,
    check_narration,
    gen_vabp,
    softmax_order,
    verbalize_tree,
)

__all__ = [name for name in dir() if not name.startswith("_")]
