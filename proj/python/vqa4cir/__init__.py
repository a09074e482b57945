from ._vqa4cir import (
    Error,
    caption_wise_loss,
    caption_wise_loss_gradient,
    cirr_composite_average,
    consistency_score,
    evaluate_json,
    lint,
    parse_qa,
    question_wise_loss,
    rank_penalty,
    rerank,
    sweep_csv,
)

import json as _json


def evaluate(run_path, truth_path, subset=False):
    return _json.loads(evaluate_json(str(run_path), str(truth_path), subset))


__version__ = "0.1.0"
