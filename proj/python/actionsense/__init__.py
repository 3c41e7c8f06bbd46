"""Multimodal procedural commonsense toolkit."""

import json

from ._core import (
    BATCH_SIZE,
    LEARNING_RATE,
    MAX_SEQUENCE_LENGTH,
    MAX_VISUAL_FEATURES,
    MIN_COUNT,
    NUCLEUS_P,
    POOL_SIZE,
    ActionSenseError,
    CommandResult,
    acc_at_50,
    bleu2,
    build_prompt,
    cider,
    cohen_kappa,
    meteor,
    modality_labels,
    normalize_object_tags,
    novelty,
    perplexity,
    stats,
    uniqueness,
)
from . import _core


def error_code(exc):
    """Code name of an ActionSenseError, e.g. "CorpusTooSmall"."""
    return str(exc).split(":", 1)[0]


def build_triplets(pairs):
    """Adjoining triplets from (verb, ingredient, video_id, segment) tuples."""
    return json.loads(_core._triplets_json([tuple(p) for p in pairs]))


def run(command, config, out_dir=None, resume=False, modalities_only=False):
    """Runs a pipeline command ("build-dataset", "generate", "evaluate", "ablate")."""
    return _core._run(command, str(config), None if out_dir is None else str(out_dir),
                      resume, modalities_only)


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


__all__ = [name for name in dir() if not name.startswith("_")]
