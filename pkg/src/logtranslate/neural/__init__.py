"""Character-level sequence-to-sequence log translators."""

from .cells import GRUCell, LSTMCell, cell_step
from .checkpoint import Checkpoint
from .decode import (
    beam_search,
    sequence_logprob,
    translate_batch,
    translate_beam,
    translate_greedy,
    unk_fraction,
)
from .model import ARCHS, ModelConfig, forward_backward, init_params, make_batch
from .optim import Adam, OptimizerConfig
from .training import EpochStats, TrainingDiverged, train, write_history
from .vocab import CharVocab, build_vocab

__all__ = [
    "ARCHS", "Adam", "CharVocab", "Checkpoint", "EpochStats", "GRUCell", "LSTMCell",
    "ModelConfig", "OptimizerConfig", "TrainingDiverged", "beam_search", "build_vocab",
    "cell_step", "forward_backward", "init_params", "make_batch", "sequence_logprob",
    "train", "translate_batch", "translate_beam", "translate_greedy", "unk_fraction",
    "write_history",
]
