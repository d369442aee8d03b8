from factseq.seqmodel.base import ScoredSequence, SeqModel, check_distribution, score_sequence, token_logprobs
from factseq.seqmodel.decoding import GenerationConfig, generate, greedy_decode
from factseq.seqmodel.toy import (
    DeterministicModel,
    ExtractiveQAGen,
    RandomTableModel,
    TableModel,
    UniformModel,
)
from factseq.seqmodel.vocab import TokenSequence, Vocabulary

__all__ = [
    "DeterministicModel",
    "ExtractiveQAGen",
    "GenerationConfig",
    "RandomTableModel",
    "ScoredSequence",
    "SeqModel",
    "TableModel",
    "TokenSequence",
    "UniformModel",
    "Vocabulary",
    "check_distribution",
    "generate",
    "greedy_decode",
    "score_sequence",
    "token_logprobs",
]
