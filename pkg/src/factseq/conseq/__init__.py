"""Contrastive fine-tuning of summarizers toward high-reward summaries."""
from factseq.conseq.config import ConseqConfig
from factseq.conseq.losses import contrastive_loss
from factseq.conseq.pools import (
    ContrastivePair,
    ScoredSummary,
    TrainingExample,
    build_positive_pool,
    intersect_pools,
    read_pool_file,
    sample_negative_pool,
    training_examples,
    write_pool_file,
)
from factseq.conseq.reinforce import reinforce_step, reinforce_train
from factseq.conseq.rewards import (
    RewardFunction,
    RewardNormalizer,
    custom_reward,
    normalize_rewards,
    quals_f1_reward,
    quals_reward,
    rouge_sum_reward,
)
from factseq.conseq.train import conseq_train, conseq_train_online

__all__ = [
    "ConseqConfig", "ContrastivePair", "RewardFunction", "RewardNormalizer", "ScoredSummary",
    "TrainingExample", "build_positive_pool", "conseq_train", "conseq_train_online",
    "contrastive_loss", "custom_reward", "intersect_pools", "normalize_rewards", "quals_f1_reward",
    "quals_reward", "read_pool_file", "reinforce_step", "reinforce_train", "rouge_sum_reward",
    "sample_negative_pool", "training_examples", "write_pool_file",
]
