"""QUALS factual-consistency scoring and CONSEQ contrastive training on a toy seq2seq stack."""

__version__ = "0.1.0"
