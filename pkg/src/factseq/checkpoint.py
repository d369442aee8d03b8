"""Model checkpoints: ``torch.save`` dicts tagged with a backend kind, stored as ``<run>/<step>.ckpt``."""
from __future__ import annotations

from pathlib import Path

import torch

from factseq.errors import FormatError
from factseq.seqmodel import ExtractiveQAGen, SeqModel, Vocabulary
from factseq.seqmodel.neural import TinySeq2Seq

KINDS = ("tiny-seq2seq", "extractive-qagen")


def checkpoint_path(run: str | Path, step: int | str) -> Path:
    return Path(run) / f"{step}.ckpt"


def save_model(model: SeqModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = {"vocab": list(model.vocab.tokens), "config": model.config()}
    if isinstance(model, TinySeq2Seq):
        # a plain dict drops the OrderedDict metadata that weights_only loading rejects
        blob.update(kind="tiny-seq2seq", state_dict=dict(model.state_dict()))
    elif isinstance(model, ExtractiveQAGen):
        blob["kind"] = "extractive-qagen"
    else:
        raise FormatError(f"no checkpoint format for {type(model).__name__}")
    torch.save(blob, path)
    return path


def load_model(path: str | Path) -> SeqModel:
    try:
        blob = torch.load(path, weights_only=True)
    except (FileNotFoundError, IsADirectoryError):
        raise
    except Exception as exc:
        raise FormatError(f"unreadable checkpoint {path}: {exc}") from None
    if not isinstance(blob, dict) or blob.get("kind") not in KINDS:
        raise FormatError(f"{path}: not a model checkpoint")
    vocab = Vocabulary.from_json({"tokens": blob["vocab"]})
    if blob["kind"] == "extractive-qagen":
        return ExtractiveQAGen(vocab, **blob["config"])
    model = TinySeq2Seq(vocab, **blob["config"])
    model.load_state_dict(blob["state_dict"])
    return model
