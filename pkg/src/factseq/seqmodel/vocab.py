"""Vocabulary and token sequences for the whitespace/id toy tokenizer."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from factseq.errors import InvalidInput

BOS = "<s>"
EOS = "</s>"
SEP = "<a>"
PAD = "<pad>"
SPECIALS = (BOS, EOS, SEP, PAD)


class Vocabulary:
    """Ordered token list with four reserved special ids.

    Special tokens always occupy ids 0-3 (bos, eos, answer separator, pad).
    Unknown words are rejected rather than mapped to an unk id so that
    toy experiments stay exact.
    """

    def __init__(self, words: Iterable[str]):
        tokens = list(SPECIALS)
        for w in words:
            if w in SPECIALS:
                continue
            tokens.append(w)
        if len(set(tokens)) != len(tokens):
            raise InvalidInput("vocabulary tokens must be unique")
        if len(tokens) < 5:
            raise InvalidInput("vocabulary needs at least one non-special token")
        self.tokens = tokens
        self._index = {t: i for i, t in enumerate(tokens)}
        self.bos, self.eos, self.sep, self.pad = 0, 1, 2, 3

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __hash__(self):
        return hash(tuple(self.tokens))

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"

    @property
    def specials(self) -> frozenset[int]:
        return frozenset((self.bos, self.eos, self.sep, self.pad))

    @property
    def words(self) -> list[str]:
        return self.tokens[len(SPECIALS):]

    def id(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise InvalidInput(f"token {token!r} not in vocabulary") from None

    def encode(self, text: str) -> "TokenSequence":
        ids = [self.id(t) for t in text.split()]
        return TokenSequence(ids, text)

    def decode(self, ids: Iterable[int], skip_special: bool = True) -> str:
        out = []
        for i in ids:
            self.check_id(i)
            if skip_special and i in (self.bos, self.eos, self.pad):
                continue
            out.append(self.tokens[i])
        return " ".join(out)

    def check_id(self, i: int) -> None:
        if not (0 <= int(i) < len(self.tokens)):
            raise InvalidInput(f"token id {i} out of vocabulary (size {len(self)})")

    def to_json(self) -> str:
        return json.dumps({"tokens": self.tokens})

    @classmethod
    def from_json(cls, data: str | dict) -> "Vocabulary":
        if isinstance(data, str):
            data = json.loads(data)
        tokens = data["tokens"]
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise InvalidInput("serialized vocabulary must start with the special tokens")
        return cls(tokens[len(SPECIALS):])


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    text: str = field(default="", compare=False)

    def __init__(self, ids: Sequence[int], text: str = ""):
        object.__setattr__(self, "ids", tuple(int(i) for i in ids))
        object.__setattr__(self, "text", text)

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def validate(self, vocab: Vocabulary) -> None:
        """Raise InvalidInput on out-of-range ids or interior padding."""
        for i in self.ids:
            vocab.check_id(i)
        stripped = self.strip_padding(vocab)
        if vocab.pad in stripped.ids:
            raise InvalidInput("padding id inside sequence")

    def strip_padding(self, vocab: Vocabulary) -> "TokenSequence":
        ids = list(self.ids)
        while ids and ids[-1] == vocab.pad:
            ids.pop()
        return TokenSequence(ids, self.text)
