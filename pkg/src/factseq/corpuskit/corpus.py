"""JSONL corpus files: one ``{"id", "document", "summary"}`` object per line."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

from factseq.errors import FormatError


@dataclass(frozen=True)
class CorpusExample:
    id: str
    document: str
    summary: str

    def to_dict(self) -> dict:
        return asdict(self)


def parse_example(rec, line: int | None = None) -> CorpusExample:
    if not isinstance(rec, dict):
        raise FormatError("expected a JSON object", line)
    for key in ("id", "document", "summary"):
        if key not in rec:
            raise FormatError(f"missing key {key!r}", line)
        if not isinstance(rec[key], str):
            raise FormatError(f"key {key!r} must be a string", line)
    if not rec["document"].strip():
        raise FormatError("empty document", line)
    return CorpusExample(rec["id"], rec["document"], rec["summary"])


def read_corpus(path: str | Path) -> list[CorpusExample]:
    out, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", lineno) from None
            ex = parse_example(rec, lineno)
            if ex.id in seen:
                raise FormatError(f"duplicate id {ex.id!r}", lineno)
            seen.add(ex.id)
            out.append(ex)
    return out


def write_corpus(examples: Iterable[CorpusExample], path: str | Path) -> None:
    examples = list(examples)
    ids = [ex.id for ex in examples]
    if len(set(ids)) != len(ids):
        raise FormatError("duplicate ids in corpus")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_dict(), ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", lineno) from None
    return out


def write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
