from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<s>", "</s>")
CHANNELS = ("ast", "code", "summary")
DEFAULT_CAPS = {"ast": 10_000, "code": 30_000, "summary": 50_000}


class Vocabulary:
    """Token <-> id map with four reserved ids in front."""

    def __init__(self, channel: str, tokens: Iterable[str] = ()):
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}")
        self.channel = channel
        self.itos: list[str] = list(RESERVED)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for tok in tokens:
            if tok not in self.stoi:
                self.stoi[tok] = len(self.itos)
                self.itos.append(tok)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    @property
    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order."""
        return self.itos[len(RESERVED):]

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.stoi.get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.itos[i] for i in ids]

    def to_json(self) -> dict:
        return {"channel": self.channel, "tokens": self.tokens}

    @classmethod
    def from_json(cls, obj: dict) -> Vocabulary:
        return cls(obj["channel"], obj["tokens"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Vocabulary:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.channel == other.channel and self.itos == other.itos


def build_vocab(sequences: Iterable[Iterable[str]], channel: str, cap: int | None = None) -> Vocabulary:
    """Keep the ``cap`` most frequent tokens; ties go to the lexicographically smaller."""
    if cap is None:
        cap = DEFAULT_CAPS[channel]
    if cap < 1:
        raise ValueError("vocabulary cap must be positive")
    counts: Counter[str] = Counter()
    for seq in sequences:
        counts.update(seq)
    for r in RESERVED:
        counts.pop(r, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(channel, [tok for tok, _ in ranked[:cap]])
