"""Token vocabulary over the graph-linearization surface.

Ids 0-9 are reserved: sequence sentinels, UNK, and the seven structural
markers of the evidence-subgraph format.  Word tokens are whitespace-split
surface words of node ids, descriptions, relations, and confidence values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

BOS = 0
EOS = 1
UNK = 2
TOK_HEADER = 3
TOK_NODES = 4
TOK_EDGES = 5
TOK_CONFIDENCE = 6
TOK_COLON = 7
TOK_ARROW = 8
TOK_EOL = 9

RESERVED_TOKENS: tuple[str, ...] = (
    "<bos>",
    "<eos>",
    "<unk>",
    "[EVIDENCE_SUBGRAPH]",
    "<NODES>",
    "<EDGES>",
    "[CONFIDENCE]",
    ":",
    "->",
    "<eol>",
)


class VocabularyError(ValueError):
    pass


@dataclass
class Vocabulary:
    """Bijective token table with reserved structural ids.

    ``mode`` is ``"open"`` (out-of-vocabulary words map to UNK) or
    ``"closed"`` (out-of-vocabulary words are errors).
    """

    words: tuple[str, ...] = ()
    mode: str = "closed"
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("open", "closed"):
            raise VocabularyError(f"unknown vocabulary mode {self.mode!r}")
        self.words = tuple(self.words)
        self._ids = {tok: i for i, tok in enumerate(RESERVED_TOKENS)}
        for word in self.words:
            if word in self._ids:
                raise VocabularyError(f"duplicate or reserved word {word!r}")
            self._ids[word] = len(self._ids)

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def id_of(self, word: str) -> int:
        wid = self._ids.get(word)
        if wid is None:
            if self.mode == "open":
                return UNK
            raise VocabularyError(f"out-of-vocabulary word {word!r}")
        return wid

    def token(self, token_id: int) -> str:
        if token_id < len(RESERVED_TOKENS):
            return RESERVED_TOKENS[token_id]
        idx = token_id - len(RESERVED_TOKENS)
        if idx >= len(self.words):
            raise VocabularyError(f"unknown token id {token_id}")
        return self.words[idx]

    def save(self, path: str | Path) -> None:
        """Write the token table as JSON lines (one {token, id} per line)."""
        lines = [json.dumps({"token": "<mode>", "id": self.mode})]
        for tok, i in self._ids.items():
            lines.append(json.dumps({"token": tok, "id": i}))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise VocabularyError("empty vocabulary file")
        head = json.loads(lines[0])
        if head.get("token") != "<mode>":
            raise VocabularyError("missing vocabulary mode record")
        entries = [json.loads(line) for line in lines[1:] if line.strip()]
        entries.sort(key=lambda e: e["id"])
        words = []
        for i, entry in enumerate(entries):
            if entry["id"] != i:
                raise VocabularyError("non-contiguous vocabulary ids")
            if i < len(RESERVED_TOKENS):
                if entry["token"] != RESERVED_TOKENS[i]:
                    raise VocabularyError("reserved token mismatch")
            else:
                words.append(entry["token"])
        return cls(tuple(words), mode=head["id"])


def build_vocabulary(surface_words: Iterable[str], mode: str = "closed") -> Vocabulary:
    """Build a vocabulary from surface words in first-seen order.

    Words equal to a reserved token string are dropped (they already have
    a structural id).
    """
    words: list[str] = []
    seen = set(RESERVED_TOKENS)
    for word in surface_words:
        if word not in seen:
            seen.add(word)
            words.append(word)
    return Vocabulary(tuple(words), mode=mode)
