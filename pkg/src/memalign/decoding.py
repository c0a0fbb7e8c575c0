"""Grammar- and subset-constrained greedy decoding.

At every step a dynamic mask permits only tokens that (a) keep the stream
inside the linearization grammar and (b) replay node/edge lines that
exist verbatim in the full memory graph, so every decoded sequence
delinearizes into a verified evidence subgraph by construction.
"""
from __future__ import annotations

import math

import numpy as np

from .graphs import EvidenceSubgraph, MemoryGraph
from .retriever import RetrieverModel
from .tokenization import (
    GraphTokenSequence,
    delinearize,
    edge_line_tokens,
    linearize,
    node_line_tokens,
)
from .vocab import (
    BOS,
    EOS,
    TOK_ARROW,
    TOK_COLON,
    TOK_CONFIDENCE,
    TOK_EDGES,
    TOK_EOL,
    TOK_HEADER,
    TOK_NODES,
    Vocabulary,
)


class DecodeError(RuntimeError):
    pass


class ConstraintEngine:
    """Tracks the grammar state and the set of legal next tokens for one
    decode against a fixed full graph."""

    def __init__(self, full_graph: MemoryGraph, vocab: Vocabulary):
        self.vocab = vocab
        # Token lines exclude the trailing EOL; it is handled by position.
        self.node_lines: dict[int, list[int]] = {}
        for node in full_graph.nodes:
            toks = node_line_tokens(node, vocab)[:-1]
            self.node_lines[toks[0]] = toks
        self.edge_lines: list[list[int]] = [
            edge_line_tokens(edge, vocab)[:-1] for edge in full_graph.edges
        ]
        self.confidence_ids = self._confidence_token_ids(vocab)

        self.phase = "header"
        self.emitted_nodes: set[int] = set()
        self.used_edges: set[int] = set()
        self.line: list[int] = []
        self.edge_candidates: list[int] = []
        self.done = False

    @staticmethod
    def _confidence_token_ids(vocab: Vocabulary) -> list[int]:
        ids = []
        for i, word in enumerate(vocab.words):
            try:
                value = float(word)
            except ValueError:
                continue
            if math.isfinite(value) and 0.0 <= value <= 1.0:
                ids.append(len(vocab) - len(vocab.words) + i)
        return ids

    def _open_edges(self) -> list[int]:
        """Indices of unused full-graph edges whose endpoints are emitted."""
        open_idx = []
        for i, line in enumerate(self.edge_lines):
            if i in self.used_edges:
                continue
            source, target = line[0], line[2]
            if source in self.emitted_nodes and target in self.emitted_nodes:
                open_idx.append(i)
        return open_idx

    def allowed_tokens(self) -> list[int]:
        phase = self.phase
        if phase == "header":
            return [TOK_HEADER]
        if phase == "nodes-marker":
            return [TOK_NODES]
        if phase == "nodes-eol":
            return [TOK_EOL]
        if phase == "node-line-start":
            allowed = [
                tok for tok in self.node_lines if tok not in self.emitted_nodes
            ]
            allowed.append(TOK_EDGES)
            return allowed
        if phase == "node-line":
            template = self.node_lines[self.line[0]]
            pos = len(self.line)
            return [template[pos]] if pos < len(template) else [TOK_EOL]
        if phase == "edges-eol":
            return [TOK_EOL]
        if phase == "edge-line-start":
            sources = {self.edge_lines[i][0] for i in self._open_edges()}
            return sorted(sources) + [TOK_CONFIDENCE]
        if phase == "edge-line":
            pos = len(self.line)
            allowed: set[int] = set()
            for i in self.edge_candidates:
                template = self.edge_lines[i]
                if pos < len(template):
                    allowed.add(template[pos])
                else:
                    allowed.add(TOK_EOL)
            return sorted(allowed)
        if phase == "confidence-eol":
            return [TOK_EOL]
        if phase == "confidence-value":
            return list(self.confidence_ids)
        if phase == "confidence-value-eol":
            return [TOK_EOL]
        if phase == "eos":
            return [EOS]
        raise DecodeError(f"no legal continuation from phase {phase!r}")

    def advance(self, token: int) -> None:
        if token not in self.allowed_tokens():
            raise DecodeError(
                f"token {self.vocab.token(token)!r} not legal in phase {self.phase!r}"
            )
        phase = self.phase
        if phase == "header":
            self.phase = "nodes-marker"
        elif phase == "nodes-marker":
            self.phase = "nodes-eol"
        elif phase == "nodes-eol":
            self.phase = "node-line-start"
        elif phase == "node-line-start":
            if token == TOK_EDGES:
                self.phase = "edges-eol"
            else:
                self.line = [token]
                self.phase = "node-line"
        elif phase == "node-line":
            if token == TOK_EOL:
                self.emitted_nodes.add(self.line[0])
                self.line = []
                self.phase = "node-line-start"
            else:
                self.line.append(token)
        elif phase == "edges-eol":
            self.phase = "edge-line-start"
        elif phase == "edge-line-start":
            if token == TOK_CONFIDENCE:
                self.phase = "confidence-eol"
            else:
                self.line = [token]
                self.edge_candidates = [
                    i for i in self._open_edges() if self.edge_lines[i][0] == token
                ]
                self.phase = "edge-line"
        elif phase == "edge-line":
            if token == TOK_EOL:
                completed = [
                    i
                    for i in self.edge_candidates
                    if len(self.edge_lines[i]) == len(self.line)
                ]
                self.used_edges.add(completed[0])
                self.line = []
                self.edge_candidates = []
                self.phase = "edge-line-start"
            else:
                self.line.append(token)
                self.edge_candidates = [
                    i
                    for i in self.edge_candidates
                    if len(self.edge_lines[i]) > len(self.line) - 1
                    and self.edge_lines[i][len(self.line) - 1] == token
                ]
        elif phase == "confidence-eol":
            self.phase = "confidence-value"
        elif phase == "confidence-value":
            self.phase = "confidence-value-eol"
        elif phase == "confidence-value-eol":
            self.phase = "eos"
        elif phase == "eos":
            self.done = True
        else:
            raise DecodeError(f"cannot advance from phase {phase!r}")


def default_max_len(full_graph: MemoryGraph, vocab: Vocabulary) -> int:
    """Token budget sufficient to emit the whole full graph as evidence.

    The +4 covers the confidence section; the +8 is slack.
    """
    return len(linearize(full_graph, vocab)) + 4 + 8


def generate_subgraph(
    model: RetrieverModel,
    full_graph: MemoryGraph,
    q: np.ndarray,
    h: np.ndarray,
    vocab: Vocabulary,
    max_len: int | None = None,
) -> EvidenceSubgraph:
    """Greedy constrained decoding of an evidence subgraph.

    The output always passes subset verification against ``full_graph``.
    Raises :class:`DecodeError` when the grammar dead-ends or ``max_len``
    is exhausted before EOS.
    """
    if max_len is None:
        max_len = default_max_len(full_graph, vocab)
    engine = ConstraintEngine(full_graph, vocab)
    if not engine.confidence_ids:
        raise DecodeError("vocabulary has no confidence value token")
    state = model.init_state(q, h)
    tokens = [BOS]
    while not engine.done:
        if len(tokens) >= max_len:
            raise DecodeError(
                f"max_len {max_len} exhausted without EOS "
                f"(phase {engine.phase!r})"
            )
        allowed = engine.allowed_tokens()
        if not allowed:
            raise DecodeError(f"grammar dead end in phase {engine.phase!r}")
        logits, state = model.cell(tokens[-1], state)
        masked = np.full(model.vocab_size, -np.inf)
        masked[allowed] = logits[allowed]
        token = int(np.argmax(masked))
        engine.advance(token)
        tokens.append(token)
    return delinearize(GraphTokenSequence(tuple(tokens)), vocab)
