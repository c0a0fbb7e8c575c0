"""JSONL corpora and the deterministic synthetic instance generator.

Synthetic instances are built around an evidence chain: the full graph
contains a chain of gold nodes (N1 -> N2 -> ...) plus distractor nodes
and distractor edges confined to the distractor set, so the subgraph
induced on the gold nodes is exactly the chain.  The gold answer is a
noun unique within the instance, placed in the description of one chain
node.  Content vectors are split into segment blocks; each chain
position contributes a fixed signature pattern to the block of the
segment that covers it, which is what makes partial-context (masked)
retrieval learnable.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphs import (
    Edge,
    EvidenceSubgraph,
    GraphFormatError,
    MemoryGraph,
    Node,
    emit,
    emit_evidence,
    parse_evidence,
    parse_full_graph,
    verify_subset,
)
from .seeding import component_rng, fnv1a64
from .tokenization import graph_surface_words
from .vocab import Vocabulary, build_vocabulary
from .unified import InstanceContent

ADJECTIVES = (
    "amber", "ancient", "brisk", "calm", "coastal", "crimson", "dusty",
    "eager", "faded", "gentle", "gilded", "hollow", "iron", "jagged",
    "lunar", "marble", "misty", "narrow", "oaken", "pale", "quiet",
    "rapid", "rustic", "silent", "solar", "sturdy", "timber", "vivid",
)

NOUNS = (
    "anchor", "archive", "basin", "beacon", "bridge", "canal", "canyon",
    "castle", "cavern", "chapel", "cistern", "citadel", "compass", "crater",
    "delta", "engine", "estuary", "forge", "fortress", "garden", "glacier",
    "granary", "harbor", "hearth", "island", "jetty", "keep", "lagoon",
    "lantern", "lighthouse", "meadow", "mill", "monument", "obelisk",
    "orchard", "plateau", "quarry", "reef", "reservoir", "ridge", "spire",
    "steeple", "summit", "terrace", "tower", "tunnel", "vault", "viaduct",
)

RELATIONS = (
    "anchors", "connects", "feeds", "guards", "overlooks", "powers",
    "shelters", "supports",
)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusInstance:
    id: str
    query: str
    gold_answer: str
    full_graph_text: str
    gold_subgraph_text: str
    content_vector: tuple[float, ...]
    segment_count: int

    def full_graph(self) -> MemoryGraph:
        return parse_full_graph(self.full_graph_text)

    def gold_subgraph(self) -> EvidenceSubgraph:
        return parse_evidence(self.gold_subgraph_text)

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "query": self.query,
                "gold_answer": self.gold_answer,
                "full_graph_text": self.full_graph_text,
                "gold_subgraph_text": self.gold_subgraph_text,
                "content_vector": list(self.content_vector),
                "segment_count": self.segment_count,
            },
            sort_keys=True,
        )


REQUIRED_FIELDS = (
    "id",
    "query",
    "gold_answer",
    "full_graph_text",
    "gold_subgraph_text",
    "segment_count",
)


def _default_content_vector(instance_id: str, d_c: int) -> tuple[float, ...]:
    rng = np.random.default_rng(fnv1a64(f"content:{instance_id}".encode()))
    return tuple((0.5 * rng.standard_normal(d_c)).tolist())


def corpus_to_jsonl(instances: list[CorpusInstance]) -> str:
    return "\n".join(inst.to_json() for inst in instances) + "\n"


def save_corpus(instances: list[CorpusInstance], path: str | Path) -> None:
    Path(path).write_text(corpus_to_jsonl(instances), encoding="utf-8")


def load_corpus(path: str | Path, d_c: int = 64) -> list[CorpusInstance]:
    """Load and fully validate a JSONL corpus.

    Every instance must parse, have unique ids, and pass subset
    verification; no invalid instance ever reaches training.
    """
    text = Path(path).read_text(encoding="utf-8")
    instances: list[CorpusInstance] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise CorpusError(f"line {lineno}: expected a JSON object")
        for fieldname in REQUIRED_FIELDS:
            if fieldname not in record:
                raise CorpusError(f"line {lineno}: missing field {fieldname}")
        instance_id = record["id"]
        if instance_id in seen_ids:
            raise CorpusError(f"line {lineno}: duplicate id {instance_id!r}")
        seen_ids.add(instance_id)
        content = record.get("content_vector")
        if content is None:
            content = _default_content_vector(instance_id, d_c)
        instance = CorpusInstance(
            id=instance_id,
            query=record["query"],
            gold_answer=record["gold_answer"],
            full_graph_text=record["full_graph_text"],
            gold_subgraph_text=record["gold_subgraph_text"],
            content_vector=tuple(float(x) for x in content),
            segment_count=int(record["segment_count"]),
        )
        try:
            full = instance.full_graph()
            sub = instance.gold_subgraph()
        except GraphFormatError as exc:
            raise CorpusError(
                f"instance {instance_id!r}: invalid graph text ({exc})"
            ) from exc
        report = verify_subset(sub, full)
        if not report.accepted:
            kinds = ", ".join(v.kind for v in report.violations)
            raise CorpusError(
                f"instance {instance_id!r}: gold subgraph fails subset "
                f"verification ({kinds})"
            )
        instances.append(instance)
    return instances


# -- segment geometry ----------------------------------------------------


def chain_segment(position: int, segment_count: int) -> int:
    """Segment covering chain position ``position`` (1-based).

    Chain nodes alternate between the two paradigm halves; within a half
    they occupy early slots first, except the fourth node which sits one
    slot deeper so that it only becomes visible at full coverage.
    """
    if segment_count < 2:
        return 0
    half = segment_count // 2
    side = (position - 1) % 2
    slot = (position - 1) // 2
    if position >= 4:
        slot += 1
    return side * half + (slot % half)


def coverage_mask(side: int, fraction: float, segment_count: int) -> set[int]:
    """Visible segments for one paradigm side at a coverage fraction.

    Side 0 covers the first half of the segments, side 1 the second; a
    fraction selects the leading slots of that half.
    """
    if side not in (0, 1):
        raise CorpusError("side must be 0 or 1")
    half = segment_count // 2
    visible = math.ceil(fraction * half)
    start = side * half
    return set(range(start, start + min(visible, half)))


def visible_gold(
    instance: CorpusInstance, visible_segments: set[int]
) -> EvidenceSubgraph:
    """Restrict the gold subgraph to chain nodes in visible segments."""
    gold = instance.gold_subgraph()
    keep_ids = {
        node.id
        for position, node in enumerate(gold.graph.nodes, start=1)
        if chain_segment(position, instance.segment_count) in visible_segments
    }
    nodes = tuple(n for n in gold.graph.nodes if n.id in keep_ids)
    edges = tuple(
        e
        for e in gold.graph.edges
        if e.source in keep_ids and e.target in keep_ids
    )
    return EvidenceSubgraph(MemoryGraph(nodes, edges), gold.confidence)


def segment_tags(
    segment_count: int, paradigms: tuple[str, str]
) -> tuple[tuple[int, str], ...]:
    """Default side split: first half of the segments per paradigm one,
    second half per paradigm two."""
    half = segment_count // 2
    return tuple(
        (s, paradigms[0] if s < half else paradigms[1])
        for s in range(segment_count)
    )


def instance_content(
    instance: CorpusInstance,
    paradigms: tuple[str, str] = ("explicit-sim", "latent-sim"),
) -> InstanceContent:
    return InstanceContent(
        id=instance.id,
        content_vector=np.asarray(instance.content_vector),
        gold_answer=instance.gold_answer,
        segment_tags=segment_tags(instance.segment_count, paradigms),
    )


# -- synthetic generation ------------------------------------------------


def generate_synthetic_corpus(
    n: int,
    seed: int,
    nodes_range: tuple[int, int] = (6, 9),
    extra_edges_range: tuple[int, int] = (1, 3),
    segment_count: int = 8,
    chain_range: tuple[int, int] = (2, 4),
    d_c: int = 64,
    confidence: float = 0.9,
    answer_position: str = "last",
    pattern_scale: float = 1.0,
    distractor_noise: float = 0.2,
    content_noise: float = 0.5,
) -> list[CorpusInstance]:
    """Deterministic synthetic corpus of chain-evidence instances.

    ``answer_position`` is ``"last"`` (answer noun in the deepest chain
    node) or ``"alternate"`` (drawn between the last two chain positions,
    which live on opposite paradigm sides).
    """
    if n < 1:
        raise CorpusError("need n >= 1")
    if not (1 <= nodes_range[0] <= nodes_range[1]):
        raise CorpusError(f"invalid nodes range {nodes_range}")
    if not (0 <= extra_edges_range[0] <= extra_edges_range[1]):
        raise CorpusError(f"invalid edges range {extra_edges_range}")
    if not (1 <= chain_range[0] <= chain_range[1]):
        raise CorpusError(f"invalid chain range {chain_range}")
    if nodes_range[1] > len(NOUNS):
        raise CorpusError(f"nodes range exceeds noun pool size {len(NOUNS)}")
    if segment_count < 1:
        raise CorpusError("need at least one segment")
    worst_distractors = nodes_range[0] - min(chain_range[1], nodes_range[0])
    if extra_edges_range[0] > worst_distractors * max(worst_distractors - 1, 0):
        raise CorpusError(
            "infeasible shape parameters: minimum extra edges cannot fit "
            "in the distractor set"
        )

    rng = component_rng(seed, "corpus")
    pattern_rng = component_rng(seed, "corpus-patterns")
    block_sizes = [len(b) for b in np.array_split(np.arange(d_c), segment_count)]
    max_block = max(block_sizes)
    max_chain = chain_range[1]
    patterns = pattern_rng.standard_normal((max_chain, max_block))

    block_slices = []
    start = 0
    for size in block_sizes:
        block_slices.append(slice(start, start + size))
        start += size

    instances: list[CorpusInstance] = []
    for index in range(n):
        total = int(rng.integers(nodes_range[0], nodes_range[1] + 1))
        g = min(int(rng.integers(chain_range[0], chain_range[1] + 1)), total)
        nouns = rng.choice(NOUNS, size=total, replace=False)
        adjs = rng.choice(ADJECTIVES, size=total)
        nodes = tuple(
            Node(f"N{i + 1}", f"{adjs[i]} {nouns[i]}") for i in range(total)
        )

        chain_edges = tuple(
            Edge(f"N{k}", f"N{k + 1}", str(rng.choice(RELATIONS)))
            for k in range(1, g)
        )
        distractors = [f"N{i + 1}" for i in range(g, total)]
        pairs = [
            (a, b) for a in distractors for b in distractors if a != b
        ]
        max_extra = min(extra_edges_range[1], len(pairs))
        min_extra = min(extra_edges_range[0], max_extra)
        n_extra = int(rng.integers(min_extra, max_extra + 1))
        extra_edges = []
        if n_extra:
            chosen = rng.choice(len(pairs), size=n_extra, replace=False)
            extra_edges = [
                Edge(pairs[p][0], pairs[p][1], str(rng.choice(RELATIONS)))
                for p in sorted(int(c) for c in chosen)
            ]
        full = MemoryGraph(nodes, chain_edges + tuple(extra_edges))

        gold_nodes = nodes[:g]
        gold = EvidenceSubgraph(MemoryGraph(gold_nodes, chain_edges), confidence)

        if answer_position == "last" or g < 2:
            answer_node = g
        elif answer_position == "alternate":
            answer_node = int(rng.choice([g - 1, g]))
        else:
            raise CorpusError(f"unknown answer position {answer_position!r}")
        gold_answer = str(nouns[answer_node - 1])

        mentions = " and ".join(node.description for node in gold_nodes)
        query = f"which chain of {g} links runs through {mentions}"

        content = content_noise * rng.standard_normal(d_c)
        for position in range(1, g + 1):
            seg = chain_segment(position, segment_count)
            block = block_slices[seg]
            size = block_sizes[seg]
            content[block] += pattern_scale * patterns[position - 1][:size]
        for i in range(g, total):
            seg = int(rng.integers(segment_count))
            block = block_slices[seg]
            content[block] += distractor_noise * rng.standard_normal(
                block_sizes[seg]
            )

        instances.append(
            CorpusInstance(
                id=f"inst-{seed}-{index:05d}",
                query=query,
                gold_answer=gold_answer,
                full_graph_text=emit(full, "full"),
                gold_subgraph_text=emit_evidence(gold),
                content_vector=tuple(content.tolist()),
                segment_count=segment_count,
            )
        )
    return instances


def corpus_vocabulary(
    instances: list[CorpusInstance], mode: str = "closed"
) -> Vocabulary:
    """Vocabulary over all full-graph and gold-subgraph surface words."""

    def words():
        for instance in instances:
            yield from graph_surface_words(instance.full_graph())
            sub = instance.gold_subgraph()
            yield from graph_surface_words(sub.graph, sub.confidence)

    return build_vocabulary(words(), mode=mode)
