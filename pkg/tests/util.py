"""Shared test helpers: random graph generation and finite differences."""
from __future__ import annotations

import numpy as np

from memalign.graphs import Edge, EvidenceSubgraph, MemoryGraph, Node

WORDS = (
    "alpha", "bravo", "cedar", "delta", "ember", "frost", "gale", "haven",
    "iris", "jade", "krill", "lumen", "moss", "noble", "onyx", "pearl",
    "quartz", "raven", "slate", "tidal", "umber", "vexed", "wren", "xenon",
)

RELATION_WORDS = ("binds", "carries", "drives", "joins", "links", "marks")


def random_graph(
    rng: np.random.Generator,
    max_nodes: int = 8,
    max_extra_edges: int = 6,
    min_nodes: int = 0,
) -> MemoryGraph:
    """A random well-formed graph with single-spaced descriptions."""
    n = int(rng.integers(min_nodes, max_nodes + 1))
    nodes = tuple(
        Node(
            f"N{i + 1}",
            " ".join(rng.choice(WORDS, size=int(rng.integers(1, 4)))),
        )
        for i in range(n)
    )
    edges = []
    if n >= 2:
        for _ in range(int(rng.integers(0, max_extra_edges + 1))):
            a, b = rng.choice(n, size=2, replace=False)
            edges.append(
                Edge(
                    f"N{int(a) + 1}",
                    f"N{int(b) + 1}",
                    " ".join(rng.choice(RELATION_WORDS, size=int(rng.integers(1, 3)))),
                )
            )
    return MemoryGraph(nodes, tuple(edges))


def random_subgraph(
    full: MemoryGraph, rng: np.random.Generator, confidence: float = 0.5
) -> EvidenceSubgraph:
    """A random accepted subgraph of ``full`` (subset of nodes and edges)."""
    keep = {
        node.id for node in full.nodes if rng.random() < 0.7
    }
    nodes = tuple(n for n in full.nodes if n.id in keep)
    edges = tuple(
        e
        for e in full.edges
        if e.source in keep and e.target in keep and rng.random() < 0.8
    )
    return EvidenceSubgraph(MemoryGraph(nodes, edges), confidence)


def mutate_subgraph(
    sub: EvidenceSubgraph, full: MemoryGraph, rng: np.random.Generator
) -> tuple[EvidenceSubgraph, str]:
    """One random single-field mutation; returns (mutant, expected kind)."""
    g = sub.graph
    choices = []
    if g.nodes:
        choices.extend(["node-id", "description"])
    if g.edges:
        choices.extend(["endpoint", "relation"])
    if not choices:
        raise ValueError("subgraph has nothing to mutate")
    kind = rng.choice(choices)
    if kind == "node-id":
        i = int(rng.integers(len(g.nodes)))
        used = {n.id for n in g.nodes}
        fresh = next(f"N{k}" for k in range(900, 999) if f"N{k}" not in used)
        nodes = tuple(
            Node(fresh, n.description) if j == i else n for j, n in enumerate(g.nodes)
        )
        edges = tuple(
            e for e in g.edges
            if e.source != g.nodes[i].id and e.target != g.nodes[i].id
        )
        return EvidenceSubgraph(MemoryGraph(nodes, edges), sub.confidence), "unknown-node"
    if kind == "description":
        i = int(rng.integers(len(g.nodes)))
        nodes = tuple(
            Node(n.id, n.description + " tampered") if j == i else n
            for j, n in enumerate(g.nodes)
        )
        return (
            EvidenceSubgraph(MemoryGraph(nodes, g.edges), sub.confidence),
            "description-mismatch",
        )
    if kind == "endpoint":
        i = int(rng.integers(len(g.edges)))
        used = {n.id for n in full.nodes} | {n.id for n in g.nodes}
        fresh = next(f"N{k}" for k in range(900, 999) if f"N{k}" not in used)
        nodes = g.nodes + (Node(fresh, "stray node"),)
        edges = tuple(
            Edge(fresh, e.target, e.relation) if j == i else e
            for j, e in enumerate(g.edges)
        )
        return (
            EvidenceSubgraph(MemoryGraph(nodes, edges), sub.confidence),
            "dangling-endpoint",
        )
    i = int(rng.integers(len(g.edges)))
    edges = tuple(
        Edge(e.source, e.target, e.relation + " tampered") if j == i else e
        for j, e in enumerate(g.edges)
    )
    return (
        EvidenceSubgraph(MemoryGraph(g.nodes, edges), sub.confidence),
        "relation-mismatch",
    )


def central_difference(f, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central finite-difference gradient of scalar f at x (flattened)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + step
        hi = f(x)
        xf[i] = orig - step
        lo = f(x)
        xf[i] = orig
        flat[i] = (hi - lo) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.linalg.norm(analytic - numeric)
    den = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if den == 0.0:
        return 0.0
    return float(num / den)
