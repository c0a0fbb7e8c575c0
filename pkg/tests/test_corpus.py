"""Synthetic corpus generation and JSONL ingestion."""
import json

import numpy as np
import pytest

from memalign.corpus import (
    CorpusError,
    chain_segment,
    corpus_to_jsonl,
    corpus_vocabulary,
    coverage_mask,
    generate_synthetic_corpus,
    instance_content,
    load_corpus,
    save_corpus,
    visible_gold,
)
from memalign.graphs import verify_subset


def test_generation_is_deterministic():
    a = corpus_to_jsonl(generate_synthetic_corpus(20, 42))
    b = corpus_to_jsonl(generate_synthetic_corpus(20, 42))
    assert a == b


def test_generation_seed_sensitivity():
    a = corpus_to_jsonl(generate_synthetic_corpus(5, 42))
    b = corpus_to_jsonl(generate_synthetic_corpus(5, 43))
    assert a != b


def test_instances_validate_and_answer_in_gold_node():
    corpus = generate_synthetic_corpus(50, 7)
    assert len({i.id for i in corpus}) == 50
    for inst in corpus:
        full = inst.full_graph()
        gold = inst.gold_subgraph()
        assert verify_subset(gold, full).accepted
        assert any(
            inst.gold_answer in node.description for node in gold.graph.nodes
        )
        assert inst.gold_answer in inst.query or any(
            inst.gold_answer in n.description for n in gold.graph.nodes
        )


def test_gold_is_prefix_chain():
    for inst in generate_synthetic_corpus(20, 3):
        gold = inst.gold_subgraph().graph
        g = len(gold.nodes)
        assert [n.id for n in gold.nodes] == [f"N{k}" for k in range(1, g + 1)]
        assert [(e.source, e.target) for e in gold.edges] == [
            (f"N{k}", f"N{k + 1}") for k in range(1, g)
        ]


def test_distractor_edges_stay_among_distractors():
    for inst in generate_synthetic_corpus(30, 9):
        g = len(inst.gold_subgraph().graph.nodes)
        gold_ids = {f"N{k}" for k in range(1, g + 1)}
        chain_pairs = {(f"N{k}", f"N{k+1}") for k in range(1, g)}
        for e in inst.full_graph().edges:
            if (e.source, e.target) in chain_pairs:
                continue
            assert e.source not in gold_ids and e.target not in gold_ids


def test_minimal_shape():
    corpus = generate_synthetic_corpus(
        1, 0, nodes_range=(1, 1), extra_edges_range=(0, 0), chain_range=(1, 1)
    )
    inst = corpus[0]
    assert len(inst.full_graph().nodes) == 1
    assert len(inst.gold_subgraph().graph.nodes) == 1


def test_invalid_shapes_rejected():
    with pytest.raises(CorpusError):
        generate_synthetic_corpus(0, 1)
    with pytest.raises(CorpusError):
        generate_synthetic_corpus(1, 1, nodes_range=(5, 3))
    with pytest.raises(CorpusError):
        generate_synthetic_corpus(1, 1, nodes_range=(3, 3), chain_range=(3, 3),
                                  extra_edges_range=(2, 2))


def test_save_load_round_trip(tmp_path):
    corpus = generate_synthetic_corpus(10, 4)
    path = tmp_path / "c.jsonl"
    save_corpus(corpus, path)
    loaded = load_corpus(path)
    assert loaded == corpus


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a"}\nnot json\n')
    with pytest.raises(CorpusError, match="line 1: missing field"):
        load_corpus(path)
    good = generate_synthetic_corpus(1, 1)[0].to_json()
    path.write_text(good + "\nnot json\n")
    with pytest.raises(CorpusError, match="line 2: malformed JSON"):
        load_corpus(path)


def test_load_rejects_duplicate_ids(tmp_path):
    inst = generate_synthetic_corpus(1, 1)[0]
    path = tmp_path / "c.jsonl"
    path.write_text(inst.to_json() + "\n" + inst.to_json() + "\n")
    with pytest.raises(CorpusError, match="duplicate id"):
        load_corpus(path)


def test_load_rejects_subset_violations(tmp_path):
    inst = generate_synthetic_corpus(1, 1)[0]
    record = json.loads(inst.to_json())
    record["gold_subgraph_text"] = (
        "[EVIDENCE_SUBGRAPH]\n<NODES>\nN999: intruder\n<EDGES>\n[CONFIDENCE]\n0.9\n"
    )
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(CorpusError, match="unknown-node"):
        load_corpus(path)


def test_missing_content_vector_is_generated(tmp_path):
    inst = generate_synthetic_corpus(1, 1)[0]
    record = json.loads(inst.to_json())
    del record["content_vector"]
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(record) + "\n")
    loaded = load_corpus(path, d_c=64)
    assert len(loaded[0].content_vector) == 64


# -- segment geometry ----------------------------------------------------


def test_chain_segments_alternate_sides():
    # positions 1..4 with 8 segments: sides 0,1,0,1
    segs = [chain_segment(p, 8) for p in (1, 2, 3, 4)]
    assert segs == [0, 4, 1, 6]


def test_coverage_mask_fractions():
    assert coverage_mask(0, 0.1, 8) == {0}
    assert coverage_mask(0, 0.5, 8) == {0, 1}
    assert coverage_mask(0, 1.0, 8) == {0, 1, 2, 3}
    assert coverage_mask(1, 0.5, 8) == {4, 5}
    with pytest.raises(CorpusError):
        coverage_mask(2, 0.5, 8)


def test_visible_gold_restricts_chain():
    corpus = generate_synthetic_corpus(30, 11, chain_range=(4, 4))
    inst = corpus[0]
    full_vis = visible_gold(inst, set(range(8)))
    assert full_vis == inst.gold_subgraph()
    none_vis = visible_gold(inst, set())
    assert none_vis.graph.nodes == ()
    # side-0 coverage only: even chain positions (side 1) hidden
    side0 = visible_gold(inst, coverage_mask(0, 1.0, 8))
    ids = [n.id for n in side0.graph.nodes]
    assert ids == ["N1", "N3"]


def test_instance_content_segments():
    inst = generate_synthetic_corpus(1, 2)[0]
    content = instance_content(inst)
    assert content.segment_count == inst.segment_count
    sides = {p for _, p in content.segment_tags}
    assert sides == {"explicit-sim", "latent-sim"}


def test_corpus_vocabulary_closed_and_covers_gold():
    corpus = generate_synthetic_corpus(10, 5)
    vocab = corpus_vocabulary(corpus)
    assert vocab.mode == "closed"
    assert len(vocab) <= 200
    assert "0.9" in vocab
