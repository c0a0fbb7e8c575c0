"""Engine runtime glue: example preparation, evaluation, checkpoint packing."""
import dataclasses

import numpy as np
import pytest

from memalign.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from memalign.config import EngineConfig
from memalign.corpus import corpus_vocabulary, generate_synthetic_corpus
from memalign.pipeline import (
    anchor_vector,
    build_runtime,
    evaluate_retrieval,
    module_from_sections,
    module_sections,
    prepare_retriever_examples,
    retriever_from_sections,
    retriever_sections,
)
from memalign.retriever import init_retriever
from memalign.unified import align_forward, init_alignment_module


@pytest.fixture(scope="module")
def runtime():
    return build_runtime(EngineConfig())


@pytest.fixture(scope="module")
def corpus():
    return generate_synthetic_corpus(8, 13)


def test_runtime_registers_configured_paradigms(runtime):
    assert set(runtime.registry.names()) == {
        "anchor-graph",
        "explicit-sim",
        "parametric-sim",
        "latent-sim",
    }


def test_runtime_requires_anchor_paradigm():
    cfg = EngineConfig()
    cfg.paradigms = [p for p in cfg.paradigms if p.name != "anchor-graph"]
    with pytest.raises(ValueError, match="anchor-graph"):
        build_runtime(cfg)


def test_anchor_vector_is_deterministic(runtime, corpus):
    v1 = anchor_vector(runtime, corpus[0])
    v2 = anchor_vector(runtime, corpus[0])
    np.testing.assert_array_equal(v1, v2)
    assert v1.shape == (runtime.config.d_s,)


def test_prepare_examples_full_and_coverage(runtime, corpus):
    plain = prepare_retriever_examples(runtime, corpus)
    assert len(plain) == len(corpus)
    augmented = prepare_retriever_examples(runtime, corpus, coverage_levels=(0.5,))
    assert len(augmented) == 2 * len(corpus)
    cov = [e for e in augmented if "#cov" in e.id]
    assert len(cov) == len(corpus)
    for example in cov:
        # masked-label gold is a subset of the full gold chain
        assert len(example.gold_subgraph.graph.nodes) <= len(
            example.full_graph.nodes
        )


def test_evaluate_retrieval_report_keys(runtime, corpus):
    vocab = corpus_vocabulary(corpus)
    model = init_retriever(
        len(vocab), 16, runtime.config.d_q, runtime.config.d_s, seed=0
    )
    report = evaluate_retrieval(runtime, model, vocab, corpus)
    for key in ("em", "f1", "rouge1", "mem_length", "unique_ratio", "utilization", "n"):
        assert key in report
    assert report["n"] == len(corpus)
    assert 0.0 <= report["utilization"] <= 1.0


def test_module_checkpoint_round_trip(tmp_path, runtime, corpus):
    module = init_alignment_module(6, 5, 4, seed=1)
    path = tmp_path / "align.ckpt"
    save_checkpoint(module_sections(module, "align"), path)
    loaded = module_from_sections(load_checkpoint(path), "align")
    x = np.random.default_rng(0).standard_normal(6)
    np.testing.assert_allclose(
        align_forward(loaded, x),
        align_forward(module, x),
        atol=1e-6,  # float32 storage
    )


def test_retriever_checkpoint_round_trip(tmp_path):
    model = init_retriever(20, 8, 4, 3, seed=2)
    path = tmp_path / "retriever.ckpt"
    save_checkpoint(retriever_sections(model), path)
    loaded = retriever_from_sections(load_checkpoint(path))
    q = np.zeros(4)
    h = np.zeros(3)
    np.testing.assert_allclose(
        loaded.init_state(q, h), model.init_state(q, h), atol=1e-6
    )


def test_missing_checkpoint_sections_reported(tmp_path):
    path = tmp_path / "broken.ckpt"
    save_checkpoint({"align/layer1_weight": np.zeros((2, 2))}, path)
    with pytest.raises(CheckpointError, match="missing checkpoint section"):
        module_from_sections(load_checkpoint(path), "align")
