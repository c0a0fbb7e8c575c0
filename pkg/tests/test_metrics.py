"""Answer-quality and memory-efficiency metric oracles."""
import numpy as np
import pytest

from memalign.metrics import (
    AnswerPair,
    MemoryRecord,
    MetricsError,
    exact_match,
    mem_length,
    memory_utilization,
    normalize_answer,
    rouge1,
    token_f1,
    unique_ratio,
)


def test_normalize_answer():
    assert normalize_answer("The  Amber Harbor!") == "amber harbor"
    assert normalize_answer("a  b, AN apple; the END.") == "b apple end"
    assert normalize_answer("") == ""


# Ten hand-computed EM / F1 / ROUGE-1 cases.
CASES = [
    # (prediction, golds, em, f1, rouge1)
    ("amber harbor", ("amber harbor",), 1, 1.0, 1.0),
    ("The Amber Harbor", ("amber harbor",), 1, 1.0, 1.0),
    ("harbor", ("amber harbor",), 0, 2 / 3, 2 / 3),
    ("amber harbor lighthouse", ("amber harbor",), 0, 0.8, 0.8),
    ("quiet mill", ("amber harbor",), 0, 0.0, 0.0),
    ("", ("amber harbor",), 0, 0.0, 0.0),
    ("harbor harbor", ("harbor",), 0, 2 / 3, 2 / 3),  # clipped multiset overlap
    ("amber harbor", ("quiet mill", "amber harbor"), 1, 1.0, 1.0),
    ("mill quiet", ("quiet mill",), 0, 1.0, 1.0),  # order-free unigram overlap
    ("an amber harbor.", ("Amber, harbor",), 1, 1.0, 1.0),
]


@pytest.mark.parametrize("pred,golds,em,f1,r1", CASES)
def test_hand_computed_table(pred, golds, em, f1, r1):
    pair = AnswerPair(pred, golds)
    assert exact_match(pair) == em
    assert token_f1(pair) == pytest.approx(f1)
    assert rouge1(pair) == pytest.approx(r1)


def test_em_implies_f1_fuzz():
    rng = np.random.default_rng(0)
    words = ["amber", "harbor", "mill", "quiet", "the", "a", "spire", "basin"]
    for _ in range(2000):
        pred = " ".join(rng.choice(words, size=int(rng.integers(0, 5))))
        gold = " ".join(rng.choice(words, size=int(rng.integers(1, 5))))
        pair = AnswerPair(pred, (gold,))
        if exact_match(pair) == 1:
            assert token_f1(pair) == pytest.approx(1.0)
            assert rouge1(pair) == pytest.approx(1.0)


def test_gold_list_must_be_nonempty():
    with pytest.raises(MetricsError):
        AnswerPair("x", ())


def test_mem_length():
    records = [
        MemoryRecord("abcd", "x", True),
        MemoryRecord("ab", "x", True),
    ]
    assert mem_length(records) == pytest.approx(3.0)
    with pytest.raises(MetricsError):
        mem_length([])


def test_unique_ratio():
    records = [
        MemoryRecord("a b a", "x", True),  # 2/3
        MemoryRecord("c c", "x", True),  # 1/2
        MemoryRecord("", "x", True),  # skipped
    ]
    assert unique_ratio(records) == pytest.approx((2 / 3 + 1 / 2) / 2)
    with pytest.raises(MetricsError):
        unique_ratio([MemoryRecord("", "x", True)])


def test_memory_utilization_contiguous_containment():
    records = [
        MemoryRecord("the amber harbor shines", "amber harbor", True),  # hit
        MemoryRecord("amber light on the harbor", "amber harbor", True),  # miss
        MemoryRecord("ignored", "amber", False),  # not gold evidence
    ]
    assert memory_utilization(records) == pytest.approx(0.5)
    with pytest.raises(MetricsError):
        memory_utilization([MemoryRecord("x", "y", False)])


def test_memory_utilization_normalizes_before_matching():
    records = [MemoryRecord("The Amber, Harbor!", "amber harbor", True)]
    assert memory_utilization(records) == 1.0
