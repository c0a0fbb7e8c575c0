"""Vocabulary table and reserved token ids."""
import pytest

from memalign.vocab import (
    BOS,
    EOS,
    RESERVED_TOKENS,
    TOK_ARROW,
    TOK_COLON,
    TOK_CONFIDENCE,
    TOK_EDGES,
    TOK_EOL,
    TOK_HEADER,
    TOK_NODES,
    UNK,
    Vocabulary,
    VocabularyError,
    build_vocabulary,
)


def test_reserved_ids_are_stable():
    assert (BOS, EOS, UNK) == (0, 1, 2)
    assert TOK_HEADER == 3 and TOK_NODES == 4 and TOK_EDGES == 5
    assert TOK_CONFIDENCE == 6 and TOK_COLON == 7 and TOK_ARROW == 8
    assert TOK_EOL == 9
    assert len(RESERVED_TOKENS) == 10
    assert RESERVED_TOKENS[TOK_HEADER] == "[EVIDENCE_SUBGRAPH]"


def test_word_ids_follow_reserved_block():
    vocab = Vocabulary(("harbor", "mill"))
    assert vocab.id_of("harbor") == 10
    assert vocab.id_of("mill") == 11
    assert vocab.token(10) == "harbor"
    assert len(vocab) == 12


def test_closed_mode_rejects_oov():
    vocab = Vocabulary(("harbor",), mode="closed")
    with pytest.raises(VocabularyError):
        vocab.id_of("mill")


def test_open_mode_maps_oov_to_unk():
    vocab = Vocabulary(("harbor",), mode="open")
    assert vocab.id_of("mill") == UNK


def test_duplicate_and_reserved_words_rejected():
    with pytest.raises(VocabularyError):
        Vocabulary(("x", "x"))
    with pytest.raises(VocabularyError):
        Vocabulary(("->",))


def test_unknown_id_rejected():
    with pytest.raises(VocabularyError):
        Vocabulary(("a",)).token(99)


def test_build_vocabulary_first_seen_order():
    vocab = build_vocabulary(["b", "a", "b", "c", "a"])
    assert vocab.words == ("b", "a", "c")


def test_build_vocabulary_drops_reserved_surface_words():
    vocab = build_vocabulary(["->", "x", ":"])
    assert vocab.words == ("x",)


def test_save_load_round_trip(tmp_path):
    vocab = build_vocabulary(["harbor", "mill", "0.9"], mode="open")
    path = tmp_path / "vocab.jsonl"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.words == vocab.words
    assert loaded.mode == vocab.mode
    assert loaded.id_of("0.9") == vocab.id_of("0.9")


def test_load_rejects_missing_mode_record(tmp_path):
    path = tmp_path / "vocab.jsonl"
    path.write_text('{"token": "<bos>", "id": 0}\n')
    with pytest.raises(VocabularyError):
        Vocabulary.load(path)
