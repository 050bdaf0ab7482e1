import pytest

from valueprover.corpus import (
    CorpusFormatError,
    generate_corpus,
    load_corpus,
    save_corpus,
    split_corpus,
)
from valueprover.env import script_is_valid


def test_generation_is_deterministic():
    a, summary_a = generate_corpus(7, (5, 4, 6))
    b, summary_b = generate_corpus(7, (5, 4, 6))
    assert [(e.theorem.id, str(e.proof)) for e in a] == [(e.theorem.id, str(e.proof)) for e in b]
    assert summary_a == summary_b
    c, _ = generate_corpus(8, (5, 4, 6))
    assert [e.theorem.statement.canonical() for e in a] != [e.theorem.statement.canonical() for e in c]


def test_generated_proofs_validate(small_corpus):
    assert small_corpus
    for entry in small_corpus:
        assert entry.theorem.statement.context == ()
        assert script_is_valid(entry.theorem, entry.proof)
        assert entry.proof_length == len(entry.proof.steps)


def test_empty_counts_give_empty_corpus():
    entries, summary = generate_corpus(0, (0, 0, 0))
    assert entries == [] and summary.generated == (0, 0, 0)


def test_ground_family_has_two_step_proofs():
    entries, _ = generate_corpus(5, (6, 0, 0))
    assert all(e.proof_length == 2 and str(e.proof) == "simpl; reflexivity" for e in entries)


def test_save_load_round_trip(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    save_corpus(small_corpus, str(path))
    loaded = load_corpus(str(path))
    assert loaded == small_corpus
    save_corpus([], str(path))
    assert load_corpus(str(path)) == []


def test_save_is_byte_stable(tmp_path, small_corpus):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(small_corpus, str(p1))
    save_corpus(small_corpus, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_malformed_line_reports_line_number(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    save_corpus(small_corpus[:3], str(path))
    lines = path.read_text().splitlines()
    lines[2] = '{"id": "broken"}'
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorpusFormatError) as err:
        load_corpus(str(path))
    assert err.value.line_number == 3


def test_split_ratios(small_corpus):
    all_train = split_corpus(small_corpus, 1, 0.0)
    assert len(all_train.train) == len(small_corpus) and not all_train.test
    all_test = split_corpus(small_corpus, 1, 1.0)
    assert len(all_test.test) == len(small_corpus) and not all_test.train
    with pytest.raises(ValueError):
        split_corpus(small_corpus, 1, 1.5)


def test_split_deterministic_and_disjoint(small_corpus):
    ten = small_corpus[:10]
    first = split_corpus(ten, 3, 0.3)
    second = split_corpus(ten, 3, 0.3)
    assert len(first.test) == 3
    assert [e.theorem.id for e in first.test] == [e.theorem.id for e in second.test]
    train_ids = {e.theorem.id for e in first.train}
    test_ids = {e.theorem.id for e in first.test}
    assert not (train_ids & test_ids)
