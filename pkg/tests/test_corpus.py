import pytest
from hypothesis import given, strategies as st

from ctxsmt.corpus import (SOURCE, TARGET, CorpusFormatError, load_parallel_corpus,
                           parse_alignment, parse_factored_sentence)


def test_parse_target_word():
    s = parse_factored_sentence("kočka|kočka|NN", TARGET)
    assert len(s) == 1
    assert s[0].factors == ("kočka", "kočka", "NN")


def test_schema_mismatch_names_token():
    with pytest.raises(CorpusFormatError, match="expected 5 factors, got 3 at token 0"):
        parse_factored_sentence("cat|cat|NN", SOURCE)


def test_parse_source_with_parent():
    s = parse_factored_sentence("saw|see|VBD|Pred|- cat|cat|NN|Obj|see", SOURCE)
    assert len(s) == 2
    assert s[1].factor("p") == "see"
    assert s[0].factor("a") == "Pred"


@pytest.mark.parametrize("line", ["", "   \n"])
def test_empty_sentence(line):
    with pytest.raises(CorpusFormatError, match="empty"):
        parse_factored_sentence(line, TARGET)


def test_empty_factor_rejected():
    with pytest.raises(CorpusFormatError):
        parse_factored_sentence("a||NN", TARGET)


def test_alignment():
    assert parse_alignment("0-0 1-1", 2, 2).links == {(0, 0), (1, 1)}
    assert parse_alignment("", 2, 2).links == frozenset()
    assert parse_alignment("0-0 0-0", 2, 2).links == {(0, 0)}
    with pytest.raises(CorpusFormatError, match="out of bounds"):
        parse_alignment("0-5", 2, 2)
    with pytest.raises(CorpusFormatError, match="malformed"):
        parse_alignment("0:1", 2, 2)


def _write(path, lines):
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")


SRC = ["a|a|X|-|- b|b|X|-|-", "c|c|X|-|-", "d|d|X|-|-"]
TGT = ["x|x|X y|y|X", "z|z|X", "w|w|X"]


def test_load_corpus(tmp_path):
    _write(tmp_path / "s", SRC[:2])
    _write(tmp_path / "t", TGT[:2])
    _write(tmp_path / "a", ["0-0 1-1", ""])
    pairs = list(load_parallel_corpus(tmp_path / "s", tmp_path / "t", tmp_path / "a"))
    assert [p.source.forms for p in pairs] == [("a", "b"), ("c",)]
    assert pairs[1].alignment.links == frozenset()


def test_load_corpus_mismatch(tmp_path):
    _write(tmp_path / "s", SRC)
    _write(tmp_path / "t", TGT[:2])
    _write(tmp_path / "a", ["", "", ""])
    with pytest.raises(CorpusFormatError, match="line 3"):
        list(load_parallel_corpus(tmp_path / "s", tmp_path / "t", tmp_path / "a"))


factor = st.text(alphabet=st.characters(blacklist_categories=("Zs", "Cc", "Zl", "Zp", "Cs"),
                                        blacklist_characters="|"), min_size=1, max_size=5)
token = st.lists(factor, min_size=5, max_size=5).map("|".join)


@given(st.lists(token, min_size=1, max_size=6))
def test_round_trip(tokens):
    line = " ".join(tokens)
    assert str(parse_factored_sentence(line, SOURCE)) == line
