import pytest

from qgrt.errors import LexError
from qgrt.frontend import tokenize


def kinds(src):
    return [(t.kind, t.value) for t in tokenize(src)[:-1]]


def test_simple_declaration():
    assert kinds("int x = 5;") == [
        ("kw", "int"), ("ident", "x"), ("punct", "="), ("int", 5), ("punct", ";")]


def test_timing_constraint_expression():
    assert kinds("tmr == intervals[i]/2") == [
        ("ident", "tmr"), ("punct", "=="), ("ident", "intervals"),
        ("punct", "["), ("ident", "i"), ("punct", "]"), ("punct", "/"), ("int", 2)]


def test_unknown_time_unit_rejected():
    with pytest.raises(LexError) as exc:
        tokenize("5.0xs")
    assert "xs" in str(exc.value)


@pytest.mark.parametrize("src,mag,unit", [
    ("300ns", 300.0, "ns"),
    ("0.02us", 0.02, "us"),
    ("1ms", 1.0, "ms"),
    ("2s", 2.0, "s"),
])
def test_time_literals_lex_as_single_tokens(src, mag, unit):
    toks = tokenize(src)
    assert toks[0].kind == "time" and toks[0].value == (mag, unit)
    assert toks[1].kind == "eof"


def test_double_literal_needs_digits_and_exponent_form():
    assert kinds("2.5")[0] == ("double", 2.5)
    assert kinds("1e-07")[0] == ("double", 1e-07)
    assert kinds("2")[0] == ("int", 2)


def test_comments_and_whitespace_discarded():
    src = "// line\nint /* block\n comment */ x;"
    assert kinds(src) == [("kw", "int"), ("ident", "x"), ("punct", ";")]


def test_illegal_character_has_position():
    with pytest.raises(LexError) as exc:
        tokenize("int x;\n  ~y;", filename="f.qu")
    assert "f.qu:2:3" in str(exc.value)


def test_tokens_cover_input_spans():
    toks = tokenize("if (a) { b; }")
    assert toks[0].span.col == 1
    assert [t.value for t in toks[:-1]] == ["if", "(", "a", ")", "{", "b", ";", "}"]
