import pytest

from metaquad.dsl import DslError, format_equation, parse
from metaquad.qnormal import MixedWord, StandardEquation


def test_standard_form():
    eq = parse("n=2; [x1,y1] = z1 (a1 a2 A1 A2) Z1")
    assert isinstance(eq, StandardEquation)
    assert (eq.rank, eq.genus, eq.coeffs) == (2, 1, [(1, 2, -1, -2)])
    assert eq.xs == ["x1"] and eq.zs == ["z1"]


def test_coefficients_equal_one():
    eq = parse("n=2; z1 (a1 a2 A1 A2) Z1 = 1")
    assert isinstance(eq, StandardEquation)
    assert (eq.genus, eq.m) == (0, 1)


def test_genus_only():
    eq = parse("n=3; [x1,y1][x2,y2] = 1")
    assert isinstance(eq, StandardEquation)
    assert (eq.genus, eq.m) == (2, 0)


def test_bare_constant_gives_mixed_word():
    W = parse("n=2; [x1,y1] = a1")
    assert isinstance(W, MixedWord)
    assert len(W.variables()) == 2


def test_raw():
    W = parse("n=2; raw: x1 a1 y1 X1 a2 Y1 = 1")
    assert isinstance(W, MixedWord)
    assert str(W) == "x1 a1 y1 X1 a2 Y1"


def test_roundtrip():
    for text in ["n=2; [x1,y1] = z1 (a1 a2 A1 A2) Z1",
                 "n=3; [x1,y1] = z1 (a1) Z1 z2 (A1) Z2",
                 "n=2; raw: x1 a1 y1 X1 a2 Y1 = 1"]:
        eq = parse(text)
        again = parse(format_equation(eq))
        assert format_equation(again) == format_equation(eq)


@pytest.mark.parametrize("text, offset", [
    ("n=2; [x1,y1", 11),
    ("n=2; [x1,y1] = z1 (a3) Z1", 19),
    ("n=0; [x1,y1] = 1", 2),
    ("n=2; [x1,y1] = z1 (a1) Z1 ?", 26),
    ("n=2; raw: x1 X1 = a1", 18),
    ("n=2; [X1,y1] = 1", 5),
])
def test_errors_report_position(text, offset):
    with pytest.raises(DslError) as exc:
        parse(text)
    assert exc.value.offset == offset
    assert exc.value.line == 1
    assert exc.value.col == offset + 1


def test_multiline_position():
    with pytest.raises(DslError) as exc:
        parse("n=2;\n[x1,y1] = z1 (a1 ?) Z1")
    assert (exc.value.line, exc.value.col) == (2, 18)
