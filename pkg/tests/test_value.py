import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from portkit.errors import BadPath, DepthExceeded, ParseError, PathError
from portkit.value import (
    INT_MAX,
    INT_MIN,
    check_value,
    decode_value,
    depth,
    encode_value,
    field,
    first_string,
    parse_path,
    record,
    resolve_path,
)

FACE = (("pos", (1.0, 0.1, 0.45)), ("certainty", 0.9))

values = st.recursive(
    st.one_of(
        st.integers(INT_MIN, INT_MAX),
        st.floats(allow_nan=False),
        st.text(),
    ),
    lambda children: st.lists(children, max_size=4).map(tuple),
    max_leaves=20,
)


def test_encode_examples():
    assert encode_value((0.1, 0.2, 0.3)) == "(0.1 0.2 0.3)"
    assert encode_value(()) == "()"
    assert encode_value(1.0) == "1.0"
    assert encode_value(-3) == "-3"
    assert encode_value('say "hi"\\') == '"say \\"hi\\"\\\\"'
    assert encode_value(float("inf")) == "inf"
    assert encode_value(("take", (0.3, 0.0, 0.0))) == '("take" (0.3 0.0 0.0))'


def test_decode_examples():
    assert decode_value('(1 2.5 "hi")') == (1, 2.5, "hi")
    assert decode_value("  ( ( ) 7 )  ") == ((), 7)
    assert decode_value("1e3") == 1000.0
    assert isinstance(decode_value("1e3"), float)
    assert isinstance(decode_value("12"), int)


def test_floats_never_read_back_as_integers():
    assert isinstance(decode_value(encode_value(2.0)), float)
    assert isinstance(decode_value(encode_value(1e16)), float)


@settings(max_examples=1000)
@given(values)
def test_decode_inverts_encode(value):
    assert decode_value(encode_value(value)) == value


@pytest.mark.parametrize(
    "text, position",
    [("(1 2", 4), ("", 0), (")", 0), ("(1 abc)", 3), ("1 2", 2)],
)
def test_decode_reports_position(text, position):
    with pytest.raises(ParseError) as error:
        decode_value(text)
    assert error.value.position == position


def test_bad_escape_and_unterminated_string():
    with pytest.raises(ParseError):
        decode_value('"a\\n"')
    with pytest.raises(ParseError) as error:
        decode_value('("abc')
    assert error.value.position == 1


def test_integers_outside_the_64_bit_range():
    with pytest.raises(ParseError):
        decode_value(str(INT_MAX + 1))
    with pytest.raises(ValueError):
        check_value(INT_MIN - 1)


def test_depth_limit():
    nested = "(" * 33 + ")" * 33
    with pytest.raises(DepthExceeded):
        decode_value(nested)
    assert depth(decode_value(nested, max_depth=40)) == 33
    with pytest.raises(DepthExceeded):
        encode_value(((((),),),), max_depth=3)


def test_non_values_are_rejected():
    with pytest.raises(TypeError):
        check_value(True)
    with pytest.raises(TypeError):
        check_value([1, 2])
    with pytest.raises(TypeError):
        check_value(None)


def test_parse_path():
    assert parse_path(".") == ()
    assert parse_path(".pos.0") == ("pos", 0)
    assert parse_path(".objects[1].dist") == ("objects", 1, "dist")
    assert parse_path("[-1]") == (-1,)
    for bad in ("", "pos", ".pos..0", ".pos[x]"):
        with pytest.raises(BadPath):
            parse_path(bad)


def test_resolve_path():
    assert resolve_path(FACE, ".") == FACE
    assert resolve_path(FACE, ".certainty") == 0.9
    assert resolve_path(FACE, ".pos.0") == 1.0
    assert resolve_path(FACE, ".pos[-1]") == 0.45
    assert resolve_path(FACE, "[1]") == ("certainty", 0.9)
    with pytest.raises(PathError):
        resolve_path(FACE, ".missing")
    with pytest.raises(PathError):
        resolve_path(FACE, ".pos.7")
    with pytest.raises(PathError):
        resolve_path(FACE, ".certainty.0")


def test_field_and_record():
    assert record(id="o1", dist=0.3) == (("id", "o1"), ("dist", 0.3))
    assert field(FACE, "pos") == (1.0, 0.1, 0.45)
    assert field((0.1, 0.2, 0.3), "pos", default=None) is None


def test_first_string():
    assert first_string(("e_arm_idle",)) == "e_arm_idle"
    assert first_string((1, ((2, "deep"), "later"))) == "deep"
    assert first_string((1, 2.0)) is None
