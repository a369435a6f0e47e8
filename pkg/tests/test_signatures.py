import pytest
from hypothesis import given, strategies as st

from fockblocks import BudgetError
from fockblocks.signatures import (
    SIGNATURES,
    Handedness,
    SigString,
    Signature,
    adjoint,
    classify,
    compose,
    count_a,
    count_b,
    enumerate_strings,
    format_string,
    is_handed,
    parse_string,
    split_points,
)

sig_strings = st.lists(st.sampled_from(SIGNATURES), min_size=1, max_size=6).map(SigString)


def S(text):
    return parse_string(text)


def test_count_a_single():
    assert count_a(S("ab"), 1, 1) == 1
    assert count_a(S("a*b"), 1, 1) == -1


def test_count_a_cancels():
    assert count_a(S("ab,a*b*"), 1, 2) == 0


def test_count_b_mixed():
    assert count_b(S("ab*,a*b,ab"), 1, 3) == 1


def test_count_range_errors():
    s = S("ab,a*b*")
    with pytest.raises(IndexError):
        count_a(s, 0, 1)
    with pytest.raises(IndexError):
        count_a(s, 2, 1)
    with pytest.raises(IndexError):
        count_b(s, 1, 3)


def test_adjoint_basic():
    assert adjoint(S("ab")) == S("a*b*")
    assert adjoint(S("ab,ab*")) == S("a*b,a*b*")


@given(sig_strings)
def test_adjoint_involution(s):
    assert adjoint(adjoint(s)) == s


@given(sig_strings, st.data())
def test_adjoint_count_reflection(s, data):
    k = len(s)
    j = data.draw(st.integers(1, k))
    jp = data.draw(st.integers(j, k))
    assert count_a(adjoint(s), j, jp) == -count_a(s, k - jp + 1, k - j + 1)
    assert count_b(adjoint(s), j, jp) == -count_b(s, k - jp + 1, k - j + 1)


def test_handed_length_two():
    handed = [format_string(s) for s in enumerate_strings(2) if is_handed(s)]
    assert handed == ["ab,a*b", "ab,a*b*", "ab*,a*b", "ab*,a*b*"]


def test_handed_examples():
    assert is_handed(S("ab,a*b*"))
    assert not is_handed(S("a*b,ab"))


def test_every_length_one_string_is_handed():
    assert all(is_handed(s) for s in enumerate_strings(1))


def test_classify_examples():
    assert classify(S("ab")) is Handedness.RIGHT_HANDED
    assert classify(S("ab*,a*b")) is Handedness.AMBIDEXTROUS
    assert classify(S("ab,a*b")) is Handedness.RIGHT_HANDED
    assert classify(S("ab*,a*b*")) is Handedness.LEFT_HANDED
    assert classify(S("a*b,ab")) is Handedness.NOT_HANDED


@given(sig_strings)
def test_classify_adjoint_swap(s):
    swap = {
        Handedness.RIGHT_HANDED: Handedness.LEFT_HANDED,
        Handedness.LEFT_HANDED: Handedness.RIGHT_HANDED,
        Handedness.AMBIDEXTROUS: Handedness.AMBIDEXTROUS,
        Handedness.NOT_HANDED: Handedness.NOT_HANDED,
    }
    assert classify(adjoint(s)) is swap[classify(s)]


def test_handed_total_count_small():
    for k in range(1, 7):
        for s in enumerate_strings(k):
            if is_handed(s):
                assert count_a(s, 1, k) in (-1, 0, 1)
                if k >= 2:
                    assert count_a(s, 1, 1) == 1
                    assert count_a(s, k, k) == -1


def test_compose_is_concatenation():
    assert compose(S("ab"), S("a*b*")) == S("ab,a*b*")


@given(sig_strings, sig_strings)
def test_compose_adjoint_antihomomorphism(s1, s2):
    assert adjoint(compose(s1, s2)) == compose(adjoint(s2), adjoint(s1))


def test_right_compose_ambi_stays_right():
    rights = list(enumerate_strings(2, Handedness.RIGHT_HANDED))
    ambis = list(enumerate_strings(2, Handedness.AMBIDEXTROUS))
    for r in rights:
        for a in ambis:
            assert classify(compose(r, a)) is Handedness.RIGHT_HANDED


def test_composing_onto_right_handed_never_handed():
    for k1 in (1, 2):
        for k2 in (1, 2):
            for s1 in enumerate_strings(k1):
                for s2 in enumerate_strings(k2, Handedness.RIGHT_HANDED):
                    assert classify(compose(s1, s2)) is Handedness.NOT_HANDED


def test_split_points_examples():
    assert split_points(S("ab,a*b*")) == (1,)


def test_split_nonempty_and_typed():
    for k in range(2, 6):
        for s in enumerate_strings(k):
            if not is_handed(s):
                continue
            pts = split_points(s)
            assert pts
            for j in pts:
                left = classify(s.substring(1, j))
                right = classify(s.substring(j + 1, k))
                assert left in (Handedness.RIGHT_HANDED, Handedness.AMBIDEXTROUS)
                assert right in (Handedness.AMBIDEXTROUS, Handedness.LEFT_HANDED)
                if classify(s) is Handedness.AMBIDEXTROUS:
                    assert left is Handedness.RIGHT_HANDED
                    assert right is Handedness.LEFT_HANDED


def test_split_rejects_short_and_not_handed():
    with pytest.raises(ValueError):
        split_points(S("ab"))
    with pytest.raises(ValueError):
        split_points(S("a*b,ab"))


def test_enumerate_counts():
    assert len(list(enumerate_strings(1))) == 4
    assert len(list(enumerate_strings(2, Handedness.AMBIDEXTROUS))) == 2
    assert len(list(enumerate_strings(3, Handedness.AMBIDEXTROUS))) == 0


def test_enumerate_order_is_lexicographic():
    first = [format_string(s) for s in enumerate_strings(1)]
    assert first == ["ab", "ab*", "a*b", "a*b*"]


def test_enumerate_budget():
    with pytest.raises(BudgetError):
        list(enumerate_strings(11))


def test_parse_format_roundtrip():
    for text in ("ab", "ab,a*b*", "ab*,a*b,ab,a*b*"):
        assert format_string(parse_string(text)) == text
    with pytest.raises(ValueError):
        parse_string("ab,zz")
    with pytest.raises(ValueError):
        SigString(())
