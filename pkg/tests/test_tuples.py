import pytest
from hypothesis import given, settings, strategies as st

from fockblocks import BudgetError
from fockblocks.signatures import (
    SIGNATURES,
    SigString,
    compose,
    enumerate_strings,
    is_handed,
    parse_string,
)
from fockblocks.tuples import (
    BlockTuple,
    PSet,
    ambidextrous_substrings,
    canonical_tuple,
    enumerate_psets,
    enumerate_tuples,
    equivalent,
    format_tuple,
    markers,
    parse_tuple,
    subordinates,
    tuple_to_string,
)

sig_strings = st.lists(st.sampled_from(SIGNATURES), min_size=1, max_size=5).map(SigString)


def S(text):
    return parse_string(text)


def T(text, n):
    return parse_tuple(text, n)


def test_trivial_tuples_count():
    for k in range(1, 5):
        assert sum(1 for _ in enumerate_tuples(1, k)) == 4**k


def test_enumeration_order_is_stable():
    # ab;a*b and ab;a*b* are absent: those pairs merge into handed blocks
    first_six = [format_tuple(t) for t in list(enumerate_tuples(2, 2))[:6]]
    assert first_six == ["ab;ab", "ab;ab*", "ab*;ab", "ab*;ab*", "a*b;ab", "a*b;ab*"]


def test_example_pair_of_equivalent_tuples():
    t1 = T("ab,ab,a*b*;a*b*", 3)
    t2 = T("ab;ab,a*b*,a*b*", 3)
    everything = list(enumerate_tuples(3, 4))
    assert t1 in everything
    assert t2 in everything
    assert tuple_to_string(t1) == tuple_to_string(t2) == S("ab,ab,a*b*,a*b*")
    assert equivalent(t1, t2)


def test_blocks_must_be_handed_and_fit():
    with pytest.raises(ValueError):
        BlockTuple([S("a*b,ab")], 2)  # not handed
    with pytest.raises(ValueError):
        BlockTuple([S("ab,a*b*")], 1)  # too long
    with pytest.raises(ValueError):
        BlockTuple([S("ab"), S("a*b*")], 2)  # mergeable pair


def test_every_enumerated_block_is_handed():
    for t in enumerate_tuples(2, 3):
        for b in t:
            assert is_handed(b)


def test_tuple_budget():
    with pytest.raises(BudgetError):
        list(enumerate_tuples(2, 9))


def test_tuple_to_string_concatenates():
    assert tuple_to_string(T("ab;a*b*", 1)) == S("ab,a*b*")


def test_equivalence_is_reflexive():
    for t in enumerate_tuples(2, 3):
        assert equivalent(t, t)


def test_class_count_is_4_to_k():
    for n in (1, 2, 3):
        for k in range(1, 6):
            strings = {tuple_to_string(t) for t in enumerate_tuples(n, k)}
            assert len(strings) == 4**k


def test_canonical_tuple_examples():
    t = canonical_tuple(S("ab,a*b*"), 2)
    assert len(t) == 1 and t[0] == S("ab,a*b*")
    t1 = canonical_tuple(S("ab,a*b,ab*"), 1)
    assert all(len(b) == 1 for b in t1)


@given(sig_strings, st.integers(1, 3))
@settings(max_examples=60)
def test_canonical_tuple_roundtrip(s, n):
    t = canonical_tuple(s, n)
    assert tuple_to_string(t) == s
    assert t.max_block == n


def test_canonical_tuple_membership():
    for n in (2, 3):
        for k in range(1, 5):
            allowed = set(enumerate_tuples(n, k))
            for s in enumerate_strings(k):
                assert canonical_tuple(s, n) in allowed


def _all_merge_results(s, n):
    """Every tuple reachable by greedy merging in any order."""
    start = tuple(SigString((e,)) for e in s)
    seen = set()
    stack = [start]
    terminal = set()
    while stack:
        blocks = stack.pop()
        if blocks in seen:
            continue
        seen.add(blocks)
        options = []
        for i in range(len(blocks) - 1):
            merged = compose(blocks[i], blocks[i + 1])
            if len(merged) <= n and is_handed(merged):
                options.append(blocks[:i] + (merged,) + blocks[i + 2 :])
        if options:
            stack.extend(options)
        else:
            terminal.add(blocks)
    return terminal


def test_merge_order_immaterial_for_class():
    for k in range(1, 6):
        for s in enumerate_strings(k):
            for n in (2, 3):
                for blocks in _all_merge_results(s, n):
                    t = BlockTuple(blocks, n)
                    assert tuple_to_string(t) == s


def test_markers_examples():
    m = markers(T("ab;a*b*", 1))
    assert m.starts == {1} and m.ends == {2} and m.spans == set()
    m2 = markers(T("ab,a*b*", 2))
    assert m2.spans == {(1, 2)} and not m2.starts and not m2.ends


def test_markers_invariant_on_classes():
    for n in (2, 3):
        for k in range(2, 6):
            per_string = {}
            for t in enumerate_tuples(n, k):
                per_string.setdefault(tuple_to_string(t), set()).add(markers(t))
            for s, ms in per_string.items():
                assert len(ms) == 1, s


def test_marker_monotonicity_under_smaller_blocks():
    for k in range(2, 6):
        for s in enumerate_strings(k):
            by_n = {n: markers(canonical_tuple(s, n)) for n in (1, 2, 3)}
            for n, np_ in ((3, 2), (3, 1), (2, 1)):
                assert by_n[n].starts <= by_n[np_].starts
                assert by_n[n].ends <= by_n[np_].ends


def test_ambidextrous_substrings_examples():
    assert ambidextrous_substrings(S("ab,a*b*")) == {(1, 2)}
    assert ambidextrous_substrings(S("ab,ab")) == frozenset()


def test_nesting_or_disjoint():
    for k in range(2, 6):
        for s in enumerate_strings(k):
            ivs = sorted(ambidextrous_substrings(s))
            for a in range(len(ivs)):
                for b in range(a + 1, len(ivs)):
                    (i, ip), (j, jp) = ivs[a], ivs[b]
                    ra, rb = set(range(i, ip + 1)), set(range(j, jp + 1))
                    assert not (ra & rb) or ra < rb or rb < ra


def test_psets_top_level_is_only_empty():
    s = S("ab,a*b*,ab,a*b*")
    assert [u.intervals for u in enumerate_psets(s, 2, 2)] == [()]


def test_empty_pset_always_present():
    for k in range(2, 6):
        for s in enumerate_strings(k):
            for n in (1, 2):
                assert any(u.intervals == () for u in enumerate_psets(s, n, 3))


def test_pset_validation():
    s = S("ab,a*b*,ab,a*b*")
    with pytest.raises(ValueError):
        PSet(s, 1, 2, ((1, 3),))  # not an ambidextrous interval
    with pytest.raises(ValueError):
        PSet(s, 2, 2, ((1, 2),))  # length outside (n, N]
    with pytest.raises(ValueError):
        PSet(s, 1, 4, ((1, 2), (1, 4)))  # overlap


def test_pset_complement_structure():
    s = S("ab,a*b*,ab,a*b*")
    u = PSet(s, 1, 2, ((1, 2),))
    assert u.complement() == ((1, 0), (3, 4))
    full = PSet(s, 1, 2, ((1, 2), (3, 4)))
    assert full.complement() == ((1, 0), (3, 2), (5, 4))
    assert PSet(s, 1, 2, ()).complement() == ((1, 4),)


def test_subordination_partition():
    for k in range(2, 7):
        for s in enumerate_strings(k):
            for n in (1, 2):
                level_n = sorted(u.intervals for u in enumerate_psets(s, n, 3))
                refined = []
                for u0 in enumerate_psets(s, n + 1, 3):
                    for u in subordinates(u0):
                        assert u.is_subordinate_to(u0)
                        refined.append(u.intervals)
                assert sorted(refined) == level_n


def test_tuple_text_roundtrip():
    text = "ab,a*b*;a*b*"
    assert format_tuple(parse_tuple(text, 2)) == text


def test_tuple_json_schema():
    t = parse_tuple("ab;ab,a*b*,a*b*", 3)
    payload = t.to_json()
    assert payload["blocks"] == ["ab", "ab,a*b*,a*b*"]
    assert payload["handedness"] == ["right", "left"]
    assert payload["markers"] == {"B": [1], "E": [4], "A": []}
