"""Signature strings: the four-letter alphabet labelling interaction factors.

Every interaction factor carries one boson operator (``a`` or ``a*``) and one
fermion operator (``b`` or ``b*``); a signature names the pair.  Strings of
signatures label operator products, and the handedness classification singles
out the strings whose products remain regular at spectral parameter zero.
Right-handed strings end in net annihilation, left-handed ones start in net
creation, ambidextrous ones are balanced in both species.
"""

from __future__ import annotations

from enum import Enum
from itertools import product
from typing import Iterable, Iterator, Optional

from .errors import BudgetError

MAX_STRING_LENGTH = 10


class Signature(Enum):
    AB = "ab"
    AB_STAR = "ab*"
    ASTAR_B = "a*b"
    ASTAR_BSTAR = "a*b*"

    def __repr__(self):
        return self.value


#: Lexicographic enumeration order: ab < ab* < a*b < a*b*.
SIGNATURES = (Signature.AB, Signature.AB_STAR, Signature.ASTAR_B, Signature.ASTAR_BSTAR)

# +1 when the factor carries an annihilator of the species, -1 for a creator.
_N_A = {
    Signature.AB: +1,
    Signature.AB_STAR: +1,
    Signature.ASTAR_B: -1,
    Signature.ASTAR_BSTAR: -1,
}
_N_B = {
    Signature.AB: +1,
    Signature.ASTAR_B: +1,
    Signature.AB_STAR: -1,
    Signature.ASTAR_BSTAR: -1,
}
_ADJOINT = {
    Signature.AB: Signature.ASTAR_BSTAR,
    Signature.ASTAR_BSTAR: Signature.AB,
    Signature.AB_STAR: Signature.ASTAR_B,
    Signature.ASTAR_B: Signature.AB_STAR,
}


def n_a(sig: Signature) -> int:
    """+1 if the signature carries a boson annihilator, -1 for a creator."""
    return _N_A[sig]


def n_b(sig: Signature) -> int:
    """+1 if the signature carries a fermion annihilator, -1 for a creator."""
    return _N_B[sig]


def sig_adjoint(sig: Signature) -> Signature:
    return _ADJOINT[sig]


class Handedness(Enum):
    RIGHT_HANDED = "right"
    LEFT_HANDED = "left"
    AMBIDEXTROUS = "ambidextrous"
    NOT_HANDED = "not-handed"


class SigString(tuple):
    """Immutable signature string of length >= 1."""

    def __new__(cls, entries: Iterable[Signature]):
        entries = tuple(entries)
        if not entries:
            raise ValueError("signature string must have length >= 1")
        for e in entries:
            if not isinstance(e, Signature):
                raise TypeError(f"not a Signature: {e!r}")
        return super().__new__(cls, entries)

    def substring(self, j: int, jp: int) -> "SigString":
        """Entries j..jp, 1-based and inclusive."""
        _check_range(self, j, jp)
        return SigString(tuple.__getitem__(self, slice(j - 1, jp)))

    def __repr__(self):
        return f"SigString({format_string(self)!r})"

    def __str__(self):
        return format_string(self)


def _check_range(s, j, jp):
    if not (1 <= j <= jp <= len(s)):
        raise IndexError(f"index range ({j},{jp}) out of bounds for length {len(s)}")


def count_a(s: SigString, j: int, jp: int) -> int:
    """Net boson annihilator count over entries j..jp (1-based, inclusive)."""
    _check_range(s, j, jp)
    return sum(_N_A[e] for e in tuple.__getitem__(s, slice(j - 1, jp)))


def count_b(s: SigString, j: int, jp: int) -> int:
    """Net fermion annihilator count over entries j..jp (1-based, inclusive)."""
    _check_range(s, j, jp)
    return sum(_N_B[e] for e in tuple.__getitem__(s, slice(j - 1, jp)))


def adjoint(s: SigString) -> SigString:
    """Entrywise adjoint followed by reversal; an involution."""
    return SigString(tuple(_ADJOINT[e] for e in reversed(s)))


def compose(s1: SigString, s2: SigString) -> SigString:
    return SigString(tuple(s1) + tuple(s2))


def is_handed(s: SigString) -> bool:
    """Prefix/suffix positivity pattern, with the strict interior condition
    when both total counts vanish.

    Direct O(k^2) scan; lengths stay tiny so clarity wins over incremental
    counters.
    """
    k = len(s)
    if k == 1:
        return True
    for i in range(1, k):
        na = count_a(s, 1, i)
        if na < 0:
            return False
        if na == 0 and count_b(s, 1, i) < 0:
            return False
    for i in range(2, k + 1):
        na = count_a(s, i, k)
        if na > 0:
            return False
        if na == 0 and count_b(s, i, k) > 0:
            return False
    if k >= 3 and count_a(s, 1, k) == 0 and count_b(s, 1, k) == 0:
        # balanced strings must stay strictly away from the vacuum channel
        # at every interior cut
        for i in range(2, k):
            if count_a(s, 1, i) == 0 and count_b(s, 1, i) <= 0:
                return False
    return True


def classify(s: SigString) -> Handedness:
    if not is_handed(s):
        return Handedness.NOT_HANDED
    na = count_a(s, 1, len(s))
    nb = count_b(s, 1, len(s))
    if na == 0 and nb == 0:
        return Handedness.AMBIDEXTROUS
    if na == 1 or (na == 0 and nb > 0):
        return Handedness.RIGHT_HANDED
    if na == -1 or (na == 0 and nb < 0):
        return Handedness.LEFT_HANDED
    raise AssertionError(f"handed string with |total count| > 1: {s}")


def split_points(s: SigString) -> tuple:
    """All cut positions j where the prefix is right-handed or ambidextrous
    and the suffix is ambidextrous or left-handed.

    Nonempty for every handed string of length >= 2; length-1 strings and
    non-handed strings are domain errors.
    """
    if len(s) < 2:
        raise ValueError("split is defined for strings of length >= 2")
    if not is_handed(s):
        raise ValueError(f"split requires a handed string, got {format_string(s)}")
    pts = []
    for j in range(1, len(s)):
        left = classify(s.substring(1, j))
        right = classify(s.substring(j + 1, len(s)))
        if left in (Handedness.RIGHT_HANDED, Handedness.AMBIDEXTROUS) and right in (
            Handedness.AMBIDEXTROUS,
            Handedness.LEFT_HANDED,
        ):
            pts.append(j)
    return tuple(pts)


def enumerate_strings(
    k: int, handedness: Optional[Handedness] = None
) -> Iterator[SigString]:
    """All 4**k strings of length k in lexicographic order, optionally
    filtered by classification."""
    if k < 1:
        raise ValueError("string length must be >= 1")
    if k > MAX_STRING_LENGTH:
        raise BudgetError(f"string enumeration capped at k <= {MAX_STRING_LENGTH}")
    for entries in product(SIGNATURES, repeat=k):
        s = SigString(entries)
        if handedness is None or classify(s) is handedness:
            yield s


# --- text form used by the CLI and JSON reports ------------------------------

_TOKEN_TO_SIG = {sig.value: sig for sig in SIGNATURES}


def parse_signature(token: str) -> Signature:
    try:
        return _TOKEN_TO_SIG[token.strip()]
    except KeyError:
        raise ValueError(f"unknown signature token {token!r}") from None


def parse_string(text: str) -> SigString:
    """Parse the comma-separated token form, e.g. ``"ab,a*b*"``."""
    return SigString(parse_signature(tok) for tok in text.split(","))


def format_string(s: Iterable[Signature]) -> str:
    return ",".join(e.value for e in s)
