"""Wick contraction patterns and fully contracted diagram evaluation.

A contraction pattern records, for a product of interaction factors with
resolvents in between, which boson/fermion operators stay uncontracted and
how the contracted ones pair up.  Fully contracted patterns evaluate to pure
numbers: momentum sums of kernel products over energy denominators.  These
sums are the independent oracle for the self-energy counter-terms that the
matrix engine produces by vacuum pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product as iproduct
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetError
from .model import KernelSet, MomentumGrid, dispersion_a, dispersion_b
from .signatures import (
    Handedness,
    SigString,
    Signature,
    classify,
    format_string,
    n_a,
    n_b,
    split_points,
)

MAX_PATTERN_LENGTH = 8


def _perm_parity(seq: Sequence[int]) -> int:
    """Parity (+1/-1) of the permutation written as a sequence of distinct ints."""
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


def fermion_sign(n: int, f_b: Sequence[Tuple[int, int]], j_b: Iterable[int], j_bstar: Iterable[int]) -> int:
    """Sign of one normal-ordered term relative to the position-ordered product.

    Contracted pairs are pulled adjacent in order of their annihilators, then
    the surviving creators and annihilators are sorted ascending (creators
    left).  Only fermion transpositions contribute; bosons commute freely.
    """
    target: List[int] = []
    for i, j in sorted(f_b):
        target.extend((i, j))
    target.extend(sorted(j_bstar))
    target.extend(sorted(j_b))
    if len(target) != n:
        raise ValueError("fermion content must cover every position exactly once")
    return _perm_parity(target)


@dataclass(frozen=True)
class ContractionPattern:
    """Index bookkeeping of one normal-ordered term.

    j_* are the uncontracted positions per species and starring; f_a / f_b map
    contracted annihilator positions to the later creator positions they pair
    with; slots are the resolvent positions (between factor t and t+1).
    """

    n: int
    j_a: tuple
    j_astar: tuple
    j_b: tuple
    j_bstar: tuple
    f_a: tuple  # sorted ((i, f_a(i)), ...)
    f_b: tuple
    slots: tuple
    sign: int

    def __post_init__(self):
        full = set(range(1, self.n + 1))
        for fmap, jann, jcre, label in (
            (self.f_a, self.j_a, self.j_astar, "boson"),
            (self.f_b, self.j_b, self.j_bstar, "fermion"),
        ):
            ann, cre = set(jann), set(jcre)
            if ann & cre:
                raise ValueError(f"{label} annihilator/creator sets overlap")
            lows = [i for i, _ in fmap]
            highs = [j for _, j in fmap]
            if len(set(lows)) != len(lows) or len(set(highs)) != len(highs):
                raise ValueError(f"{label} pairing is not injective")
            if any(j <= i for i, j in fmap):
                raise ValueError(f"{label} pairing must point forward")
            covered = ann | cre | set(lows) | set(highs)
            if covered != full or len(ann) + len(cre) + 2 * len(fmap) != self.n:
                raise ValueError(f"{label} sets do not partition the positions")
        if any(not (1 <= t <= self.n - 1) for t in self.slots):
            raise ValueError("resolvent slots live between the factors")

    @property
    def contracted_a(self) -> tuple:
        return tuple(i for i, _ in self.f_a)

    @property
    def contracted_b(self) -> tuple:
        return tuple(i for i, _ in self.f_b)

    def is_fully_contracted(self) -> bool:
        return not (self.j_a or self.j_astar or self.j_b or self.j_bstar)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "J_a": list(self.j_a),
            "J_a*": list(self.j_astar),
            "J_b": list(self.j_b),
            "J_b*": list(self.j_bstar),
            "f_a": [list(p) for p in self.f_a],
            "f_b": [list(p) for p in self.f_b],
            "slots": list(self.slots),
            "sign": self.sign,
        }


def pattern_signature(p: ContractionPattern) -> SigString:
    """The unique signature string with these annihilator/creator positions."""
    a_ann = set(p.j_a) | {i for i, _ in p.f_a}
    b_ann = set(p.j_b) | {i for i, _ in p.f_b}
    entries = []
    for i in range(1, p.n + 1):
        if i in a_ann:
            entries.append(Signature.AB if i in b_ann else Signature.AB_STAR)
        else:
            entries.append(Signature.ASTAR_B if i in b_ann else Signature.ASTAR_BSTAR)
    return SigString(entries)


def _partial_matchings(annihilators: Sequence[int], creators: Sequence[int]):
    """All ways to pair a subset of annihilators with later creators, as
    sorted tuples of (i, j) pairs.  Deterministic order."""
    out = []
    ann = sorted(annihilators)
    cre = sorted(creators)
    for r in range(0, min(len(ann), len(cre)) + 1):
        for chosen in combinations(ann, r):
            legal_targets = [[c for c in cre if c > i] for i in chosen]
            for perm in permutations(cre, r):
                if all(perm[t] in legal_targets[t] for t in range(r)):
                    out.append(tuple(sorted(zip(chosen, perm))))
    seen = set()
    unique = []
    for m in out:
        if m not in seen:
            seen.add(m)
            unique.append(m)
    return unique


def patterns_for(s: SigString) -> List[ContractionPattern]:
    """Every contraction pattern whose signature is s, with full resolvent
    slots; the uncontracted sets are determined by s, the pairings range over
    all forward matchings of each species independently."""
    k = len(s)
    if k > MAX_PATTERN_LENGTH:
        raise BudgetError(f"pattern enumeration capped at length {MAX_PATTERN_LENGTH}")
    a_ann = [i for i in range(1, k + 1) if n_a(s[i - 1]) > 0]
    a_cre = [i for i in range(1, k + 1) if n_a(s[i - 1]) < 0]
    b_ann = [i for i in range(1, k + 1) if n_b(s[i - 1]) > 0]
    b_cre = [i for i in range(1, k + 1) if n_b(s[i - 1]) < 0]
    slots = tuple(range(1, k))
    out = []
    for f_a in _partial_matchings(a_ann, a_cre):
        paired_a = {i for i, _ in f_a} | {j for _, j in f_a}
        for f_b in _partial_matchings(b_ann, b_cre):
            paired_b = {i for i, _ in f_b} | {j for _, j in f_b}
            j_a = tuple(i for i in a_ann if i not in paired_a)
            j_astar = tuple(i for i in a_cre if i not in paired_a)
            j_b = tuple(i for i in b_ann if i not in paired_b)
            j_bstar = tuple(i for i in b_cre if i not in paired_b)
            out.append(
                ContractionPattern(
                    n=k,
                    j_a=j_a,
                    j_astar=j_astar,
                    j_b=j_b,
                    j_bstar=j_bstar,
                    f_a=f_a,
                    f_b=f_b,
                    slots=slots,
                    sign=fermion_sign(k, f_b, j_b, j_bstar),
                )
            )
    return out


# --- diagrams -------------------------------------------------------------------


def slot_terms(p: ContractionPattern) -> Dict[int, list]:
    """Symbolic energy denominator per slot: the contraction lines crossing it."""
    terms = {}
    for t in p.slots:
        entry = []
        for i, j in p.f_a:
            if i <= t < j:
                entry.append(("a", i))
        for i, j in p.f_b:
            if i <= t < j:
                entry.append(("b", i))
        terms[t] = entry
    return terms


@dataclass(frozen=True)
class Diagram:
    """A fully contracted pattern together with its symbolic denominators."""

    pattern: ContractionPattern
    denominators: tuple  # ((slot, (("a", i) | ("b", i), ...)), ...)

    def to_json(self) -> dict:
        return {
            "pattern": self.pattern.to_json(),
            "denominators": [
                {"slot": t, "lines": [list(x) for x in lines]}
                for t, lines in self.denominators
            ],
        }


def fully_contracted(s: SigString) -> List[Diagram]:
    """All fully contracted diagrams of the string; empty unless both species
    balance."""
    out = []
    for p in patterns_for(s):
        if p.is_fully_contracted():
            terms = slot_terms(p)
            out.append(Diagram(p, tuple((t, tuple(terms[t])) for t in p.slots)))
    return out


def evaluate_diagram(
    diagram: Diagram,
    kernels: KernelSet,
    grid: MomentumGrid,
    m_b: float,
    m_f: float,
    z: complex = 0.0,
    slot_exponents: Optional[Dict[int, int]] = None,
) -> complex:
    """Momentum sum of one fully contracted diagram.

    Each contraction line carries one free mode index; each position
    contributes its signature's kernel entry; each slot contributes the
    inverse of (crossing line energies - z), raised to the slot exponent.
    The value is this diagram's contribution to the vacuum expectation of the
    operator product.
    """
    p = diagram.pattern
    if not p.is_fully_contracted():
        raise ValueError("only fully contracted diagrams evaluate to numbers")
    return _contracted_sum(p, pattern_signature(p), kernels, grid, m_b, m_f, z, slot_exponents)


def _contracted_sum(p, sigs, kernels, grid, m_b, m_f, z, slot_exponents):
    omega_a = dispersion_a(grid.points, m_b)
    omega_b = dispersion_b(grid.points, m_f)
    if slot_exponents is None:
        slot_exponents = {t: 1 for t in p.slots}
    a_lines = list(p.f_a)
    b_lines = list(p.f_b)
    boson_line_of = {}
    for idx, (i, j) in enumerate(a_lines):
        boson_line_of[i] = idx
        boson_line_of[j] = idx
    fermion_line_of = {}
    for idx, (i, j) in enumerate(b_lines):
        fermion_line_of[i] = idx
        fermion_line_of[j] = idx
    kmats = [kernels.for_signature(sig) for sig in sigs]
    n_modes = grid.n_modes
    total = 0.0 + 0.0j
    for a_modes in iproduct(range(n_modes), repeat=len(a_lines)):
        for b_modes in iproduct(range(n_modes), repeat=len(b_lines)):
            amp = 1.0 + 0.0j
            for pos in range(1, p.n + 1):
                ki = b_modes[fermion_line_of[pos]]
                qj = a_modes[boson_line_of[pos]]
                amp *= kmats[pos - 1][ki, qj]
            for t, e in slot_exponents.items():
                if e == 0:
                    continue
                r = 0.0
                for i, j in a_lines:
                    if i <= t < j:
                        r += omega_a[a_modes[boson_line_of[i]]]
                for i, j in b_lines:
                    if i <= t < j:
                        r += omega_b[b_modes[fermion_line_of[i]]]
                denom = r - z
                if denom == 0:
                    raise RuntimeError(
                        "zero energy denominator in a fully contracted diagram"
                    )
                amp /= denom**e
            total += amp
    return p.sign * total


# --- products of patterns ---------------------------------------------------------


def normal_order_product(p1: ContractionPattern, p2: ContractionPattern) -> List[ContractionPattern]:
    """All patterns arising when the product (p1, resolvent, p2) is normal
    ordered: a subset of p1's uncontracted annihilators pairs with p2's
    uncontracted creators, species by species."""
    n = p1.n + p2.n
    if n > MAX_PATTERN_LENGTH:
        raise BudgetError(f"pattern products capped at length {MAX_PATTERN_LENGTH}")
    m = p1.n
    shift = lambda xs: tuple(x + m for x in xs)
    shift_pairs = lambda ps: tuple((i + m, j + m) for i, j in ps)
    j_astar2 = shift(p2.j_astar)
    j_bstar2 = shift(p2.j_bstar)
    slots = tuple(sorted(set(p1.slots) | {m} | {t + m for t in p2.slots}))
    out = []
    for new_a in _partial_matchings(p1.j_a, j_astar2):
        paired_a = {i for i, _ in new_a} | {j for _, j in new_a}
        for new_b in _partial_matchings(p1.j_b, j_bstar2):
            paired_b = {i for i, _ in new_b} | {j for _, j in new_b}
            f_a = tuple(sorted(p1.f_a + shift_pairs(p2.f_a) + new_a))
            f_b = tuple(sorted(p1.f_b + shift_pairs(p2.f_b) + new_b))
            j_b = tuple(sorted([i for i in p1.j_b if i not in paired_b] + list(shift(p2.j_b))))
            j_bstar = tuple(sorted(list(p1.j_bstar) + [j for j in j_bstar2 if j not in paired_b]))
            out.append(
                ContractionPattern(
                    n=n,
                    j_a=tuple(sorted([i for i in p1.j_a if i not in paired_a] + list(shift(p2.j_a)))),
                    j_astar=tuple(sorted(list(p1.j_astar) + [j for j in j_astar2 if j not in paired_a])),
                    j_b=j_b,
                    j_bstar=j_bstar,
                    f_a=f_a,
                    f_b=f_b,
                    slots=slots,
                    sign=fermion_sign(n, f_b, j_b, j_bstar),
                )
            )
    return out


# --- the counter-term oracle -------------------------------------------------------


def order2_counterterm(
    kernel1: np.ndarray,
    kernel2: np.ndarray,
    grid: MomentumGrid,
    m_b: float,
    m_f: float,
    denominator: str = "corrected",
) -> complex:
    """Leading counter-term quadrature for a balanced length-2 product.

    kernel1 / kernel2 are the position kernels (conjugation already applied).
    ``corrected`` uses the fermion-plus-boson denominator that the vacuum
    expectation forces; ``printed`` uses a fermion-fermion denominator kept
    for comparison.
    """
    omega_k = dispersion_b(grid.points, m_f)[:, None]
    if denominator == "corrected":
        denom = omega_k + dispersion_a(grid.points, m_b)[None, :]
    elif denominator == "printed":
        denom = omega_k + dispersion_b(grid.points, m_f)[None, :]
    else:
        raise ValueError("denominator must be 'corrected' or 'printed'")
    return complex(-np.sum(kernel1 * kernel2 / denom))


@dataclass(frozen=True)
class ChainTerm:
    """One flattened term of a block expansion.

    positions are the surviving original factor positions; exps holds the
    resolvent powers before, between, and after them (len(positions)+1
    entries).  Scalar terms have no positions and a single exponent.
    """

    coeff: complex
    positions: tuple
    exps: tuple

    def __post_init__(self):
        if len(self.exps) != len(self.positions) + 1:
            raise ValueError("need one exponent slot more than positions")


def _combine(t1: ChainTerm, t2: ChainTerm) -> ChainTerm:
    joined = t1.exps[:-1] + (t1.exps[-1] + 1 + t2.exps[0],) + t2.exps[1:]
    return ChainTerm(t1.coeff * t2.coeff, t1.positions + t2.positions, joined)


def _chain_value(
    term: ChainTerm,
    base: SigString,
    kernels: KernelSet,
    grid: MomentumGrid,
    m_b: float,
    m_f: float,
) -> complex:
    """Vacuum expectation of one chain term at spectral parameter zero."""
    if term.exps[0] != 0 or term.exps[-1] != 0:
        raise RuntimeError("resolvent power hits the vacuum at the chain boundary")
    if not term.positions:
        return 1.0 + 0.0j
    sigs = [base[pos - 1] for pos in term.positions]
    reduced = SigString(sigs)
    inner = {t + 1: e for t, e in enumerate(term.exps[1:-1])}
    total = 0.0 + 0.0j
    for p in patterns_for(reduced):
        if p.is_fully_contracted():
            total += _contracted_sum(p, sigs, kernels, grid, m_b, m_f, 0.0, inner)
    return total


def _expand_block(
    full: SigString,
    lo: int,
    hi: int,
    bare: bool,
    kernels: KernelSet,
    grid: MomentumGrid,
    m_b: float,
    m_f: float,
) -> List[ChainTerm]:
    """Flatten the recursive block over positions lo..hi of the full string
    into chain terms.

    Renormalized ambidextrous sub-blocks contribute their bare terms plus a
    scalar term carrying minus the vacuum expectation, which merges the
    neighboring resolvents into a higher power.
    """
    if lo == hi:
        return [ChainTerm(-1.0 + 0.0j, (lo,), (0, 0))]
    sub = full.substring(lo, hi)
    j = split_points(sub)[0]
    left = _expand_block(full, lo, lo + j - 1, False, kernels, grid, m_b, m_f)
    right = _expand_block(full, lo + j, hi, False, kernels, grid, m_b, m_f)
    terms = [_combine(l, r) for l in left for r in right]
    if not bare and classify(sub) is Handedness.AMBIDEXTROUS:
        c = sum(t.coeff * _chain_value(t, full, kernels, grid, m_b, m_f) for t in terms)
        terms = terms + [ChainTerm(-c, (), (0,))]
    return terms


def self_energy_oracle(
    s: SigString,
    kernels: KernelSet,
    grid: MomentumGrid,
    m_b: float,
    m_f: float,
) -> complex:
    """Counter-term of an ambidextrous string by expanding the block recursion
    into diagrams and summing their momentum quadratures.

    Independent of the matrix engine: no Fock basis is ever built.
    """
    if classify(s) is not Handedness.AMBIDEXTROUS:
        raise ValueError(f"self-energy needs an ambidextrous string, got {format_string(s)}")
    terms = _expand_block(s, 1, len(s), True, kernels, grid, m_b, m_f)
    value = sum(t.coeff * _chain_value(t, s, kernels, grid, m_b, m_f) for t in terms)
    return -value
