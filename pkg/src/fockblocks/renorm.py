"""Recursive renormalized blocks, self-energies, and resolvent expansions.

Blocks are built by splitting a handed string into a right-handed-or-balanced
prefix and a balanced-or-left-handed suffix, sandwiching a free resolvent,
and subtracting the vacuum expectation at spectral parameter zero whenever
the string is ambidextrous.  Summands chain blocks with free resolvents; the
reordered expansion sums one summand per tuple class and must reproduce the
directly inverted resolvent of the counter-term-shifted Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .fock import FockSystem, interaction_term
from .signatures import (
    Handedness,
    SigString,
    Signature,
    adjoint,
    classify,
    count_a,
    count_b,
    enumerate_strings,
    format_string,
    split_points,
)
from .tuples import BlockTuple, PSet, canonical_tuple, enumerate_psets, subordinates
from .wick import self_energy_oracle

#: max |entry| of the vacuum row tolerated when a zero-energy resolvent is
#: applied; the row is an exact zero for every legal operand.
_VACUUM_ROW_TOL = 1e-10


def opnorm(m: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class BlockHandle:
    """A built block together with its bare version and counter-term when the
    string is ambidextrous."""

    string: SigString
    z: complex
    operator: np.ndarray
    bare_operator: Optional[np.ndarray] = None
    counterterm: Optional[complex] = None


@dataclass
class SeriesReport:
    """Per-order bookkeeping of a reordered resolvent expansion."""

    order: int
    z: complex
    k_max: int
    term_norms: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    geometric_rate: Optional[float] = None
    converged: bool = True
    residual_vs_direct: Optional[float] = None

    def fit_rate(self):
        norms = [n for n in self.term_norms if n > 0]
        if len(norms) >= 2:
            logs = np.log(norms)
            ks = np.arange(len(logs))
            slope = np.polyfit(ks, logs, 1)[0]
            self.geometric_rate = float(np.exp(slope))
        return self.geometric_rate

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "z": [self.z.real, self.z.imag],
            "k_max": self.k_max,
            "term_norms": self.term_norms,
            "ratios": self.ratios,
            "geometric_rate": self.geometric_rate,
            "converged": self.converged,
            "residual_vs_direct": self.residual_vs_direct,
        }


class BlockEngine:
    """Builds blocks, summands, counter-terms, and resolvents on one system.

    Blocks are memoized per (string, z); the cache is only ever appended to,
    so concurrent readers are safe and all results are deterministic.
    """

    def __init__(self, system: FockSystem):
        self.system = system
        self.h0 = system.h0_diag
        self.dim = system.dimension
        self.vac = system.vacuum_index
        self._interactions: Dict[Signature, np.ndarray] = {}
        self._blocks: Dict[tuple, np.ndarray] = {}

    # -- primitives ------------------------------------------------------------

    def interaction(self, sig: Signature) -> np.ndarray:
        if sig not in self._interactions:
            mat = interaction_term(
                self.system.basis, sig, self.system.kernels.for_signature(sig)
            )
            self._interactions[sig] = mat.toarray()
        return self._interactions[sig]

    def r0_diag(self, z: complex) -> np.ndarray:
        """Diagonal of the free resolvent; at z = 0 the vacuum entry is left
        zero and every use is guarded by the vacuum-row check."""
        z = complex(z)
        if z.real > 0:
            raise ValueError("free resolvent needs Re z <= 0")
        if z == 0:
            r = np.zeros(self.dim, dtype=complex)
            nonzero = self.h0 != 0
            r[nonzero] = 1.0 / self.h0[nonzero]
            return r
        return 1.0 / (self.h0 - z)

    def r0_matrix(self, z: complex) -> np.ndarray:
        return np.diag(self.r0_diag(z))

    def _sandwich(self, left: np.ndarray, right: np.ndarray, z: complex) -> np.ndarray:
        """left @ R0(z) @ right.  At z = 0 the vacuum row of the right factor
        vanishes identically for every legal operand (its sector shift can
        never reach the vacuum), which the guard asserts."""
        z = complex(z)
        r = self.r0_diag(z)
        if z == 0:
            row = np.max(np.abs(right[self.vac, :]))
            scale = max(1.0, float(np.max(np.abs(right))))
            if row > _VACUUM_ROW_TOL * scale:
                raise RuntimeError(
                    "zero-energy resolvent applied to an operator with a "
                    "non-vanishing vacuum row"
                )
        return left @ (r[:, None] * right)

    # -- blocks ------------------------------------------------------------------

    def block(self, s, z: complex, split: Optional[int] = None) -> np.ndarray:
        """The renormalized block of a handed string at Re z <= 0.

        ``split`` forces the top-level split point (used by the
        split-independence check); sub-blocks always use the smallest split.
        """
        s = SigString(s)
        z = complex(z)
        if z.real > 0:
            raise ValueError("blocks are defined for Re z <= 0")
        cls = classify(s)
        if cls is Handedness.NOT_HANDED:
            raise ValueError(f"{format_string(s)} is not handed")
        key = (tuple(s), z, split)
        if key in self._blocks:
            return self._blocks[key]
        if len(s) == 1:
            mat = -self.interaction(s[0])
        else:
            j = split if split is not None else split_points(s)[0]
            if j not in split_points(s):
                raise ValueError(f"{j} is not a split point of {format_string(s)}")
            mat = self._bare(s, z, j)
            if cls is Handedness.AMBIDEXTROUS:
                bare0 = self._bare(s, 0.0, j)
                mat = mat - bare0[self.vac, self.vac] * np.eye(self.dim, dtype=complex)
        self._blocks[key] = mat
        return mat

    def _bare(self, s: SigString, z: complex, j: int) -> np.ndarray:
        left = self.block(s.substring(1, j), z)
        right = self.block(s.substring(j + 1, len(s)), z)
        return self._sandwich(left, right, z)

    def bare_block(self, s, z: complex, split: Optional[int] = None) -> np.ndarray:
        s = SigString(s)
        if classify(s) is not Handedness.AMBIDEXTROUS:
            raise ValueError("bare blocks are kept only for ambidextrous strings")
        j = split if split is not None else split_points(s)[0]
        return self._bare(s, complex(z), j)

    def block_handle(self, s, z: complex) -> BlockHandle:
        s = SigString(s)
        op = self.block(s, z)
        if classify(s) is Handedness.AMBIDEXTROUS:
            bare = self.bare_block(s, z)
            return BlockHandle(s, complex(z), op, bare, self.counterterm(s))
        return BlockHandle(s, complex(z), op)

    # -- self-energy ---------------------------------------------------------------

    def counterterm(self, s) -> complex:
        """Self-energy of one ambidextrous string: minus the vacuum
        expectation of its bare block at z = 0."""
        s = SigString(s)
        if classify(s) is not Handedness.AMBIDEXTROUS:
            raise ValueError(
                f"self-energy needs an ambidextrous string, got {format_string(s)}"
            )
        bare0 = self.bare_block(s, 0.0)
        return -complex(bare0[self.vac, self.vac])

    self_energy = counterterm

    def total_self_energy(self, order: int) -> complex:
        """Sum of the counter-terms of every ambidextrous string of even
        length up to ``order``."""
        total = 0.0 + 0.0j
        for two_ell in range(2, order + 1, 2):
            for s in enumerate_strings(two_ell, Handedness.AMBIDEXTROUS):
                total += self.counterterm(s)
        return total

    def counterterm_oracle(self, s) -> complex:
        """Same counter-term from the contraction-diagram quadrature; never
        touches the matrix representation."""
        cfg = self.system.config
        return self_energy_oracle(
            SigString(s), self.system.kernels, self.system.grid, cfg.m_b, cfg.m_f
        )

    # -- summands and resolvents -----------------------------------------------------

    def summand(self, t: BlockTuple, z: complex) -> np.ndarray:
        """Alternating product R0 (block R0)^ell over the tuple's blocks."""
        z = complex(z)
        if z.real >= 0:
            raise ValueError("summands need Re z < 0")
        r = self.r0_diag(z)
        out = np.diag(r)
        for blk in t:
            out = (out @ self.block(blk, z)) * r[None, :]
        return out

    def raw_neumann_term(self, k: int, z: complex) -> np.ndarray:
        """R0 (-H_I R0)^k on the truncated space."""
        z = complex(z)
        r = self.r0_diag(z)
        hi = self.system.h_i.toarray()
        out = np.diag(r)
        for _ in range(k):
            out = (out @ (-hi)) * r[None, :]
        return out

    def direct_resolvent(self, order: int, z: complex) -> np.ndarray:
        """Inverse of (H - E^(order) - z) by dense solve."""
        z = complex(z)
        h = self.system.h_lambda().toarray()
        shift = self.total_self_energy(order) + z
        return np.linalg.inv(h - shift * np.eye(self.dim, dtype=complex))

    def order_term(self, order: int, k: int, z: complex) -> np.ndarray:
        """Aggregate of all kernel-order-k summands, one per tuple class."""
        term = np.zeros((self.dim, self.dim), dtype=complex)
        for s in enumerate_strings(k):
            term += self.summand(canonical_tuple(s, order), z)
        return term

    def reordered_resolvent(
        self, order: int, z: complex, k_max: int
    ) -> Tuple[np.ndarray, SeriesReport]:
        """Partial sum of the reordered expansion, one summand per tuple
        class, with per-order norms recorded."""
        z = complex(z)
        report = SeriesReport(order=order, z=z, k_max=k_max)
        total = self.r0_matrix(z)
        for k in range(1, k_max + 1):
            term = self.order_term(order, k, z)
            total += term
            report.term_norms.append(opnorm(term))
        for a, b in zip(report.term_norms, report.term_norms[1:]):
            if a > 0:
                report.ratios.append(b / a)
            else:
                # a truncated series that already died counts as convergent
                report.ratios.append(0.0 if b == 0 else float("inf"))
        report.converged = all(r < 1.0 for r in report.ratios)
        report.fit_rate()
        return total, report

    # -- interval summands (counter-term insertions) -----------------------------------

    def interval_summand(self, s, u: PSet, n: int, z: complex) -> np.ndarray:
        """Counter-term scalars on the intervals of u times the chained
        summands over its complement; empty gaps contribute bare resolvents."""
        s = SigString(s)
        z = complex(z)
        scalar = 1.0 + 0.0j
        for (j, jp) in u.intervals:
            scalar *= self.counterterm(s.substring(j, jp))
        out = None
        for (l, lp) in u.complement():
            if l > lp:
                factor = self.r0_matrix(z)
            else:
                sub = s.substring(l, lp)
                factor = self.summand(canonical_tuple(sub, n), z)
            out = factor if out is None else out @ factor
        return scalar * out

    def verify_resummation_step(self, s, n: int, order: int, u0: PSet, z: complex) -> float:
        """Residual of one resummation step: the level-(n+1) interval summand
        against the sum of its level-n subordinates."""
        if u0.n != n + 1 or u0.N != order:
            raise ValueError("u0 must live at level n+1 of the same order")
        lhs = self.interval_summand(s, u0, n + 1, z)
        rhs = np.zeros_like(lhs)
        for u in subordinates(u0):
            rhs += self.interval_summand(s, u, n, z)
        return opnorm(lhs - rhs)

    def reordering_identity_residual(self, order: int, k: int, z: complex) -> float:
        """Residual, at kernel order k, of the raw expansion with counter-term
        insertions against the reordered expansion."""
        raw = np.zeros((self.dim, self.dim), dtype=complex)
        reordered = np.zeros((self.dim, self.dim), dtype=complex)
        for s in enumerate_strings(k):
            for u in enumerate_psets(s, 1, order):
                raw += self.interval_summand(s, u, 1, z)
            reordered += self.summand(canonical_tuple(s, order), z)
        return opnorm(raw - reordered)

    # -- verification helpers ------------------------------------------------------------

    def intertwine_residuals(self, s, z: complex) -> Tuple[float, float]:
        """Residuals of the number intertwining relations.

        A block built from a string with net annihilator counts (na, nb)
        lowers the boson number by na and the fermion number by nb, so
        N_b T = T (N_b - na) and likewise for fermions.  Exact on the
        truncated space: the ladder operators shift sectors even at the cap.
        """
        s = SigString(s)
        t = self.block(s, z)
        na = count_a(s, 1, len(s))
        nb = count_b(s, 1, len(s))
        nb_diag = np.array([float(sum(bocc)) for bocc, _ in self.system.basis.states])
        nf_diag = np.array(
            [float(bin(f).count("1")) for _, f in self.system.basis.states]
        )
        res_boson = opnorm(nb_diag[:, None] * t - t * (nb_diag - na)[None, :])
        res_fermion = opnorm(nf_diag[:, None] * t - t * (nf_diag - nb)[None, :])
        return res_boson, res_fermion

    def split_independence(self, s, z: complex) -> Optional[float]:
        """Max pairwise norm discrepancy of the block over all split choices;
        None when the split is forced."""
        s = SigString(s)
        pts = split_points(s)
        if len(pts) < 2:
            return None
        mats = [self.block(s, z, split=j) for j in pts]
        worst = 0.0
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                worst = max(worst, opnorm(mats[i] - mats[j]))
        return worst

    verify_split_independence = split_independence
    intertwine_check = intertwine_residuals

    def adjoint_residual(self, s, z: complex) -> float:
        """Norm of block(s, z)^dagger - block(s*, conj z); the signature table
        supplies the conjugated kernels on the adjoint side."""
        s = SigString(s)
        left = self.block(s, z).conj().T
        right = self.block(adjoint(s), np.conj(complex(z)))
        return opnorm(left - right)

    def vacuum_expectation(self, mat: np.ndarray) -> complex:
        return complex(mat[self.vac, self.vac])

    def ground_energy(self) -> float:
        """Smallest eigenvalue of the cutoff Hamiltonian."""
        return self.system.ground_energy()


def adaptive_threshold(
    engine: BlockEngine,
    order: int,
    k_max: int = 6,
    tail_target: float = 1e-7,
    z_start: float = -1.0,
    max_doublings: int = 40,
    probe_orders: Tuple[int, ...] = (1, 2, 3),
) -> complex:
    """Smallest probed Re z (by doubling) with per-order ratio < 1/2 over the
    probed orders and a projected tail below the target."""
    if len(probe_orders) < 2:
        raise ValueError("need at least two probe orders to estimate a ratio")
    z = complex(z_start)
    for _ in range(max_doublings):
        norms = [opnorm(engine.order_term(order, k, z)) for k in probe_orders]
        if all(n > 0 for n in norms[:-1]):
            rate = max(b / a for a, b in zip(norms, norms[1:]))
            if rate < 0.5:
                tail = norms[-1] * rate ** (k_max - probe_orders[-1] + 1) / (1.0 - rate)
                if tail < tail_target:
                    return z
        else:
            return z  # interaction vanishes; any z works
        z = complex(2 * z.real, z.imag)
    raise RuntimeError("no convergent spectral parameter found by doubling")
