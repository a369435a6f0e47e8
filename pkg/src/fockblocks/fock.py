"""Truncated boson (x) fermion Fock space and the cutoff Hamiltonian.

Basis states pair a boson occupation vector (total number capped) with a
fermion occupation bit per mode.  Boson mode operators satisfy the canonical
commutation relations below the cap; fermion operators carry the sign string
of modes ordered by grid index, so the anti-commutation relations hold
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite

from .errors import ConfigError
from .model import (
    KernelSet,
    ModelConfig,
    MomentumGrid,
    build_kernels,
    dispersion_a,
    dispersion_b,
)
from .signatures import SIGNATURES, Signature, n_a, n_b


def _boson_configs(n_modes: int, cap: int) -> List[Tuple[int, ...]]:
    """All occupation tuples with total <= cap, ordered by total then lex."""
    configs = [()]
    for _ in range(n_modes):
        configs = [c + (n,) for c in configs for n in range(cap - sum(c) + 1)]
    configs.sort(key=lambda c: (sum(c), c))
    return configs


@dataclass(frozen=True)
class FockBasis:
    grid: MomentumGrid
    boson_max: int
    states: tuple          # ((boson occupation tuple, fermion bitmask), ...)
    index: dict            # state -> position; vacuum sits at 0

    @classmethod
    def build(cls, grid: MomentumGrid, boson_max: int) -> "FockBasis":
        n = grid.n_modes
        states = tuple(
            (b, f) for b in _boson_configs(n, boson_max) for f in range(2**n)
        )
        index = {st: i for i, st in enumerate(states)}
        return cls(grid, boson_max, states, index)

    @property
    def n_modes(self) -> int:
        return self.grid.n_modes

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def vacuum_index(self) -> int:
        return self.index[((0,) * self.n_modes, 0)]


def _jw_sign(fbits: int, mode: int) -> int:
    """(-1)**(number of occupied modes below ``mode``)."""
    below = fbits & ((1 << mode) - 1)
    return -1 if bin(below).count("1") % 2 else 1


def _apply_boson(bocc, mode, create, cap):
    """Occupation tuple and amplitude after a/a* on one mode; None if killed."""
    n = bocc[mode]
    if create:
        if sum(bocc) >= cap:  # truncation: states above the cap are cut
            return None
        return bocc[:mode] + (n + 1,) + bocc[mode + 1 :], np.sqrt(n + 1.0)
    if n == 0:
        return None
    return bocc[:mode] + (n - 1,) + bocc[mode + 1 :], np.sqrt(float(n))


def _apply_fermion(fbits, mode, create):
    occupied = (fbits >> mode) & 1
    if create:
        if occupied:
            return None
        return fbits | (1 << mode), float(_jw_sign(fbits, mode))
    if not occupied:
        return None
    return fbits & ~(1 << mode), float(_jw_sign(fbits, mode))


def _mode_operator(basis: FockBasis, species: str, mode: int, create: bool):
    rows, cols, vals = [], [], []
    for col, (bocc, fbits) in enumerate(basis.states):
        if species == "boson":
            res = _apply_boson(bocc, mode, create, basis.boson_max)
            if res is None:
                continue
            new_state, amp = (res[0], fbits), res[1]
        else:
            res = _apply_fermion(fbits, mode, create)
            if res is None:
                continue
            new_state, amp = (bocc, res[0]), res[1]
        rows.append(basis.index[new_state])
        cols.append(col)
        vals.append(amp)
    return sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(basis.dimension, basis.dimension),
    )


@dataclass(frozen=True)
class OperatorFamily:
    """Per-mode ladder operators plus the two number operators."""

    a: tuple
    adag: tuple
    b: tuple
    bdag: tuple
    n_boson: sp.csr_matrix
    n_fermion: sp.csr_matrix


def build_operators(basis: FockBasis) -> OperatorFamily:
    n = basis.n_modes
    a = tuple(_mode_operator(basis, "boson", i, create=False) for i in range(n))
    adag = tuple(_mode_operator(basis, "boson", i, create=True) for i in range(n))
    b = tuple(_mode_operator(basis, "fermion", i, create=False) for i in range(n))
    bdag = tuple(_mode_operator(basis, "fermion", i, create=True) for i in range(n))
    nb = sp.diags([float(sum(bocc)) for bocc, _ in basis.states], format="csr").astype(complex)
    nf = sp.diags([float(bin(f).count("1")) for _, f in basis.states], format="csr").astype(complex)
    return OperatorFamily(a, adag, b, bdag, nb, nf)


def h0_diagonal(basis: FockBasis, m_b: float, m_f: float) -> np.ndarray:
    """Free energies per basis state."""
    omega_a = dispersion_a(basis.grid.points, m_b)
    omega_b = dispersion_b(basis.grid.points, m_f)
    diag = np.empty(basis.dimension)
    for i, (bocc, fbits) in enumerate(basis.states):
        e = float(np.dot(omega_a, bocc))
        for mode in range(basis.n_modes):
            if (fbits >> mode) & 1:
                e += omega_b[mode]
        diag[i] = e
    return diag


def build_h0(basis: FockBasis, m_b: float, m_f: float) -> sp.csr_matrix:
    return sp.diags(h0_diagonal(basis, m_b, m_f), format="csr").astype(complex)


def interaction_term(basis: FockBasis, sig: Signature, coupling: np.ndarray) -> sp.csr_matrix:
    """One interaction term: sum over modes of coupling[i, j] times the
    fermion operator at mode i and the boson operator at mode j, species and
    starring dictated by the signature."""
    n = basis.n_modes
    if coupling.shape != (n, n):
        raise ConfigError(f"coupling shape {coupling.shape} does not match {n} modes")
    boson_create = n_a(sig) < 0
    fermion_create = n_b(sig) < 0
    rows, cols, vals = [], [], []
    for col, (bocc, fbits) in enumerate(basis.states):
        for j in range(n):
            res_b = _apply_boson(bocc, j, boson_create, basis.boson_max)
            if res_b is None:
                continue
            new_bocc, amp_b = res_b
            for i in range(n):
                res_f = _apply_fermion(fbits, i, fermion_create)
                if res_f is None:
                    continue
                new_fbits, amp_f = res_f
                rows.append(basis.index[(new_bocc, new_fbits)])
                cols.append(col)
                vals.append(coupling[i, j] * amp_b * amp_f)
    return sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(basis.dimension, basis.dimension),
    )


def build_hi(basis: FockBasis, kernels: KernelSet) -> sp.csr_matrix:
    """Full interaction: the four terms with their conjugate-paired kernels;
    Hermitian by construction."""
    total = sp.csr_matrix((basis.dimension, basis.dimension), dtype=complex)
    for sig in SIGNATURES:
        total = total + interaction_term(basis, sig, kernels.for_signature(sig))
    return total


def c_lambda_bound(kernels: KernelSet, grid: MomentumGrid, m_b: float) -> float:
    """Lower-bound constant: the cutoff Hamiltonian satisfies H >= -C."""
    omega_q = dispersion_a(grid.points, m_b)
    w = (1.0 + 1.0 / omega_q)[None, :]
    return float(1.0 + np.sum(w * (np.abs(kernels.g1) ** 2 + np.abs(kernels.g2) ** 2)))


def export_matrix_market(path, matrix) -> None:
    """Dump an operator in Matrix Market text form for external cross-checks."""
    mmwrite(str(path), sp.coo_matrix(matrix))


@dataclass(frozen=True)
class FockSystem:
    """Everything the renormalization engine needs, assembled once."""

    config: ModelConfig
    grid: MomentumGrid
    basis: FockBasis
    kernels: KernelSet
    h0_diag: np.ndarray
    h_i: sp.csr_matrix

    @classmethod
    def from_config(cls, cfg: ModelConfig, kernels: KernelSet = None) -> "FockSystem":
        cfg.validate()
        grid = cfg.grid()
        basis = FockBasis.build(grid, cfg.boson_max)
        if kernels is None:
            kernels = build_kernels(cfg, grid)
        return cls(
            config=cfg,
            grid=grid,
            basis=basis,
            kernels=kernels,
            h0_diag=h0_diagonal(basis, cfg.m_b, cfg.m_f),
            h_i=build_hi(basis, kernels),
        )

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def vacuum_index(self) -> int:
        return self.basis.vacuum_index

    def h_lambda(self) -> sp.csr_matrix:
        return sp.diags(self.h0_diag, format="csr").astype(complex) + self.h_i

    def c_lambda(self) -> float:
        return c_lambda_bound(self.kernels, self.grid, self.config.m_b)

    def ground_energy(self) -> float:
        h = self.h_lambda()
        if self.dimension < 2000:
            return float(np.linalg.eigvalsh(h.toarray())[0])
        from scipy.sparse.linalg import eigsh

        val = eigsh(h, k=1, which="SA", return_eigenvectors=False)
        return float(val[0].real)
