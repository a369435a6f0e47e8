"""Invariant suite behind the ``verify`` subcommand.

Moderate budgets: the exhaustive sweeps live in the test suite; this runs a
fast cross-section of every module against one model configuration so batch
users can validate an installation or a config before long sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .fock import FockSystem
from .model import ModelConfig
from .renorm import BlockEngine, adaptive_threshold, opnorm
from .signatures import (
    Handedness,
    adjoint,
    classify,
    compose,
    enumerate_strings,
    is_handed,
    parse_string,
    split_points,
)
from .tuples import PSet, enumerate_psets, enumerate_tuples, markers, subordinates, tuple_to_string
from .wick import order2_counterterm


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _check(results: List[CheckResult], name: str, fn: Callable[[], str]):
    try:
        detail = fn() or ""
        results.append(CheckResult(name, True, detail))
    except Exception as exc:  # noqa: BLE001 - every failure becomes a report row
        results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))


def _require(cond: bool, msg: str):
    if not cond:
        raise AssertionError(msg)


def run_verification(cfg: ModelConfig) -> List[CheckResult]:
    results: List[CheckResult] = []

    # --- combinatorics, small budgets ---------------------------------------

    def strings_involution():
        for k in range(1, 5):
            for s in enumerate_strings(k):
                _require(adjoint(adjoint(s)) == s, f"involution broken on {s}")
                swap = {
                    Handedness.RIGHT_HANDED: Handedness.LEFT_HANDED,
                    Handedness.LEFT_HANDED: Handedness.RIGHT_HANDED,
                    Handedness.AMBIDEXTROUS: Handedness.AMBIDEXTROUS,
                    Handedness.NOT_HANDED: Handedness.NOT_HANDED,
                }
                _require(
                    classify(adjoint(s)) is swap[classify(s)],
                    f"adjoint does not swap handedness on {s}",
                )
        return "k <= 4"

    _check(results, "strings: involution and handedness swap", strings_involution)

    def composition_rules():
        cls = {}
        for k in range(1, 6):
            for s in enumerate_strings(k):
                cls[s] = classify(s)
        for k1 in range(1, 4):
            for k2 in range(1, 6 - k1):
                for s1 in enumerate_strings(k1):
                    for s2 in enumerate_strings(k2):
                        c1, c2, c12 = cls[s1], cls[s2], cls[compose(s1, s2)]
                        if c1 is Handedness.RIGHT_HANDED and c2 is Handedness.AMBIDEXTROUS:
                            _require(c12 is Handedness.RIGHT_HANDED, f"{s1}*{s2}")
                        if c1 is Handedness.AMBIDEXTROUS and c2 is Handedness.LEFT_HANDED:
                            _require(c12 is Handedness.LEFT_HANDED, f"{s1}*{s2}")
                        if c2 is Handedness.RIGHT_HANDED:
                            _require(c12 is Handedness.NOT_HANDED, f"{s1}*{s2}")
                        if c1 is Handedness.LEFT_HANDED:
                            _require(c12 is Handedness.NOT_HANDED, f"{s1}*{s2}")
        return "combined length <= 5"

    _check(results, "strings: composition and exclusion rules", composition_rules)

    def split_properties():
        for k in range(2, 5):
            for s in enumerate_strings(k):
                if not is_handed(s):
                    continue
                pts = split_points(s)
                _require(len(pts) > 0, f"empty split on {s}")
                for j in pts:
                    left = classify(s.substring(1, j))
                    right = classify(s.substring(j + 1, k))
                    if classify(s) is Handedness.AMBIDEXTROUS:
                        _require(
                            left is Handedness.RIGHT_HANDED
                            and right is Handedness.LEFT_HANDED,
                            f"bad split factors on {s}",
                        )
        return "k <= 4"

    _check(results, "strings: split decomposition", split_properties)

    def tuple_bijection():
        for n in (1, 2):
            for k in range(1, 5):
                strings = {tuple_to_string(t) for t in enumerate_tuples(n, k)}
                _require(len(strings) == 4**k, f"class count off for n={n} k={k}")
        return "n <= 2, k <= 4"

    _check(results, "tuples: class count equals 4^k", tuple_bijection)

    def marker_invariance():
        for n in (2, 3):
            for k in range(2, 5):
                by_string = {}
                for t in enumerate_tuples(n, k):
                    by_string.setdefault(tuple_to_string(t), set()).add(markers(t))
                for s, ms in by_string.items():
                    _require(len(ms) == 1, f"markers differ inside class of {s}")
        return "n <= 3, k <= 4"

    _check(results, "tuples: markers constant on classes", marker_invariance)

    def pset_partition():
        for k in range(2, 6):
            for s in enumerate_strings(k):
                for n in (1, 2):
                    big = enumerate_psets(s, n, 3)
                    seen = []
                    for u0 in enumerate_psets(s, n + 1, 3):
                        seen.extend(subordinates(u0))
                    _require(
                        sorted(u.intervals for u in big)
                        == sorted(u.intervals for u in seen),
                        f"partition broken for {s} at n={n}",
                    )
        return "k <= 5, N = 3"

    _check(results, "intervals: subordination partition", pset_partition)

    # --- numerics on the configured model -------------------------------------

    try:
        system = FockSystem.from_config(cfg)
        engine = BlockEngine(system)
    except Exception as exc:  # pragma: no cover - config already validated
        results.append(CheckResult("numerics: system assembly", False, str(exc)))
        return results

    # above a few hundred states the dense block products dominate; the
    # expansion checks then run on reduced scopes, noted in the details
    light = system.dimension > 300
    scope = f"dim {system.dimension}" + (", reduced scope" if light else "")

    def hermitian():
        h = system.h_lambda().toarray()
        dev = float(np.max(np.abs(h - h.conj().T)))
        _require(dev < 1e-12, f"H deviates from Hermitian by {dev:.2e}")
        return f"max deviation {dev:.2e}"

    _check(results, "numerics: cutoff Hamiltonian Hermitian", hermitian)

    def lower_bound():
        e0 = system.ground_energy()
        c = system.c_lambda()
        _require(e0 >= -c - 1e-10, f"ground energy {e0} below -C = {-c}")
        return f"E = {e0:.6f} >= -C = {-c:.6f}"

    _check(results, "numerics: ground energy above -C", lower_bound)

    def block_identities():
        z = complex(cfg.z_complex)
        if z == 0:
            z = -1.0 + 0.0j
        worst = 0.0
        for k in (1, 2) if light else (1, 2, 3):
            for s in enumerate_strings(k):
                if not is_handed(s):
                    continue
                rb, rf = engine.intertwine_residuals(s, z)
                worst = max(worst, rb, rf)
                worst = max(worst, engine.adjoint_residual(s, z))
        for s in enumerate_strings(2, Handedness.AMBIDEXTROUS):
            worst = max(worst, abs(engine.vacuum_expectation(engine.block(s, 0.0))))
        _require(worst < 1e-12, f"block identity residual {worst:.2e}")
        return f"worst residual {worst:.2e}, {scope}"

    _check(results, "numerics: block intertwining / adjoint / subtraction", block_identities)

    def split_independence_check():
        z = -1.5 + 0.3j
        worst = 0.0
        checked = 0
        for s in enumerate_strings(4):
            if not is_handed(s):
                continue
            d = engine.split_independence(s, z)
            if d is not None:
                worst = max(worst, d)
                checked += 1
                if light and checked >= 2:
                    break
        _require(worst < 1e-12, f"split dependence {worst:.2e}")
        return f"worst discrepancy {worst:.2e} over {checked} strings, {scope}"

    _check(results, "numerics: split independence (length 4)", split_independence_check)

    def order2_oracle():
        s = parse_string("ab,a*b*")
        e_engine = engine.counterterm(s)
        e_quad = order2_counterterm(
            np.conj(system.kernels.g2), system.kernels.g2, system.grid, cfg.m_b, cfg.m_f
        )
        diff = abs(e_engine - e_quad)
        scale = max(abs(e_engine), abs(e_quad), 1e-30)
        _require(diff <= 1e-10 * scale + 1e-14, f"order-2 mismatch {diff:.2e}")
        return f"E2 = {e_engine.real:.10e}"

    _check(results, "numerics: order-2 counter-term oracle", order2_oracle)

    probe = (1, 2) if light else (1, 2, 3)
    ks = (1, 2) if light else (1, 2, 3)

    def neumann_termwise():
        z = -4.0 + 0.0j
        worst = 0.0
        for k in ks:
            term = engine.order_term(1, k, z)
            worst = max(worst, opnorm(term - engine.raw_neumann_term(k, z)))
        _require(worst < 1e-12, f"termwise residual {worst:.2e}")
        return f"worst residual {worst:.2e} for k <= {ks[-1]}"

    _check(results, "numerics: order-1 expansion is the raw series", neumann_termwise)

    def reordered_vs_direct():
        k_max = 2 if light else 4
        z = adaptive_threshold(engine, 2, k_max=k_max, probe_orders=probe)
        total, report = engine.reordered_resolvent(2, z, k_max)
        direct = engine.direct_resolvent(2, z)
        resid = opnorm(total - direct)
        _require(report.converged, "per-order ratios not below one")
        _require(resid < 1e-6, f"residual vs direct {resid:.2e}")
        return f"residual {resid:.2e} at z = {z}, k_max = {k_max}"

    _check(results, "numerics: reordered expansion matches direct resolvent", reordered_vs_direct)

    def resummation_step():
        z = -2.5 + 0.0j
        s = parse_string("ab,a*b*,ab,a*b*")
        resid = engine.verify_resummation_step(s, 1, 2, PSet(s, 2, 2, ()), z)
        _require(resid < 1e-10, f"resummation residual {resid:.2e}")
        return f"residual {resid:.2e}"

    _check(results, "numerics: resummation step", resummation_step)

    return results
