"""Batch command-line driver.

Subcommands: enumerate, verify, counterterms, resolvent-compare,
sweep-lambda, chi-independence.  Every emitted file starts with a metadata
header carrying the resolved config and a version string; given the same
config and seed the outputs are byte-identical across runs.

Exit codes: 0 success, 2 config error, 3 invariant failure, 4 budget
exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BudgetError, ConfigError
from .fock import FockSystem, export_matrix_market
from .model import CHI_PROFILES, ModelConfig
from .renorm import BlockEngine, SeriesReport, adaptive_threshold, opnorm
from .signatures import Handedness, classify, enumerate_strings, format_string
from .tuples import enumerate_tuples, tuple_to_string
from .verify import run_verification
from .wick import order2_counterterm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_BUDGET = 4


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"fockblocks-{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"fockblocks-{__version__}"


def _metadata(cfg: ModelConfig | None, args=None, **extra) -> dict:
    meta = {"version": version_string()}
    if cfg is not None:
        meta["config"] = cfg.to_json()
    if args is not None:
        meta["seed"] = args.seed
    meta.update(extra)
    return meta


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12e}"
    if isinstance(value, complex):
        return f"{value.real:.12e}{value.imag:+.12e}j"
    return str(value)


def write_csv(path: Path, meta: dict, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(args) -> ModelConfig:
    if args.config is None:
        return ModelConfig().validate()
    return ModelConfig.from_file(args.config)


# --- subcommands -------------------------------------------------------------


def cmd_enumerate(args) -> int:
    cfg = _load_config(args)
    k, n = args.k, args.n
    counts = {h: 0 for h in Handedness}
    for s in enumerate_strings(k):
        counts[classify(s)] += 1
    class_strings = set()
    n_tuples = 0
    for t in enumerate_tuples(n, k):
        n_tuples += 1
        class_strings.add(tuple_to_string(t))
    bijection_ok = len(class_strings) == 4**k
    report = {
        "meta": _metadata(cfg, args, k=k, n=n),
        "strings": {
            "total": 4**k,
            "right": counts[Handedness.RIGHT_HANDED],
            "left": counts[Handedness.LEFT_HANDED],
            "ambidextrous": counts[Handedness.AMBIDEXTROUS],
            "not_handed": counts[Handedness.NOT_HANDED],
        },
        "tuples": {
            "count": n_tuples,
            "classes": len(class_strings),
            "expected_classes": 4**k,
            "bijection_ok": bijection_ok,
        },
    }
    out = Path(args.out) / f"enumerate_k{k}_n{n}.json"
    write_json(out, report)
    print(f"strings of length {k}: {4 ** k}")
    for label, key in (
        ("right-handed", "right"),
        ("left-handed", "left"),
        ("ambidextrous", "ambidextrous"),
        ("not handed", "not_handed"),
    ):
        print(f"  {label:14s} {report['strings'][key]}")
    print(f"tuples (max block {n}): {n_tuples}, classes {len(class_strings)}")
    print(f"bijection classes == 4^k: {'PASS' if bijection_ok else 'FAIL'}")
    print(f"wrote {out}")
    return EXIT_OK if bijection_ok else EXIT_INVARIANT


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    results = run_verification(cfg)
    failures = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = f" ({r.detail})" if r.detail else ""
        print(f"[{status}] {r.name}{detail}")
    report = {
        "meta": _metadata(cfg, args),
        "checks": [r.to_json() for r in results],
        "failures": [r.name for r in failures],
    }
    write_json(Path(args.out) / "verify_report.json", report)
    return EXIT_OK if not failures else EXIT_INVARIANT


def cmd_counterterms(args) -> int:
    cfg = _load_config(args)
    system = FockSystem.from_config(cfg)
    engine = BlockEngine(system)
    rows = []
    total = 0.0 + 0.0j
    for two_ell in range(2, args.order + 1, 2):
        for s in enumerate_strings(two_ell, Handedness.AMBIDEXTROUS):
            e_matrix = engine.counterterm(s)
            e_oracle = engine.counterterm_oracle(s)
            total += e_matrix
            rows.append(
                (
                    format_string(s),
                    two_ell,
                    e_matrix.real,
                    e_matrix.imag,
                    e_oracle.real,
                    abs(e_matrix - e_oracle),
                )
            )
    e2_quad = order2_counterterm(
        np.conj(system.kernels.g2),
        system.kernels.g2,
        system.grid,
        cfg.m_b,
        cfg.m_f,
        denominator=args.denominator,
    )
    # truncation error estimate: rerun the total with one more boson allowed
    raised = dataclasses.replace(cfg, boson_max=cfg.boson_max + 1)
    total_raised = BlockEngine(FockSystem.from_config(raised)).total_self_energy(args.order)
    meta = _metadata(
        cfg,
        args,
        order=args.order,
        total_self_energy=[total.real, total.imag],
        order2_quadrature=[e2_quad.real, e2_quad.imag],
        denominator=args.denominator,
        cap_sensitivity=abs(total - total_raised),
    )
    out = Path(args.out) / "counterterms.csv"
    write_csv(
        out,
        meta,
        ["string", "length", "re_matrix", "im_matrix", "re_oracle", "abs_diff"],
        rows,
    )
    print(f"total self-energy through order {args.order}: {total.real:.10e}")
    print(f"order-2 quadrature ({args.denominator} denominator): {e2_quad.real:.10e}")
    print(f"boson-cap sensitivity (cap {cfg.boson_max} vs {cfg.boson_max + 1}): "
          f"{abs(total - total_raised):.3e}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_resolvent_compare(args) -> int:
    cfg = _load_config(args)
    system = FockSystem.from_config(cfg)
    engine = BlockEngine(system)
    z = adaptive_threshold(engine, args.order, k_max=args.k_max)
    direct = engine.direct_resolvent(args.order, z)
    report = SeriesReport(order=args.order, z=z, k_max=args.k_max)
    partial = engine.r0_matrix(z)
    rows = []
    for k in range(1, args.k_max + 1):
        term = engine.order_term(args.order, k, z)
        partial = partial + term
        report.term_norms.append(opnorm(term))
        rows.append((k, report.term_norms[-1], opnorm(partial - direct)))
    for a, b in zip(report.term_norms, report.term_norms[1:]):
        report.ratios.append(b / a if a > 0 else (0.0 if b == 0 else float("inf")))
    report.converged = all(r < 1.0 for r in report.ratios)
    report.fit_rate()
    report.residual_vs_direct = rows[-1][2] if rows else 0.0
    meta = _metadata(cfg, args, order=args.order, k_max=args.k_max, z=[z.real, z.imag])
    out = Path(args.out) / "resolvent_compare.csv"
    write_csv(out, meta, ["k", "term_norm", "cumulative_residual"], rows)
    write_json(Path(args.out) / "series_report.json", {"meta": meta, "series": report.to_json()})
    print(f"z = {z}, residual vs direct = {report.residual_vs_direct:.3e}")
    print(f"per-order ratios: {['%.3f' % r for r in report.ratios]}")
    if args.dump_ops:
        export_matrix_market(Path(args.out) / "h_lambda.mtx", system.h_lambda())
        export_matrix_market(Path(args.out) / "reordered_resolvent.mtx", partial)
        print(f"dumped operators to {args.out}")
    print(f"wrote {out}")
    if not report.converged:
        print("WARNING: per-order ratios not below one; expansion flagged non-convergent")
        return EXIT_INVARIANT
    return EXIT_OK


def _parse_lambdas(text: str):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad lambda list {text!r}") from None
    if not values:
        raise ConfigError("lambda list must be non-empty")
    return values


def _resolvent_at(cfg: ModelConfig, lam: float, order: int, chi: str = None):
    override = dataclasses.replace(cfg, Lambda=lam)
    if chi is not None:
        override = dataclasses.replace(override, chi_choice=chi)
    system = FockSystem.from_config(override)
    engine = BlockEngine(system)
    e_n = engine.total_self_energy(order)
    return system, engine, e_n


def cmd_sweep_lambda(args) -> int:
    cfg = _load_config(args)
    lambdas = _parse_lambdas(args.lambdas)
    if cfg.grid_halfwidth < max(lambdas):
        raise ConfigError(
            "grid halfwidth must reach the largest cutoff; otherwise the "
            "cutoff saturates on the grid and the sweep is vacuous"
        )

    def point(lam):
        system, engine, e_n = _resolvent_at(cfg, lam, args.order)
        return lam, system, engine, e_n

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        points = list(pool.map(point, lambdas))
    bound = max(sys_.c_lambda() + abs(e_n) for _, sys_, _, e_n in points)
    z = complex(min(cfg.z_complex.real, -1.0 - bound), cfg.z_complex.imag)
    resolvents = {}
    energy_rows = []
    for lam, system, engine, e_n in points:
        resolvents[lam] = engine.direct_resolvent(args.order, z)
        energy_rows.append(("energy", lam, lam, system.ground_energy(), e_n.real))
    residual_rows = []
    residuals = []
    for l1, l2 in zip(lambdas, lambdas[1:]):
        r = opnorm(resolvents[l1] - resolvents[l2])
        residuals.append(r)
        residual_rows.append(("resolvent_residual", l1, l2, r, 0.0))
    monotone = all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    meta = _metadata(
        cfg,
        args,
        order=args.order,
        lambdas=lambdas,
        z=[z.real, z.imag],
        residual_nonincreasing=monotone,
    )
    out = Path(args.out) / "sweep_lambda.csv"
    write_csv(
        out,
        meta,
        ["kind", "lambda_1", "lambda_2", "value", "self_energy"],
        residual_rows + energy_rows,
    )
    for row in residual_rows:
        print(f"|R({row[1]}) - R({row[2]})| = {row[3]:.6e}")
    flag = "" if monotone else "  <-- flagged for review"
    print(f"residual trend non-increasing: {monotone}{flag}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_chi_independence(args) -> int:
    cfg = _load_config(args)
    for chi in (args.chi1, args.chi2):
        if chi not in CHI_PROFILES:
            raise ConfigError(f"unknown chi profile {chi!r}")
    lambdas = _parse_lambdas(args.lambdas)
    if cfg.grid_halfwidth < max(lambdas):
        raise ConfigError("grid halfwidth must reach the largest cutoff")

    def point(lam):
        sys1, eng1, e1 = _resolvent_at(cfg, lam, args.order, args.chi1)
        sys2, eng2, e2 = _resolvent_at(cfg, lam, args.order, args.chi2)
        bound = max(sys1.c_lambda() + abs(e1), sys2.c_lambda() + abs(e2))
        z = complex(min(cfg.z_complex.real, -1.0 - bound), cfg.z_complex.imag)
        r = opnorm(eng1.direct_resolvent(args.order, z) - eng2.direct_resolvent(args.order, z))
        return lam, z, r

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(point, lambdas))
    residuals = [r for _, _, r in rows]
    decreasing = all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    meta = _metadata(
        cfg,
        args,
        order=args.order,
        chi1=args.chi1,
        chi2=args.chi2,
        lambdas=lambdas,
        residual_decreasing=decreasing,
    )
    out = Path(args.out) / "chi_independence.csv"
    write_csv(
        out,
        meta,
        ["lambda", "re_z", "im_z", "residual"],
        [(lam, z.real, z.imag, r) for lam, z, r in rows],
    )
    for lam, _, r in rows:
        print(f"Lambda = {lam}: |R_chi1 - R_chi2| = {r:.6e}")
    flag = "" if decreasing else "  <-- flagged for review"
    print(f"residual trend decreasing: {decreasing}{flag}")
    print(f"wrote {out}")
    return EXIT_OK


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockblocks",
        description="signature-string calculus and self-energy renormalization "
        "experiments on truncated Fock spaces",
    )
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--config", default=None, help="model config JSON path")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size for sweeps")
    parser.add_argument("--seed", type=int, default=0, help="seed recorded in metadata")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="string and tuple census with bijection verdict")
    p.add_argument("--k", type=int, required=True, help="string length")
    p.add_argument("--n", type=int, required=True, help="max block length")
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("verify", help="run the invariant suite against a config")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("counterterms", help="self-energies per string, matrix vs oracle")
    p.add_argument("--order", type=int, default=4)
    p.add_argument(
        "--denominator",
        choices=["corrected", "printed"],
        default="corrected",
        help="denominator variant for the order-2 quadrature",
    )
    p.set_defaults(fn=cmd_counterterms)

    p = sub.add_parser("resolvent-compare", help="reordered expansion vs direct inverse")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--k-max", dest="k_max", type=int, default=6)
    p.add_argument("--dump-ops", action="store_true", help="write Matrix Market dumps")
    p.set_defaults(fn=cmd_resolvent_compare)

    p = sub.add_parser("sweep-lambda", help="resolvent Cauchy residuals across cutoffs")
    p.add_argument("--lambdas", required=True, help="comma-separated cutoff list")
    p.add_argument("--order", type=int, default=2)
    p.set_defaults(fn=cmd_sweep_lambda)

    p = sub.add_parser("chi-independence", help="residuals between two cutoff profiles")
    p.add_argument("--chi1", default="indicator")
    p.add_argument("--chi2", default="cos_bump")
    p.add_argument("--lambdas", required=True)
    p.add_argument("--order", type=int, default=2)
    p.set_defaults(fn=cmd_chi_independence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
