"""Command-line entry point: ``bosoncert <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 domain error,
4 failed check.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import report
from .correlators import ALL_SPECIES, parse_species
from .errors import BenchError, ConfigError, DomainError
from .experiments import (
    ExperimentConfig,
    parse_modes,
    run_histogram,
    run_oracle_check,
    run_scatter,
    run_sweep,
)
from .rmt import rmt_moments, rmt_statistics
from .stats import DEFAULT_K, certify, cloud_summary
from .unitary import RngSeed, extract_submatrix, haar_unitary, matrix_to_json

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_CHECK = 0, 2, 3, 4
PERTURBATION = 1e-6


def _species_list(values) -> tuple:
    if not values or "all" in values:
        return ALL_SPECIES
    out = []
    for v in values:
        for part in v.split(","):
            s = parse_species(part)
            if s not in out:
                out.append(s)
    return tuple(out)


def _config(args, default_m: str) -> ExperimentConfig:
    bins = getattr(args, "bins", "fd")
    if isinstance(bins, str) and bins.isdigit():
        bins = int(bins)
    return ExperimentConfig(
        n=args.particles,
        m_values=parse_modes(args.modes or default_m),
        trials=getattr(args, "trials", 1),
        species=_species_list(args.species),
        seed=args.seed,
        k=args.k,
        reuse_circuit=args.reuse_circuit,
        repetitions=getattr(args, "repetitions", 1),
        bins=bins,
    )


def _print(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------- commands

def cmd_predict(args) -> int:
    species = _species_list(args.species)
    records = []
    for m in parse_modes(args.modes or "120"):
        for s in species:
            t = rmt_moments(s, args.particles, m)
            st = rmt_statistics(s, args.particles, m)
            records.append({"species": s.value, "n": args.particles, "m": m,
                            "m1": t.m1, "m2": t.m2, "m3": t.m3,
                            "nm": st.nm, "cv": st.cv, "s": st.s})
    _print(report.dumps(records))
    if args.out:
        prov = report.provenance("predict", {"n": args.particles, "m": args.modes,
                                             "species": [s.value for s in species]}, None)
        report.write_json(Path(args.out) / "predictions.json",
                          {"provenance": prov, "predictions": records})
    return EXIT_OK


def cmd_histogram(args) -> int:
    config = _config(args, "120")
    result = run_histogram(config)
    prov = report.provenance("histogram", config.echo(), config.seed)
    report.write_histogram(result, Path(args.out), prov)
    for s, st in result.statistics.items():
        line = f"{s.value:9s} pairs={len(result.datasets[s])}"
        if st is not None:
            line += f" nm={st.nm:.6f} cv={st.cv:.6f} s={st.s:.6f}"
        _print(line)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args, "20:300:20")
    result = run_sweep(config, workers=args.workers)
    prov = report.provenance("sweep", config.echo(), config.seed)
    report.write_sweep(result, Path(args.out), prov)
    for r in result.rows:
        _print(f"m={r['m']:4d} {r['species']:9s} nm={r['nm_mean']:+.4f}({r['nm_rmt']:+.4f}) "
               f"cv={r['cv_mean']:+.4f}({r['cv_rmt']:+.4f}) s={r['s_mean']:+.4f}({r['s_rmt']:+.4f})")
    return EXIT_OK


def cmd_scatter(args) -> int:
    config = _config(args, "120")
    if len(config.m_values) != 1:
        raise ConfigError("scatter takes a single mode count")
    result = run_scatter(config, workers=args.workers)
    prov = report.provenance("scatter", config.echo(), config.seed)
    report.write_scatter(result, Path(args.out), prov)
    for rep in result.repetitions:
        for s, verdicts in rep.verdicts.items():
            v = verdicts[float(config.k)]
            accepted = ",".join(a.value for a in v.accepted) or "-"
            flag = " (low confidence)" if v.low_confidence or v.inconclusive else ""
            _print(f"rep={rep.rep} cloud={s.value:9s} k={config.k:g} accepted={accepted}{flag}")
    return EXIT_OK


def cmd_certify(args) -> int:
    if args.modes is None:
        raise ConfigError("certify needs -m/--modes")
    rows = report.read_csv(args.cloud)
    try:
        points = np.array([[float(r["cv"]), float(r["s"])] for r in rows])
    except KeyError as exc:
        raise ConfigError(f"cloud file needs columns trial,cv,s (missing {exc})") from None
    cloud = cloud_summary(points)
    species = _species_list(args.species)
    preds = {s: rmt_statistics(s, args.particles, int(args.modes)) for s in species}
    verdict = certify(cloud, preds, args.k)
    doc = verdict.to_json()
    _print(report.dumps(doc))
    if args.out:
        doc = dict(doc)
        doc["provenance"] = report.provenance(
            "certify", {"n": args.particles, "m": int(args.modes), "k": args.k,
                        "species": [s.value for s in species]}, None)
        report.write_json(Path(args.out) / "verdict.json", doc)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    results = run_oracle_check(n_max=args.n_max, m_max=args.m_max, draws=args.draws,
                               phase_samples=args.phase_samples, seed=args.seed,
                               perturb=args.inject_perturbation)
    for r in results:
        _print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_haar_gen(args) -> int:
    m = int(args.modes)
    u = haar_unitary(m, RngSeed(args.seed, "haar-gen"))
    if args.inputs:
        sel = [int(q) for q in args.inputs.split(",")]
        doc = matrix_to_json(extract_submatrix(u, sel), n=len(sel))
    elif args.particles:
        doc = matrix_to_json(extract_submatrix(u, range(1, args.particles + 1)), n=args.particles)
    else:
        doc = matrix_to_json(u)
    text = report.dumps(doc)
    if args.out:
        report.write_text(Path(args.out), text + "\n")
    else:
        _print(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-n", "--particles", type=int, default=6, help="particle count (default 6)")
    common.add_argument("-m", "--modes", default=None, help="mode count M or START:STOP:STEP")
    common.add_argument("--seed", type=int, default=0, help="64-bit base seed (default 0)")
    common.add_argument("--species", action="append", default=None,
                        help="boson, fermion, dist, simboson or all (repeatable)")
    common.add_argument("--k", type=float, default=DEFAULT_K,
                        help="certification threshold in standard errors (default 4)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--reuse-circuit", action="store_true",
                        help="keep one circuit and redraw the input modes per trial")

    trials = argparse.ArgumentParser(add_help=False)
    trials.add_argument("--trials", type=int, default=500, help="sampled submatrices per m")
    trials.add_argument("--workers", type=int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="bosoncert", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", parents=[common], help="closed-form moments and NM/CV/S")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("histogram", parents=[common], help="C-dataset histograms of one circuit")
    sp.add_argument("--bins", default="fd", help="numpy bin rule or bin count (default fd)")
    sp.set_defaults(func=cmd_histogram, out_default="out/histogram")

    sp = sub.add_parser("sweep", parents=[common, trials], help="NM/CV/S versus m")
    sp.set_defaults(func=cmd_sweep, out_default="out/sweep")

    sp = sub.add_parser("scatter", parents=[common, trials], help="(CV, S) clouds and verdicts")
    sp.add_argument("--repetitions", type=int, default=1, help="independent clouds to draw")
    sp.set_defaults(func=cmd_scatter, out_default="out/scatter")

    sp = sub.add_parser("certify", parents=[common], help="ellipse test of a cloud CSV")
    sp.add_argument("--cloud", required=True, help="CSV with columns trial,cv,s")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("oracle-check", help="closed forms versus brute-force distributions")
    sp.add_argument("--n-max", type=int, default=3)
    sp.add_argument("--m-max", type=int, default=6)
    sp.add_argument("--draws", type=int, default=50, help="Haar draws per (n, m)")
    sp.add_argument("--phase-samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject-perturbation", nargs="?", type=float, const=PERTURBATION,
                    default=0.0, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("haar-gen", help="write a Haar unitary (or submatrix) as JSON")
    sp.add_argument("-m", "--modes", required=True)
    sp.add_argument("-n", "--particles", type=int, default=None, help="keep rows 1..n")
    sp.add_argument("--inputs", default=None, help="comma-separated 1-based input modes")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="output file (default stdout)")
    sp.set_defaults(func=cmd_haar_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out", None) is None and hasattr(args, "out_default"):
        args.out = args.out_default
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bosoncert: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, BenchError) as exc:
        print(f"bosoncert: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"bosoncert: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
