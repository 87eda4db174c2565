"""``cogbeam`` command line: solve one instance, run sweeps, run validation suites.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 numerical
trouble in the SDP solver, 3 infeasible instance (zero outage probability),
4 a validation suite reported a failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

from .channel import realize_network
from .config import load_config, resolve_seed
from .errors import CogbeamError, ConfigError
from .extraction import solve_beamformer
from .problem import build_qcqp, interference_power
from .rng import SeededStream
from .sdp import SdpStatus
from .sweep import DESK_SCALE_REALIZATIONS, FULL_SCALE_REALIZATIONS, run_sweep, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INFEASIBLE, EXIT_SUITE = 0, 1, 2, 3, 4

log = logging.getLogger("cogbeam")


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, allow_nan=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def run_solve(config, seed=None, out=None) -> tuple[int, dict]:
    """Sample one realization, solve it, and return ``(exit_code, document)``."""
    exp = load_config(config)
    seed = resolve_seed(seed, exp.seed)
    real = realize_network(exp.network, SeededStream(seed, 1).substream(0))
    problem = build_qcqp(real, exp.interference)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        res = solve_beamformer(problem, stream=SeededStream(seed, 2).substream(0), draws=exp.draws,
                               tolerances=exp.sdp)
    doc = {
        "seed": seed,
        "preset": exp.preset,
        "scenario": exp.interference.scenario.value,
        "epsilon_over_N0_db": exp.epsilon_over_N0_db.tolist(),
        "delta": exp.interference.delta.tolist(),
        "K": real.K,
        "M_S": real.M_S,
        "P_S_max": real.P_S_max,
        "sinr_db": 10.0 * math.log10(res.objective) if res.objective > 0 else None,
        "interference": [float(interference_power(real, res.t, k)) for k in range(real.K)],
        "epsilon": exp.interference.epsilon.tolist(),
        "warnings": [str(w.message) for w in caught],
        "result": res.as_dict(),
    }
    if res.infeasible:
        code = EXIT_INFEASIBLE
    elif res.sdp_status is SdpStatus.NUMERICAL_TROUBLE:
        code = EXIT_NUMERICAL
    else:
        code = EXIT_OK
    doc["exit_code"] = code
    _write_json(doc, out)
    return code, doc


def _cmd_solve(args) -> int:
    code, doc = run_solve(args.config, args.seed, args.out)
    r = doc["result"]
    if args.out:
        print(f"{r['provenance']}: objective {r['objective']:.6g}, upper bound {r['upper_bound']:.6g} "
              f"-> {args.out}", file=sys.stderr)
    if code == EXIT_INFEASIBLE:
        print("infeasible: a zero outage probability admits only the zero beamformer", file=sys.stderr)
    return code


def _cmd_sweep(args) -> int:
    exp = load_config(args.config)
    seed = resolve_seed(args.seed, exp.seed)
    n = FULL_SCALE_REALIZATIONS if args.full else args.realizations
    try:
        rows = run_sweep(exp, args.axis, args.start, args.stop, args.steps, n, seed=seed, workers=args.workers)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    write_csv(rows, args.out)
    fails = sum(r.n_failures for r in rows)
    print(f"{len(rows)} rows, {n} realizations each, {fails} failed cells -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .suites import run_suite

    results = run_suite(args.suite, progress=lambda r: print(r.line(), flush=True))
    ok = all(r.passed for r in results)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'} "
          f"({sum(r.passed for r in results)}/{len(results)} checks)")
    if args.report:
        _write_json({"suite": args.suite, "passed": ok, "checks": [r.as_dict() for r in results]}, args.report)
    return EXIT_OK if ok else EXIT_SUITE


def build_parser() -> argparse.ArgumentParser:
    from .suites import SUITES

    p = argparse.ArgumentParser(prog="cogbeam", description="Secondary-link beamforming under primary "
                                                            "interference constraints.")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-cell solver warnings")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one sampled instance")
    s.add_argument("--config", required=True, help="JSON file or preset name")
    s.add_argument("--seed", type=int, help="overrides the environment and the config seed")
    s.add_argument("--out", help="result JSON path (stdout when omitted)")
    s.set_defaults(func=_cmd_solve)

    w = sub.add_parser("sweep", help="Monte Carlo sweep over epsilon or delta")
    w.add_argument("--config", required=True)
    w.add_argument("--axis", choices=("epsilon", "delta"), required=True)
    w.add_argument("--from", dest="start", type=float, required=True)
    w.add_argument("--to", dest="stop", type=float, required=True)
    w.add_argument("--steps", type=int, default=11)
    w.add_argument("--realizations", type=int, default=DESK_SCALE_REALIZATIONS)
    w.add_argument("--full", action="store_true", help=f"use {FULL_SCALE_REALIZATIONS} realizations")
    w.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on it)")
    w.add_argument("--seed", type=int)
    w.add_argument("--out", required=True, help="CSV path")
    w.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("validate", help="run a validation suite")
    v.add_argument("--suite", choices=sorted(SUITES), default="all")
    v.add_argument("--report", help="optional JSON report path")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CogbeamError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
