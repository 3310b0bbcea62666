"""Command-line entry points.

Subcommands: ``generate`` writes a synthetic instance bundle, ``solve`` runs
one solver on a stored instance and prints a JSON result, ``oracle-check``
verifies the solvers against the exhaustive small-size oracles, ``sweep``
runs a parameter-grid experiment, and ``ga-run`` reports the baseline's
multi-run accuracy spread.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from dataclasses import replace

from .baseline_ga import GaConfig, ga_average_accuracy, ga_solve, history_to_csv
from .cbda import CbdaConfig, cbda_solve
from .errors import CommatchError
from .graph_core import Permutation
from .harness import (DEFAULT_MEMBERSHIP_PROB, FULL_SCALE_GRID, ExperimentConfig,
                      build_synthetic_triple, derive_seed,
                      instance_from_bundle, load_instance_bundle,
                      run_experiment, save_instance_bundle)
from .model import build_instance
from .objective import accuracy, f0, mmse_objective, nme, relative_nme
from .oracle import MMSE_N_MAX, approx_ratio, brute_mmse, brute_wemp


def _add_generate(sub):
    p = sub.add_parser("generate", help="write a synthetic instance bundle")
    p.add_argument("--n", type=int, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--q", type=int, help="community count")
    group.add_argument("--eta", type=float,
                       help="community ratio; Q = round(eta * n)")
    p.add_argument("--membership-prob", type=float, default=None)
    p.add_argument("--a", type=float, default=5.0, help="edge-model parameter")
    p.add_argument("--s", type=float, default=0.6,
                   help="sampling probability for both observations")
    p.add_argument("--s1", type=float, default=None)
    p.add_argument("--s2", type=float, default=None)
    p.add_argument("--overlap", choices=("ol", "nol"), default="ol")
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)


def cmd_generate(args) -> int:
    q = args.q if args.q is not None else round((args.eta or 0.1) * args.n)
    pc = (DEFAULT_MEMBERSHIP_PROB if args.membership_prob is None
          else args.membership_prob)
    s1 = args.s1 if args.s1 is not None else args.s
    s2 = args.s2 if args.s2 is not None else args.s
    triple = build_synthetic_triple(args.n, q, pc, args.a, s1, s2,
                                    args.overlap, args.seed)
    save_instance_bundle(args.out, triple, {
        "dataset": "synthetic",
        "a": args.a,
        "membership_prob": pc,
        "membership_prob_is_default": args.membership_prob is None,
        "overlap_mode": args.overlap,
        "weighted": not args.unweighted,
        "mu": args.mu,
        "rng_seed": args.seed,
    })
    print(f"wrote instance bundle to {args.out}")
    return 0


def _add_cbda_flags(p):
    p.add_argument("--xi-max", type=float, default=None)
    p.add_argument("--delta-xi", type=float, default=None)
    p.add_argument("--xi-steps", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--max-inner", type=int, default=None)


def _cbda_config(args) -> CbdaConfig:
    kwargs = {}
    if args.xi_max is not None:
        kwargs["xi_max"] = args.xi_max
    if args.delta_xi is not None:
        kwargs["delta_xi"] = args.delta_xi
    if args.xi_steps is not None:
        kwargs["xi_steps"] = args.xi_steps
    if args.delta is not None:
        kwargs["delta"] = args.delta
    if args.max_inner is not None:
        kwargs["max_inner_iters"] = args.max_inner
    return CbdaConfig(**kwargs)


def _add_solve(sub):
    p = sub.add_parser("solve", help="run one solver on a stored instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", choices=("cbda", "ga"), default="cbda")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", default=None,
                   help="write the solver trace as JSON lines")
    p.add_argument("--weighted", dest="weighted", action="store_true",
                   default=None)
    p.add_argument("--unweighted", dest="weighted", action="store_false")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    _add_cbda_flags(p)
    p.set_defaults(func=cmd_solve)


def cmd_solve(args) -> int:
    loaded = load_instance_bundle(args.instance)
    inst = instance_from_bundle(loaded, a=args.a, weighted=args.weighted,
                                mu=args.mu)
    t0 = time.perf_counter()
    if args.solver == "cbda":
        perm, trace = cbda_solve(inst, _cbda_config(args), rng_seed=args.seed)
        status = trace.status
        if args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                fh.write(trace.to_jsonl())
    else:
        perm, _history = ga_solve(inst, GaConfig(rng_seed=args.seed, runs=1))
        status = "ga"
    result = {
        "solver": args.solver,
        "n": inst.n,
        "f0_final": f0(perm, inst),
        "status": status,
        "wall_ms": (time.perf_counter() - t0) * 1e3,
        "mapping": [int(x) for x in perm.mapping],
    }
    if loaded.true_perm is not None:
        result["accuracy"] = accuracy(perm, loaded.true_perm)
        result["nme"] = nme(perm, loaded.true_perm)
        result["relative_nme"] = relative_nme(perm, loaded.true_perm)
    print(json.dumps(result, sort_keys=True))
    return 0


def _add_oracle_check(sub):
    p = sub.add_parser("oracle-check",
                       help="verify solver output against exhaustive "
                            "enumeration at small sizes")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", type=float, default=3.0)
    p.add_argument("--s", type=float, default=0.7)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--membership-prob", type=float, default=0.4)
    p.set_defaults(func=cmd_oracle_check)


def cmd_oracle_check(args) -> int:
    if args.n > MMSE_N_MAX:
        print(f"error: oracle-check is capped at n <= {MMSE_N_MAX}",
              file=sys.stderr)
        return 2
    ok = True

    def check(name, cond, detail=""):
        nonlocal ok
        print(f"{'ok  ' if cond else 'FAIL'} {name}" +
              (f"  ({detail})" if detail else ""))
        ok = ok and cond

    ratios = []
    for trial in range(args.trials):
        seed = derive_seed(args.seed, "oracle-check", args.n, trial)
        triple = build_synthetic_triple(args.n, args.q, args.membership_prob,
                                        args.a, args.s, args.s, "ol", seed)
        inst = build_instance(triple, a=args.a)
        rng = np.random.default_rng(seed)

        wemp_perm, wemp_val = brute_wemp(inst)
        probes = [Permutation.random(args.n, rng) for _ in range(50)]
        check(f"trial {trial}: exhaustive minimum is a lower bound",
              all(f0(p, inst) >= wemp_val - 1e-9 for p in probes))

        mmse_perm, mmse_val = brute_mmse(inst)
        check(f"trial {trial}: exhaustive maximum is an upper bound",
              all(mmse_objective(p, inst) <= mmse_val + 1e-9 for p in probes))

        cperm, trace = cbda_solve(inst)
        check(f"trial {trial}: solver respects the exhaustive minimum",
              trace.f0_final >= wemp_val - 1e-9,
              f"solver={trace.f0_final:.6g} oracle={wemp_val:.6g}")

        ratio = approx_ratio(inst)
        ratios.append(ratio)
        check(f"trial {trial}: objective ratio in (0, 1]",
              0.0 < ratio <= 1.0 + 1e-12, f"ratio={ratio:.4f}")

    mean_ratio = float(np.mean(ratios))
    check("mean objective ratio >= 0.5", mean_ratio >= 0.5,
          f"mean={mean_ratio:.4f}")
    return 0 if ok else 1


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run a parameter-grid experiment")
    p.add_argument("--config", default=None,
                   help="JSON experiment config; defaults are used if omitted")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--paper-grid", action="store_true",
                   help="use the full-scale grid (slow)")
    p.add_argument("--weighted", dest="weighted", action="store_true",
                   default=None)
    p.add_argument("--unweighted", dest="weighted", action="store_false")
    p.add_argument("--overlap", choices=("ol", "nol"), default=None)
    p.set_defaults(func=cmd_sweep)


def cmd_sweep(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    if args.paper_grid:
        for key, val in FULL_SCALE_GRID.items():
            setattr(cfg, key, val)
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.rng_seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.weighted is not None:
        cfg.weighted = args.weighted
    if args.overlap is not None:
        cfg.overlap_modes = (args.overlap,)
    rows = run_experiment(cfg)
    print(f"wrote {len(rows)} result rows to {cfg.output_dir}/results.csv")
    return 0


def _add_ga_run(sub):
    p = sub.add_parser("ga-run", help="baseline GA with multi-run spread")
    p.add_argument("--instance", required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--generations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history-out", default=None,
                   help="write the first run's per-generation best "
                        "cost as CSV")
    p.set_defaults(func=cmd_ga_run)


def cmd_ga_run(args) -> int:
    loaded = load_instance_bundle(args.instance)
    inst = instance_from_bundle(loaded)
    if loaded.true_perm is None:
        print("error: instance bundle carries no true mapping",
              file=sys.stderr)
        return 2
    cfg = GaConfig(population_size=args.population,
                   generations=args.generations, runs=args.runs,
                   rng_seed=args.seed)
    summary = ga_average_accuracy(inst, cfg, loaded.true_perm)
    if args.history_out:
        first_seed = int(np.random.SeedSequence([cfg.rng_seed, 0])
                         .generate_state(1)[0])
        _, history = ga_solve(inst, replace(cfg, rng_seed=first_seed, runs=1))
        with open(args.history_out, "w", encoding="utf-8") as fh:
            fh.write(history_to_csv(history))
    print(json.dumps({
        "mean_accuracy": summary.mean_accuracy,
        "min_accuracy": summary.min_accuracy,
        "max_accuracy": summary.max_accuracy,
        "per_run": summary.per_run,
        "runs": args.runs,
    }, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="commatch",
        description="Seedless network de-anonymization with overlapping "
                    "communities")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_solve(sub)
    _add_oracle_check(sub)
    _add_sweep(sub)
    _add_ga_run(sub)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
