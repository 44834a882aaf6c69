"""Command-line entry point.

Subcommands: entropy, pattern, hstar, sensitivity, pairs, verify.
Every run writes a deterministic `report.json` (plus CSV tables) to the
output directory; wall-clock timing goes to a `meta.json` sidecar so
the report itself is byte-reproducible for a fixed config and seed.

Exit codes: 0 success, 1 validation failure (or a failed hard check of
`verify`), 2 `verify` hard checks inconclusive at the given budget,
3 internal error.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .config import (
    load_config,
    partition_from_config,
    system_from_config,
    targets_from_config,
)
from .errors import ValidationError
from .partitions import atom_measures, partition_entropy
from .pattern_entropy import DEFAULT_NODE_BUDGET, h_star_profile, p_star
from .reports import (
    LN2,
    cesaro_csv_rows,
    density_csv_rows,
    entropy_val,
    hstar_csv_rows,
    val,
    write_csv,
    write_report,
)
from .sensitivity import (
    mean_sensitivity_estimate,
    pair_separation_density,
    sensitivity_search,
)
from .systems import Substitution
from .verify import exit_code as verify_exit_code
from .verify import verify_suite


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergosense",
        description="sensitivity and maximal pattern entropy for concrete ergodic systems",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML experiment config")
        else:
            p.add_argument("--config", help="optional YAML config with run overrides")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--log2", action="store_true", help="emit entropies in base 2")
        p.add_argument("--budget", type=int, help="search node budget override")

    common(sub.add_parser("entropy", help="partition entropy and atom measures"))
    common(sub.add_parser("pattern", help="one p* search at fixed k and horizon"))
    common(sub.add_parser("hstar", help="p*(k)/k profile for k = 1..k_max"))
    common(sub.add_parser("sensitivity", help="n-sensitivity trials over a target family"))
    common(sub.add_parser("pairs", help="separation densities of independent pairs"))
    common(sub.add_parser("verify", help="run the reference-system scenario suite"),
           needs_config=False)
    return parser


def _run_params(cfg: dict, args) -> dict:
    run = dict(cfg.get("run", {}))
    if args.seed is not None:
        run["seed"] = args.seed
    if args.budget is not None:
        run["node_budget"] = args.budget
    if "seed" not in run:
        raise ValidationError("a seed is required (run.seed in the config or --seed)")
    run.setdefault("node_budget", DEFAULT_NODE_BUDGET)
    return run


def _base_payload(command: str, cfg: dict, run: dict, log2: bool) -> dict:
    return {
        "toolkit": {"name": "ergosense", "version": __version__},
        "command": command,
        "units": "log2" if log2 else "nats",
        "config": cfg,
        "run": {k: v for k, v in run.items()},
    }


def _cmd_entropy(cfg, run, args):
    sys_ = system_from_config(cfg["system"])
    part = partition_from_config(cfg["partition"], sys_)
    exact = not isinstance(sys_, Substitution)
    h = partition_entropy(sys_, part)
    pv = atom_measures(sys_, part)
    payload = _base_payload("entropy", cfg, run, args.log2)
    payload["results"] = {
        "partition": part.describe(),
        "entropy": entropy_val(h, exact, args.log2),
        "atom_count": len(pv.probs),
    }
    rows = [(str(l), p, "exact" if exact else "estimate") for l, p in zip(pv.labels, pv.probs)]
    write_csv(args.out, "atoms.csv", ("atom", "mass", "exact_flag"), rows)
    return payload


def _cmd_pattern(cfg, run, args):
    sys_ = system_from_config(cfg["system"])
    part = partition_from_config(cfg["partition"], sys_)
    k = int(run.get("k", 2))
    horizon = int(run.get("horizon", 4 * k))
    res = p_star(sys_, part, k, horizon, node_budget=int(run["node_budget"]))
    exact = res.exact_within_horizon and not isinstance(sys_, Substitution)
    payload = _base_payload("pattern", cfg, run, args.log2)
    payload["results"] = {
        "k": k,
        "horizon": horizon,
        "best_value": entropy_val(res.best_value, exact, args.log2),
        "best_pattern": list(res.best_pattern.times),
        "nodes_expanded": res.nodes_expanded,
        "exact_within_horizon": res.exact_within_horizon,
    }
    scale = 1.0 / LN2 if args.log2 else 1.0
    write_csv(args.out, "pstar.csv", ("k", "p_star_nats", "p_star_over_k", "exact_flag"),
              [(k, res.best_value * scale, res.best_value / k * scale,
                "exact" if exact else "estimate")])
    return payload


def _cmd_hstar(cfg, run, args):
    sys_ = system_from_config(cfg["system"])
    part = partition_from_config(cfg["partition"], sys_)
    k_max = int(run.get("k_max", 4))
    horizon = int(run.get("horizon", 4 * k_max))
    profile = h_star_profile(sys_, part, k_max, horizon, node_budget=int(run["node_budget"]))
    exact = profile.exact and not isinstance(sys_, Substitution)
    payload = _base_payload("hstar", cfg, run, args.log2)
    payload["results"] = {
        "partition": profile.partition_id,
        "horizon": profile.horizon,
        "per_k": [
            {"k": k, "p_star": entropy_val(v, exact, args.log2),
             "ratio": entropy_val(r, exact, args.log2)}
            for k, v, r in profile.per_k
        ],
        "infimum_proxy": entropy_val(profile.infimum_proxy, exact, args.log2),
        "note": "truncation at the horizon makes every value a lower bound of the true p*",
    }
    write_csv(args.out, "hstar.csv", ("k", "p_star_nats", "p_star_over_k", "exact_flag"),
              hstar_csv_rows(profile, args.log2))
    return payload


def _cmd_sensitivity(cfg, run, args):
    sys_ = system_from_config(cfg["system"])
    notion = run.get("notion", "strong")
    seed = int(run["seed"])
    n = int(run.get("n", 2))
    steps = int(run.get("steps", 100_000))
    trials = int(run.get("trials", 2))
    payload = _base_payload("sensitivity", cfg, run, args.log2)
    if notion == "mean":
        targets = targets_from_config(run, sys_, seed)
        reports = []
        rows = []
        for target in targets:
            rep = mean_sensitivity_estimate(sys_, target, n, steps, trials, seed)
            reports.append({
                "target": target.describe(),
                "delta_estimate": val(rep.delta_estimate, False),
                "verdict": rep.verdict,
            })
            rows.extend(cesaro_csv_rows(rep.trials))
        payload["results"] = {"notion": "mean", "n": n, "per_target": reports}
        write_csv(args.out, "cesaro.csv", ("trial", "checkpoint_N", "cesaro_value"), rows)
        return payload
    part = partition_from_config(cfg["partition"], sys_)
    targets = targets_from_config(run, sys_, seed)
    fam = sensitivity_search(sys_, part, n, targets, steps, trials, seed, notion=notion,
                             construct_horizon=run.get("construct_horizon"),
                             node_budget=int(run["node_budget"]))
    payload["results"] = {
        "notion": fam.notion,
        "n": fam.n,
        "family_delta": val(fam.family_delta, False),
        "verdict": fam.verdict,
        "per_target": [
            {"target": desc, "delta_estimate": val(rep.delta_estimate, False),
             "verdict": rep.verdict}
            for desc, rep in fam.per_target
        ],
    }
    rows = []
    for desc, rep in fam.per_target:
        rows.extend(density_csv_rows(rep.trials))
    write_csv(args.out, "densities.csv", ("trial", "window_N", "count", "density"), rows)
    return payload


def _cmd_pairs(cfg, run, args):
    sys_ = system_from_config(cfg["system"])
    part = partition_from_config(cfg["partition"], sys_)
    seed = int(run["seed"])
    steps = int(run.get("steps", 100_000))
    trials = int(run.get("trials", 200))
    rep = pair_separation_density(sys_, part, trials, steps, seed)
    proxies = rep.proxies
    payload = _base_payload("pairs", cfg, run, args.log2)
    payload["results"] = {
        "trials": trials,
        "delta_estimate": val(rep.delta_estimate, False),
        "min_proxy": val(min(proxies), False),
        "max_proxy": val(max(proxies), False),
        "verdict": rep.verdict,
    }
    write_csv(args.out, "densities.csv", ("trial", "window_N", "count", "density"),
              density_csv_rows(rep.trials))
    return payload


def _cmd_verify(cfg, run, args):
    seed = int(run.get("seed", 1))
    steps = int(run.get("steps", 100_000))
    trials = int(run.get("trials", 2))
    tm_budget = int(run.get("node_budget", 1500)) if "node_budget" in run else 1500
    if args.budget is not None:
        tm_budget = args.budget
    checks, sections = verify_suite(seed=seed, steps=steps, trials=trials,
                                    tm_budget=tm_budget)
    for c in checks:
        value = "-" if c.value is None else repr(c.value)
        print(f"[{c.status:<12}] {c.check_id:<36} kind={c.kind:<4} value={value} "
              f"tol={c.tolerance} :: {c.detail}")
    payload = _base_payload("verify", cfg, run, args.log2)
    payload["results"] = {
        "checks": [
            {"id": c.check_id, "section": c.section, "kind": c.kind, "status": c.status,
             "value": c.value, "tolerance": c.tolerance, "detail": c.detail}
            for c in checks
        ],
        "sections": sections,
    }
    return payload, verify_exit_code(checks)


_COMMANDS = {
    "entropy": _cmd_entropy,
    "pattern": _cmd_pattern,
    "hstar": _cmd_hstar,
    "sensitivity": _cmd_sensitivity,
    "pairs": _cmd_pairs,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.command == "verify":
            run = dict(cfg.get("run", {}))
            if args.seed is not None:
                run["seed"] = args.seed
            payload, code = _cmd_verify(cfg, run, args)
        else:
            for key in ("system",):
                if key not in cfg:
                    raise ValidationError(f"config is missing the '{key}' table")
            run = _run_params(cfg, args)
            payload = _COMMANDS[args.command](cfg, run, args)
            code = 0
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - t0
    path = write_report(args.out, payload, wall)
    print(f"report written to {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
