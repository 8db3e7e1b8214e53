"""Batch experiment runner: ``recordlab <subcommand> [--config cfg.json] ...``.

Exit codes: 0 pass, 1 assertion failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .algorithms import (
    QueryAlgorithm,
    build_classical_reader,
    build_grover_ksearch,
    emulate_algorithm2,
    random_algorithm,
    run,
)
from .bounds import DEFAULT_CONSTANTS, build_sorting_instance, sample_sorting_g, tradeoff_curves
from .oracles import build_bernoulli_sampling_unitary, build_uniform_sampling_unitary
from .progress import RECURRENCE_TOL, ProgressTable, check_recurrence
from .reduction import (
    C1,
    monte_carlo_events,
    multicollision_profile,
    random_function,
    run_algorithm1,
)
from .state import RegisterLayout
from .verify import SUITES, run_suite


class ConfigError(ValueError):
    pass


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _int_list(cfg, key, lo=None):
    out = []
    for v in _as_list(cfg[key]):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{key} entries must be integers, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"{key}={v} is below {lo}")
        out.append(v)
    return out


def derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint64)[0] >> 1)


# -- subcommand definitions ------------------------------------------------
# each has defaults, validate(cfg) -> grid, and a runner

VERIFY_DEFAULTS = {"suite": "all"}


def validate_verify(cfg):
    suites = SUITES if cfg["suite"] == "all" else _as_list(cfg["suite"])
    for s in suites:
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")
    return list(suites)


def cmd_verify(cfg, args):
    grid = validate_verify(cfg)
    reports = _map(args.jobs, _verify_point, [(s, args.seed) for s in grid])
    ok = all(r["pass"] for r in reports)
    return ok, {"suites": reports}, None


def _verify_point(item):
    suite, seed = item
    return _jsonable(run_suite(suite, seed).to_json())


PROGRESS_DEFAULTS = {"family": "uniform", "algorithm": "random", "M": [2, 3], "N": [2, 3], "K": [1],
                     "T": [0, 1, 2, 3], "seeds": 1, "algorithm_file": None}


def validate_progress(cfg):
    fam = cfg["family"]
    if fam not in ("uniform", "bernoulli"):
        raise ConfigError(f"family must be uniform or bernoulli, got {fam!r}")
    if cfg["algorithm"] not in ("random", "reader", "grover"):
        raise ConfigError(f"algorithm must be random, reader or grover, got {cfg['algorithm']!r}")
    if not isinstance(cfg["seeds"], int) or cfg["seeds"] < 1:
        raise ConfigError("seeds must be a positive integer")
    if cfg["algorithm_file"]:
        try:
            data = json.loads(Path(cfg["algorithm_file"]).read_text())
            alg = QueryAlgorithm.from_json(data)
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"cannot load algorithm file: {e}") from e
        N = alg.layout.N
        K = _int_list(cfg, "K", 1)[0] if fam == "bernoulli" else None
        return [{"file": cfg["algorithm_file"], "M": alg.layout.M, "N": N if fam == "uniform" else _int_list(cfg, "N", 1)[0],
                 "K": K, "T": alg.T, "seed": 0}]
    grid = []
    Ks = _int_list(cfg, "K", 1) if fam == "bernoulli" else [None]
    for M in _int_list(cfg, "M", 1):
        for N in _int_list(cfg, "N", 1):
            for K in Ks:
                for T in _int_list(cfg, "T", 0):
                    for s in range(cfg["seeds"]):
                        point = {"M": M, "N": N, "K": K, "T": T, "seed": s}
                        if fam == "bernoulli" and K > N:
                            raise ConfigError(f"grid point {point}: need K <= N")
                        if cfg["algorithm"] == "reader" and T > M:
                            raise ConfigError(f"grid point {point}: a reader makes at most M queries")
                        if cfg["algorithm"] == "grover" and fam != "bernoulli":
                            raise ConfigError(f"grid point {point}: grover runs on the bernoulli family")
                        grid.append(point)
    return grid


def _progress_point(item):
    cfg, point, seed = item
    fam_name = cfg["family"]
    M, N, K, T = point["M"], point["N"], point["K"], point["T"]
    if fam_name == "uniform":
        fam, mode = build_uniform_sampling_unitary(N), "disjoint-collisions"
    else:
        fam, mode = build_bernoulli_sampling_unitary(K, N), "ones"
    if "file" in point:
        alg = QueryAlgorithm.from_json(json.loads(Path(point["file"]).read_text()))
    elif cfg["algorithm"] == "random":
        layout = RegisterLayout(M, fam.N, (2,))
        alg = random_algorithm(layout, T, np.random.default_rng(derived_seed(seed, M, N, K or 0, T, point["seed"])))
    elif cfg["algorithm"] == "reader":
        kind = "collision" if fam_name == "uniform" else "ksearch"
        alg = build_classical_reader(M, fam.N, 1, kind, reads=T)
    else:
        alg = build_grover_ksearch(M, T)
    states = run(alg, "recording", fam, capture=True)
    table = ProgressTable.from_states(states, mode)
    report = check_recurrence(table, N, K)
    return [{"family": fam_name, "M": M, "N": N, "K": K if K is not None else "", "T": T,
             "seed": point["seed"], "t": c.t, "k": c.k, "q": c.q, "bound": c.bound, "slack": c.slack,
             "binomial": c.binomial, "binomial_slack": c.binomial_slack} for c in report.cells]


def cmd_progress(cfg, args):
    grid = validate_progress(cfg)
    chunks = _map(args.jobs, _progress_point, [(cfg, p, args.seed) for p in grid])
    rows = [r for chunk in chunks for r in chunk]
    ok = all(r["slack"] >= -RECURRENCE_TOL and r["binomial_slack"] >= -RECURRENCE_TOL for r in rows)
    return ok, {"rows": rows}, rows


BOUNDS_DEFAULTS = {"kinds": ["collision-lower", "collision-upper", "collision-conjecture", "sorting-lower"],
                   "N": [1024, 65536], "K": [16], "S": [16, 32, 64, 128, 256], "constants": {}}


def validate_bounds(cfg):
    for kind in _as_list(cfg["kinds"]):
        if kind not in DEFAULT_CONSTANTS:
            raise ConfigError(f"unknown curve kind {kind!r}")
    if not isinstance(cfg["constants"], dict):
        raise ConfigError("constants must map a curve kind to its constants")
    for S in _as_list(cfg["S"]):
        if not isinstance(S, (int, float)) or S <= 0:
            raise ConfigError(f"S={S!r} must be positive")
    return [(k, N, K) for k in _as_list(cfg["kinds"]) for N in _int_list(cfg, "N", 1)
            for K in (_int_list(cfg, "K", 1) if k != "sorting-lower" else [None])]


def cmd_bounds(cfg, args):
    rows, curves = [], []
    for kind, N, K in validate_bounds(cfg):
        curve = tradeoff_curves(kind, _as_list(cfg["S"]), N, K, cfg["constants"].get(kind))
        rows += curve.rows
        curves.append({**curve.metadata(), "N": N, "K": K, "rows": curve.rows})
    return True, {"curves": curves}, rows


REDUCTION_DEFAULTS = {"N": 10_000, "D": None, "D_factor": 10, "rounds": 100_000, "algorithm1_seeds": 0}


def validate_reduction(cfg):
    N = cfg["N"]
    if not isinstance(N, int) or N < 2:
        raise ConfigError("N must be an integer >= 2")
    D = cfg["D"] if cfg["D"] is not None else cfg["D_factor"] * N
    if not isinstance(D, int) or D < 2:
        raise ConfigError("D must be an integer >= 2")
    if not isinstance(cfg["rounds"], int) or cfg["rounds"] < 1:
        raise ConfigError("rounds must be a positive integer")
    if not isinstance(cfg["algorithm1_seeds"], int) or cfg["algorithm1_seeds"] < 0:
        raise ConfigError("algorithm1_seeds must be a non-negative integer")
    return N, D


def _algorithm1_point(item):
    f, D, N, seed = item
    return run_algorithm1(f, D, N, seed)


def cmd_reduction(cfg, args):
    N, D = validate_reduction(cfg)
    f = random_function(D, N, derived_seed(args.seed, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tally = monte_carlo_events(f, D, N, cfg["rounds"], derived_seed(args.seed, 1))
    events = tally.report()
    target = math.ceil(C1 * N)
    seeds = [derived_seed(args.seed, 2, i) for i in range(cfg["algorithm1_seeds"])]
    outputs = _map(args.jobs, _algorithm1_point, [(f, D, N, s) for s in seeds])
    distinct = [len(set(o)) for o in outputs]
    report = {
        "N": N, "D": D, "rounds": cfg["rounds"],
        "events": events,
        "distinct_collisions": tally.distinct,
        "tau": tally.tau,
        "multicollisions": multicollision_profile(f),
        "algorithm1": {"seeds": len(seeds), "distinct": distinct, "target": target,
                       "successes": sum(d >= target for d in distinct)},
        "notes": "ED is solved by a classical sort, so Pr[D | A, B, C] = 1; "
                 "event B remembers the first ceil(c1 N) distinct collisions",
    }
    rows = None
    if outputs:
        rows = [{"a": a, "b": b, "f_value": int(f[a])} for a, b in sorted(set(outputs[0]))]
    ok = all(e["pass"] for e in events.values())
    return ok, report, rows


EMULATE_DEFAULTS = {"N": [1024], "K": [4, 16], "S": None, "S_points": 3, "seeds": 20}


def _s_range(N, K, n):
    lo = math.ceil(math.log2(N))
    hi = max(lo, math.floor(K ** (2 / 3) * N ** (1 / 3)))
    if n == 1:
        return [lo]
    return sorted({round(lo * (hi / lo) ** (i / (n - 1))) for i in range(n)})


def validate_emulate2(cfg):
    if not isinstance(cfg["seeds"], int) or cfg["seeds"] < 1:
        raise ConfigError("seeds must be a positive integer")
    grid = []
    for N in _int_list(cfg, "N", 2):
        for K in _int_list(cfg, "K", 1):
            Ss = _int_list(cfg, "S", 1) if cfg["S"] is not None else _s_range(N, K, cfg["S_points"])
            for S in Ss:
                if not 1 <= S < N:
                    raise ConfigError(f"grid point N={N}, K={K}, S={S}: need 1 <= S < N")
                grid.append((N, K, S))
    return grid


def _emulate_point(item):
    N, K, S, seeds = item
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = []
        for s in seeds:
            e = emulate_algorithm2(N, K, S, s)
            out.append({"N": N, "K": K, "S": S, "seed": s, "queries": e.queries_used,
                        "collisions_found": len(e.collisions_found)})
    return out


def cmd_emulate2(cfg, args):
    grid = validate_emulate2(cfg)
    items = [(N, K, S, [derived_seed(args.seed, i, r) for r in range(cfg["seeds"])])
             for i, (N, K, S) in enumerate(grid)]
    rows = [r for chunk in _map(args.jobs, _emulate_point, items) for r in chunk]
    return True, {"rows": rows}, rows


SORT_DEFAULTS = {"N": 64, "S": 2, "r": None}


def validate_sort(cfg):
    N, S, r = cfg["N"], cfg["S"], cfg["r"]
    if not isinstance(N, int) or N < 8 or N % 2:
        raise ConfigError("N must be an even integer >= 8")
    if not isinstance(S, int) or S < 1 or 2 * S > N / 4:
        raise ConfigError("S must satisfy 1 <= 2S <= N/4")
    if r is not None and not (isinstance(r, int) and 1 <= r <= N // 2):
        raise ConfigError("r must lie in [1, N/2]")


def cmd_sort_instance(cfg, args):
    validate_sort(cfg)
    N, S = cfg["N"], cfg["S"]
    rng = np.random.default_rng(args.seed)
    r = cfg["r"] if cfg["r"] is not None else int(rng.integers(1, N // 2 + 1))
    g = sample_sorting_g(N, S, rng)
    f = build_sorting_instance(g, r, N)
    rows = [{"x": x, "f": v} for x, v in enumerate(f, start=1)]
    return True, {"N": N, "S": S, "r": r, "g": g, "f": f}, rows


COMMANDS = {
    "verify": (VERIFY_DEFAULTS, cmd_verify),
    "progress": (PROGRESS_DEFAULTS, cmd_progress),
    "bounds": (BOUNDS_DEFAULTS, cmd_bounds),
    "reduction": (REDUCTION_DEFAULTS, cmd_reduction),
    "emulate2": (EMULATE_DEFAULTS, cmd_emulate2),
    "sort-instance": (SORT_DEFAULTS, cmd_sort_instance),
}


# -- plumbing ---------------------------------------------------------------

def _map(jobs, fn, items):
    """Map in input order, in a process pool when jobs > 1."""
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(command: str, cfg: dict, seed: int) -> str:
    blob = canonical_json({"command": command, "config": cfg, "seed": seed})
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str | None, defaults: dict) -> dict:
    cfg = dict(defaults)
    if path is None:
        return cfg
    try:
        user = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(user) - set(defaults) - {"subcommand"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg.update({k: v for k, v in user.items() if k != "subcommand"})
    return cfg


def write_csv(rows: list[dict], header: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {header}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(_jsonable(r))
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recordlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"recordlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "verify":
            p.add_argument("suite", nargs="?", help=f"one of {', '.join(SUITES)} or all")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    defaults, command = COMMANDS[args.command]
    try:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.jobs < 1:
            raise ConfigError("jobs must be positive")
        cfg = load_config(args.config, defaults)
        if args.command == "verify" and args.suite:
            cfg["suite"] = args.suite
        ok, report, rows = command(cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    digest = config_hash(args.command, cfg, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"tool": "recordlab", "version": __version__, "command": args.command,
            "config_hash": digest, "seed": args.seed, "pass": ok}
    json_path = out / f"{args.command}-{digest}.json"
    if args.format == "csv" and rows is not None:
        path = out / f"{args.command}-{digest}.csv"
        path.write_text(write_csv(rows, f"recordlab {__version__} config {digest}"))
        if args.command in ("verify", "reduction"):
            json_path.write_text(canonical_json({**meta, "report": report}) + "\n")
    else:
        path = json_path
        path.write_text(canonical_json({**meta, "report": report}) + "\n")
    print(f"{'PASS' if ok else 'FAIL'} {args.command} -> {path}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
