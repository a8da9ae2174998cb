"""Command-line runner.

Every subcommand writes one data file (``--out``, default ``<subcommand>.<format>``)
and a run manifest next to it (``<out>.manifest.json``).  Data files depend
only on the parameters and the seed; worker counts and timings go in the
manifest.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, acceptance, lab
from .bounds import entropy_upper_bound, graph_census, graph_count_bound, pairwise_upper_bound
from .entropy import (
    graph_entropy_lower_bound,
    plugin_entropy,
    restricted_event_bound_1d,
)
from .geometry import TORUS_EUCLIDEAN_LIMIT, Domain, RegionSpec, crescent_lower_bound, crescent_volume, lens_volume, region_volume_mc
from .graphs import sample_graph_distribution
from .report import Verdict, csv_text, dumps
from .streams import RandomStream, seed_from_env

SUBCOMMANDS = ("entropy", "lowerbound", "bounds", "census", "figure1", "volumes", "orderstats",
               "boolean", "gammacheck", "verify-all")
DEFAULT_FORMAT = {"figure1": "csv", "volumes": "csv", "boolean": "csv"}
CSV_CAPABLE = {"figure1", "volumes", "boolean", "lowerbound", "orderstats"}


class UsageError(Exception):
    pass


def sample_size(text: str) -> int:
    """Positive integer, accepting scientific notation such as ``1e7``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value < 1 or value != int(value):
        raise argparse.ArgumentTypeError(f"sample sizes must be positive integers, got {text!r}")
    return int(value)


def seed_value(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, default=5, help="number of vertices")
    common.add_argument("--d", type=int, default=1, help="dimension")
    common.add_argument("--r", type=float, default=0.3, help="connection radius")
    common.add_argument("--domain", choices=("cube", "torus"), default="cube")
    common.add_argument("--samples", type=sample_size, default=None, help="outer sample size, e.g. 1e6")
    common.add_argument("--inner", type=sample_size, default=None, help="inner Monte Carlo size")
    common.add_argument("--seed", type=seed_value, default=None, help="root seed (default $RGGENT_SEED or 0)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)

    parser = argparse.ArgumentParser(prog="rggent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rggent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("entropy", parents=[common], help="plug-in, Miller-Madow and bounds on H(G_m)")
    p = sub.add_parser("lowerbound", parents=[common], help="vertex-by-vertex lower bound on H(G_m)")
    p.add_argument("--backend", choices=("auto", "Exact1DSweep", "VolMC", "SecondMomentTorus"), default="auto")
    sub.add_parser("bounds", parents=[common], help="closed-form upper bounds")
    p = sub.add_parser("census", parents=[common], help="distinct graphs and structures among samples")
    p.add_argument("--no-structures", action="store_true")
    p = sub.add_parser("figure1", parents=[common], help="limit curve of H(G_m)/(m log m) on [0, 1]")
    p.add_argument("--grid", type=float, default=0.01)
    p = sub.add_parser("volumes", parents=[common], help="lens and crescent volumes on an s-grid")
    p.add_argument("--points", type=int, default=21)
    sub.add_parser("orderstats", parents=[common], help="order-statistics identities vs Monte Carlo")
    p = sub.add_parser("boolean", parents=[common], help="Boolean-model intersection volumes")
    p.add_argument("--ells", type=str, default="4,8,16,32,64")
    p = sub.add_parser("gammacheck", parents=[common], help="gamma-integral bound")
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--s0", type=float, default=0.25)
    p = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", type=str, default=None, help="comma-separated criterion numbers")
    return parser


# ---------------------------------------------------------------------------


def _domain(args) -> Domain:
    if args.d < 1:
        raise UsageError("--d must be positive")
    return Domain(args.d, args.domain)


def _echo(args) -> dict:
    """Parameters that determine the data; workers and paths are excluded."""
    keys = ("command", "m", "d", "r", "domain", "samples", "inner", "seed", "backend", "grid", "points",
            "ells", "K", "s0", "only", "no_structures")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _auto_backend(domain: Domain, r: float) -> str:
    if domain.d == 1 and not domain.is_torus:
        return "Exact1DSweep"
    if domain.is_torus and r <= TORUS_EUCLIDEAN_LIMIT:
        return "SecondMomentTorus"
    return "VolMC"


def _lower_params(args) -> dict:
    params = {}
    if args.inner:
        params["inner_n"] = args.inner
        params["pair_samples"] = args.inner
    return params


def cmd_entropy(args, stream):
    domain = _domain(args)
    n = args.samples or 1_000_000
    s = sample_graph_distribution(args.m, domain, args.r, n, stream.spawn(0), args.workers)
    plug = plugin_entropy(s.dist, rng=stream.spawn(1))
    mm = plugin_entropy(s.dist, "miller_madow", rng=stream.spawn(1))
    backend = _auto_backend(domain, args.r)
    lower = graph_entropy_lower_bound(args.m, domain, args.r, backend, _lower_params(args), stream.spawn(2),
                                      args.workers)
    p = s.edge_probability
    data = {
        "config": _echo(args),
        "edge_probability": p,
        "edge_probability_se": s.edge_probability_se,
        "plug_in": plug.to_record(),
        "miller_madow": mm.to_record(),
        "lower_bound": lower.to_record(),
        "upper_bounds": {
            "pairwise_bits": pairwise_upper_bound(args.m, p),
            "count_bits": graph_count_bound(args.m, args.d, domain) if args.m >= 2 else 0.0,
        },
    }
    if args.m >= 2:
        data["upper_bounds"]["entropy_upper_bound"] = entropy_upper_bound(
            args.m, args.d, args.r, domain, rng=stream.spawn(3)).to_record()
    if domain.d == 1 and not domain.is_torus and 0.5 <= args.r < 1 and args.m >= 2:
        data["restricted_event_profile_bound"] = restricted_event_bound_1d(
            args.m - 1, args.r, rng=stream.spawn(4), workers=args.workers).to_record()
    return data, None


def cmd_lowerbound(args, stream):
    domain = _domain(args)
    backend = _auto_backend(domain, args.r) if args.backend == "auto" else args.backend
    est = graph_entropy_lower_bound(args.m, domain, args.r, backend, _lower_params(args), stream, args.workers)
    rows = [(n, f"{bits:.12g}") for n, bits in enumerate(est.flags["terms"], start=1)]
    return {"config": _echo(args), "lower_bound": est.to_record()}, (("n", "bits"), rows)


def cmd_bounds(args, stream):
    domain = _domain(args)
    params = {"n_samples": args.samples} if args.samples else None
    return {"config": _echo(args), "bounds": entropy_upper_bound(args.m, args.d, args.r, domain, params, stream)}, None


def cmd_census(args, stream):
    domain = _domain(args)
    c = graph_census(args.m, args.d, args.r, domain, args.samples or 100_000, stream, args.workers,
                     structures=not args.no_structures)
    bound = graph_count_bound(args.m, args.d, domain)
    v = Verdict("census<=count_bound", math.log2(c.distinct_graphs), bound, 0.0,
                math.log2(c.distinct_graphs) <= bound)
    return {"config": _echo(args), "distinct_graphs": c.distinct_graphs,
            "distinct_structures": c.distinct_structures, "n_samples": c.n_samples,
            "log2_count_bound": bound, "verdict": v}, None


def cmd_figure1(args, stream):
    rows = acceptance.figure1_rows(args.grid)
    return ({"config": _echo(args), "rows": [{"r": r, "limit": v} for r, v in rows]},
            (("r", "limit"), [(f"{r:.6f}", f"{v:.6f}") for r, v in rows]))


def cmd_volumes(args, stream):
    if not 0 < args.r <= TORUS_EUCLIDEAN_LIMIT:
        raise UsageError("volumes needs 0 < r <= 1/4")
    d, r = args.d, args.r
    grid = np.linspace(0.0, 2 * r, max(args.points, 2))
    header = ["s", "lens", "crescent", "crescent_lower_bound"]
    mc = args.samples is not None
    if mc:
        header += ["lens_mc", "lens_mc_sigma"]
    rows = []
    domain = Domain.torus(d)
    for i, s in enumerate(grid):
        row = [f"{s:.10g}", f"{float(lens_volume(d, r, s)):.12g}", f"{float(crescent_volume(d, r, s)):.12g}",
               f"{float(crescent_lower_bound(d, r, s)):.12g}"]
        if mc:
            a = np.full(d, 0.5)
            b = a.copy()
            b[0] += s
            p, se = region_volume_mc(RegionSpec(r, domain, np.vstack([a, b]), np.empty((0, d))), args.samples,
                                     stream.spawn(i))
            row += [f"{p:.12g}", f"{se:.6g}"]
        rows.append(row)
    return {"config": _echo(args), "columns": header, "rows": rows}, (header, rows)


def cmd_orderstats(args, stream):
    m, r = args.m, args.r
    exact = lab.spacing_tail_probs(m, r)
    n = args.samples or 1_000_000
    mc = lab.spacing_tail_mc(m, r, n, stream.spawn(0).generator())
    verdicts = [acceptance.within(k, mc[k].value, exact[k], mc[k].sigma) for k in acceptance.TAIL_KEYS]
    data = {"config": _echo(args), "closed_form": exact, "verdicts": verdicts}
    if m >= 2:
        rec = lab.expected_range_and_max_gap(m, n, stream.spawn(1).generator())
        data["range_and_gap"] = rec
        verdicts.append(acceptance.within("expected_range", rec.mc_range, rec.expected_range, rec.mc_range_sigma))
        verdicts.append(Verdict("max_interior_gap<=(ln m+1)/m", rec.mc_max_interior_gap, rec.max_gap_bound_ln,
                                rec.mc_max_interior_gap_sigma, rec.mc_max_interior_gap <= rec.max_gap_bound_ln))
    rows = [(v.check, f"{v.statistic:.12g}", f"{v.bound:.12g}", f"{v.sigma:.6g}", str(v.passed).lower())
            for v in verdicts]
    return data, (("check", "statistic", "bound", "sigma", "pass"), rows)


def cmd_boolean(args, stream):
    try:
        ells = [int(x) for x in args.ells.split(",")]
    except ValueError:
        raise UsageError("--ells must be a comma-separated list of integers") from None
    if not 0 < args.r <= TORUS_EUCLIDEAN_LIMIT:
        raise UsageError("boolean needs 0 < r <= 1/4")
    n = args.samples or 200_000
    header = ("ell", "fixed", "fixed_sigma", "poisson", "poisson_sigma", "ratio", "binomial", "binomial_sigma")
    rows, fixed, pois, mix = [], [], [], []
    for ell in ells:
        f = lab.intersection_volume(ell, args.d, args.r, "fixed", n_hits=n, rng=stream.spawn(0, ell).generator())
        p = lab.intersection_volume(ell, args.d, args.r, "poisson", n_hits=n, rng=stream.spawn(1, ell).generator())
        b = lab.binomial_mixture_volume(max(ell, 1), args.d, args.r, n, stream.spawn(2, ell).generator())
        fixed.append(f.value)
        pois.append(p.value)
        mix.append(b.value)
        rows.append((ell, f"{f.value:.12g}", f"{f.sigma:.6g}", f"{p.value:.12g}", f"{p.sigma:.6g}",
                     f"{f.value / p.value:.12g}" if p.value > 0 else "nan", f"{b.value:.12g}", f"{b.sigma:.6g}"))
    data = {"config": _echo(args), "columns": header, "rows": rows}
    xs = [e for e in ells if e > 0]
    slopes = {}
    for name, vals in (("fixed", fixed), ("poisson", pois), ("binomial", mix)):
        ys = [v for e, v in zip(ells, vals) if e > 0]
        # a zero estimate (no hits) has no logarithm
        if len(xs) >= 2 and min(ys) > 0:
            slopes[name] = lab.loglog_slope(xs, ys).slope
    data["slopes"] = slopes
    return data, (header, rows)


def cmd_gammacheck(args, stream):
    lhs, rhs = lab.gamma_integral_check(args.K, args.s0, args.m, args.d)
    valid = lab.gamma_integral_bound(args.K, args.s0, args.m, args.d)
    return {"config": _echo(args), "lhs": lhs, "rhs": rhs, "rhs_Km_form": valid,
            "verdict": Verdict("gamma_integral", lhs, rhs, 0.0, lhs <= rhs),
            "verdict_Km_form": Verdict("gamma_integral_Km_form", lhs, valid, 0.0, lhs <= valid)}, None


def cmd_verify_all(args, stream):
    only = None
    if args.only:
        try:
            only = {int(x) for x in args.only.split(",")}
        except ValueError:
            raise UsageError("--only must be a comma-separated list of criterion numbers") from None
        if not only <= set(range(1, len(acceptance.CRITERIA) + 1)):
            raise UsageError("unknown criterion number")
    results = acceptance.run_all(stream.seed, args.workers, only, echo=lambda s: print(s, file=sys.stderr))
    data = {"config": _echo(args), "pass": all(r.passed for r in results),
            "criteria": [r.to_record() | {"seconds": None} for r in results]}
    return data, None


COMMANDS = {
    "entropy": cmd_entropy,
    "lowerbound": cmd_lowerbound,
    "bounds": cmd_bounds,
    "census": cmd_census,
    "figure1": cmd_figure1,
    "volumes": cmd_volumes,
    "orderstats": cmd_orderstats,
    "boolean": cmd_boolean,
    "gammacheck": cmd_gammacheck,
    "verify-all": cmd_verify_all,
}


def _failed(data) -> bool:
    """True when any verdict-like record in the output failed."""
    if isinstance(data, Verdict):
        return not data.passed
    if isinstance(data, dict):
        if data.get("pass") is False:
            return True
        return any(_failed(v) for v in data.values())
    if isinstance(data, (list, tuple)):
        return any(_failed(v) for v in data)
    return False


def _manifest(args, out: Path | None, status: str, started: float, error: str | None = None) -> dict:
    return {
        "config": _echo(args) if args is not None else {},
        "argv": sys.argv[1:],
        "workers": getattr(args, "workers", None),
        "output": str(out) if out else None,
        "status": status,
        "error": error,
        "wall_seconds": round(time.perf_counter() - started, 6),
        "versions": {"rggent": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _write(out: Path, text: str):
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


def main(argv=None) -> int:
    started = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            _write(Path("rggent.manifest.json"), dumps(_manifest(None, None, "usage_error", started)))
        return int(exc.code or 0)

    fmt = args.format or DEFAULT_FORMAT.get(args.command, "json")
    out = args.out or Path(f"{args.command}.{fmt}")
    status, code, error = "ok", 0, None
    try:
        if args.workers < 1:
            raise UsageError("--workers must be positive")
        if fmt == "csv" and args.command not in CSV_CAPABLE:
            raise UsageError(f"{args.command} writes JSON only")
        if args.m < 0:
            raise UsageError("--m must be non-negative")
        args.seed = seed_from_env(args.seed)
        data, table = COMMANDS[args.command](args, RandomStream(args.seed, (SUBCOMMANDS.index(args.command),)))
        if fmt == "csv":
            _write(out, csv_text(*table))
        else:
            _write(out, dumps(data))
        if _failed(data):
            status, code = "check_failed", 1
    except UsageError as exc:
        status, code, error = "usage_error", 2, str(exc)
        print(f"rggent {args.command}: error: {exc}", file=sys.stderr)
    except (ValueError, ArithmeticError) as exc:
        status, code, error = "numeric_failure", 1, f"{type(exc).__name__}: {exc}"
        diag = {"check": args.command, "statistic": None, "bound": None, "sigma": None, "pass": False,
                "error": error}
        _write(out.with_suffix(".json") if fmt == "csv" else out, json.dumps(diag, indent=2) + "\n")
        print(f"rggent {args.command}: {error}", file=sys.stderr)
    finally:
        _write(manifest_path(out), dumps(_manifest(args, out, status, started, error)))
    if status in ("ok", "check_failed"):
        print(out)
    return code


# ---------------------------------------------------------------------------
# determinism across worker counts


DETERMINISM_RUNS = (
    ("entropy", "--m", "4", "--d", "1", "--r", "0.3", "--samples", "3e6", "--inner", "1e4"),
    ("census", "--m", "5", "--d", "2", "--domain", "torus", "--r", "0.25", "--samples", "3e6"),
    ("lowerbound", "--m", "5", "--d", "2", "--domain", "torus", "--r", "0.2", "--inner", "1e5", "--format", "csv"),
    ("boolean", "--d", "2", "--r", "0.2", "--samples", "1e5"),
    ("figure1", "--grid", "0.01"),
)


def determinism_verdicts(seed: int = 0) -> list[Verdict]:
    """Run a set of subcommands with one and with two workers and compare the data bytes."""
    out = []
    with tempfile.TemporaryDirectory() as tmp:
        for j, run in enumerate(DETERMINISM_RUNS):
            files = []
            for workers in (1, 2):
                path = Path(tmp) / f"{j}-{workers}.out"
                cmd = [sys.executable, "-m", "rggent", *run, "--seed", str(seed), "--workers", str(workers),
                       "--out", str(path)]
                proc = subprocess.run(cmd, capture_output=True, text=True)
                files.append(path.read_bytes() if proc.returncode == 0 and path.exists() else None)
            same = files[0] is not None and files[0] == files[1]
            out.append(Verdict(f"byte_identical[{run[0]}]", float(same), 1.0, 0.0, same))
    return out


if __name__ == "__main__":
    sys.exit(main())
