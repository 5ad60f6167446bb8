"""Command-line interface: ``cmm <subcommand> [options]``.

Exit status is 0 on success, 2 for usage errors, 3 for bad input data or
unreadable files and 4 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import io as cio
from .bayes import PosteriorConfig, Priors, run_posterior
from .distances import DistanceKind
from .errors import DataError, NumericError
from .mle import AnnealingSchedule, MleConfig, opt_cmm
from .model import (
    ENUMERATION_CAP,
    CmmParams,
    exact_log_psi,
    log_prob,
    rc_probabilities_exact,
    rc_probabilities_mc,
)
from .pseudo import is_log_psi, pseudo_log_prob
from .rank_core import Allocation, ClusteringTable, Permutation, preference_matrix
from .sampler import SamplerConfig, rcmm
from .selection import SearchConfig, greedy_search, initial_ct

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _emit(args, name: str, text: str) -> None:
    if args.out:
        with open(os.path.join(cio.ensure_dir(args.out), name), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _allocation(args, n: int | None = None) -> Allocation:
    if getattr(args, "z", None):
        z = Allocation(tuple(int(t) for t in args.z.split(",")))
    elif args.ct:
        z = ClusteringTable.parse(args.ct).canonical_allocation()
    else:
        raise UsageError("give --z or --ct")
    if n is not None and z.n != n:
        raise UsageError(f"allocation has {z.n} items, data has {n}")
    return z


def _table(args, data=None) -> ClusteringTable:
    if args.ct:
        return ClusteringTable.parse(args.ct)
    if data is not None:
        return initial_ct(preference_matrix(data), args.tol if hasattr(args, "tol") else None)[0]
    raise UsageError("give --ct")


def _data(args):
    return cio.read_rankings(args.input, args.orientation)


def _mle_config(args) -> MleConfig:
    return MleConfig(schedule=AnnealingSchedule.geometric(args.beta0, args.beta, args.T),
                     eps=args.eps, N=args.chain_len)


# subcommands --------------------------------------------------------------------

def cmd_simulate(args):
    z = _allocation(args)
    if args.n is not None and args.n != z.n:
        raise UsageError(f"--n {args.n} does not match the allocation size {z.n}")
    data = rcmm(CmmParams(z, args.theta, args.distance),
                SamplerConfig(args.chain_len, args.q, args.seed))
    _emit(args, "rankings.csv", cio.rankings_text(data, _config(args)))


def cmd_eval(args):
    data = _data(args)
    z = _allocation(args, data.n)
    params = CmmParams(z, args.theta, args.distance)
    if not args.pseudo:
        if z.n <= ENUMERATION_CAP:
            lpsi = exact_log_psi(args.theta, z, params.kind)
        else:
            lpsi = is_log_psi(args.theta, z, params.kind, args.M, args.seed).log_psi
    lines = [cio.config_line(_config(args)), "row,log_prob\n"]
    for j, row in enumerate(data.rows, start=1):
        if not isinstance(row, Permutation):
            raise DataError(f"row {j} is partial; eval needs complete rankings")
        v = pseudo_log_prob(row, params) if args.pseudo else log_prob(row, params, lpsi)
        lines.append(f"{j},{cio.fmt(v)}\n")
    _emit(args, "log_prob.csv", "".join(lines))


def cmd_psi(args):
    z = _allocation(args)
    kind = DistanceKind.parse(args.distance)
    if args.exact:
        value, se, method = exact_log_psi(args.theta, z, kind), 0.0, "exact"
    else:
        est = is_log_psi(args.theta, z, kind, args.M, args.seed)
        value, se, method = est.log_psi, est.se, "is"
    text = (cio.config_line(_config(args)) + "method,log_psi,se\n"
            + f"{method},{cio.fmt(value)},{cio.fmt(se)}\n")
    _emit(args, "psi.csv", text)


def cmd_fit_mle(args):
    data = _data(args)
    ct = _table(args, data)
    z, theta = opt_cmm(data, ct, args.distance, _mle_config(args), args.seed)
    payload = {"z": list(z.labels), "theta": float(cio.fmt(theta)),
               "clustering_table": list(ct.sizes),
               "rendering": cio.render_clusters(z, data.item_names)}
    _emit_json(args, "fit.json", payload)


def _emit_json(args, name, payload):
    if args.out:
        cio.write_json(os.path.join(cio.ensure_dir(args.out), name), payload, _config(args))
    else:
        out = dict(payload, config=_config(args))
        sys.stdout.write(json.dumps(out, indent=2, sort_keys=True, ensure_ascii=False,
                                    default=str) + "\n")


def cmd_fit_bayes(args):
    data = _data(args)
    ct = _table(args, data)
    config = PosteriorConfig(N=args.aux_len, theta0=args.theta0)
    trace = run_posterior(data, ct, args.distance, Priors(args.shape, args.rate),
                          args.iters, args.burn_in, config, args.seed)
    out = cio.ensure_dir(args.out or ".")
    cfg = _config(args)
    cio.write_trace(os.path.join(out, "trace.csv"), trace, cfg)
    cio.write_json(os.path.join(out, "map.json"), cio.map_summary(trace, data.item_names), cfg)
    params = CmmParams(trace.map_z(), trace.theta_map(), args.distance)
    if params.n <= 8:
        rc = rc_probabilities_exact(params)
    else:
        rc = rc_probabilities_mc(params, args.rc_samples, None, args.seed)
    cio.write_rc_probs(os.path.join(out, "rc_probs.csv"), rc, cfg)
    print(cio.render_clusters(params.z, data.item_names))


def cmd_search_ct(args):
    data = _data(args)
    ct = _table(args, data)
    config = SearchConfig(mle=_mle_config(args), M=args.M, threads=args.threads,
                          max_neighbors=args.max_neighbors)
    res = greedy_search(data, ct, args.distance, args.criterion, config, args.seed)
    out = cio.ensure_dir(args.out or ".")
    cio.write_search_report(os.path.join(out, "search_report.csv"), res, _config(args))
    b = res.best
    flag = "" if res.decisive else " (not decisive)"
    print(f"best {b.ct}: {cio.fmt(b.value)} +/- {cio.fmt(b.se)}{flag}")


def cmd_rc_probs(args):
    z = _allocation(args)
    params = CmmParams(z, args.theta, args.distance)
    if args.exact:
        rc = rc_probabilities_exact(params)
    else:
        rc = rc_probabilities_mc(params, args.samples, args.chain_len, args.seed)
    out = cio.ensure_dir(args.out or ".")
    cio.write_rc_probs(os.path.join(out, "rc_probs.csv"), rc, _config(args))


def cmd_pref_matrix(args):
    data = _data(args)
    out = cio.ensure_dir(args.out or ".")
    cio.write_pref_matrix(os.path.join(out, "pref_matrix.csv"), preference_matrix(data),
                          data.item_names, _config(args))


def cmd_init_ct(args):
    data = _data(args)
    ct, z = initial_ct(preference_matrix(data), args.tol)
    _emit_json(args, "init_ct.json", {"clustering_table": list(ct.sizes), "z": list(z.labels),
                                      "rendering": cio.render_clusters(z, data.item_names)})


# parser -------------------------------------------------------------------------

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--distance", choices=["hamming", "kendall"], default="kendall")
    common.add_argument("--ct", help="clustering table, e.g. 2,2,2")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    common.add_argument("--out", help="output directory (stdout when omitted, where possible)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True)
    data.add_argument("--orientation", choices=["ordering", "ranks"], default="ordering")

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--eps", type=float, default=0.01)
    fit.add_argument("--chain-len", type=_positive_int, default=None)
    fit.add_argument("--beta0", type=float, default=0.05)
    fit.add_argument("--beta", type=float, default=1.1)
    fit.add_argument("--T", type=_positive_int, default=150)

    p = argparse.ArgumentParser(prog="cmm", description="Clustered Mallows model tools")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="draw rankings")
    s.add_argument("--n", type=int)
    s.add_argument("--z", help="allocation labels, e.g. 1,1,2,2")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--q", type=_positive_int, required=True)
    s.add_argument("--chain-len", type=_positive_int, default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("eval", parents=[common, data], help="log-probability of each row")
    s.add_argument("--z")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--pseudo", action="store_true", help="forward-ranking approximation")
    s.add_argument("--M", type=_positive_int, default=100_000)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("psi", parents=[common], help="log normalising constant")
    s.add_argument("--z")
    s.add_argument("--theta", type=float, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true")
    g.add_argument("--is", dest="importance", action="store_true")
    s.add_argument("--M", type=_positive_int, default=100_000)
    s.set_defaults(func=cmd_psi)

    s = sub.add_parser("fit-mle", parents=[common, data, fit], help="maximum likelihood fit")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_fit_mle)

    s = sub.add_parser("fit-bayes", parents=[common, data], help="posterior sampling")
    s.add_argument("--iters", type=_positive_int, default=11_000)
    s.add_argument("--burn-in", type=int, default=1_000)
    s.add_argument("--aux-len", type=_positive_int, default=200)
    s.add_argument("--shape", type=float, default=2.0)
    s.add_argument("--rate", type=float, default=2.0)
    s.add_argument("--theta0", type=float, default=1.0)
    s.add_argument("--rc-samples", type=_positive_int, default=10_000)
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_fit_bayes)

    s = sub.add_parser("search-ct", parents=[common, data, fit], help="greedy table search")
    s.add_argument("--criterion", choices=["info", "data"], default="info")
    s.add_argument("--M", type=_positive_int, default=100_000)
    s.add_argument("--max-neighbors", type=_positive_int)
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_search_ct)

    s = sub.add_parser("rc-probs", parents=[common], help="rank-cluster probabilities")
    s.add_argument("--z")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--exact", action="store_true")
    s.add_argument("--samples", type=_positive_int, default=10_000)
    s.add_argument("--chain-len", type=_positive_int, default=None)
    s.set_defaults(func=cmd_rc_probs)

    s = sub.add_parser("pref-matrix", parents=[common, data], help="pairwise preference matrix")
    s.set_defaults(func=cmd_pref_matrix)

    s = sub.add_parser("init-ct", parents=[common, data], help="initial table from preferences")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_init_ct)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, OverflowError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
