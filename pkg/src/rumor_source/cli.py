"""Command-line front door.

Subcommands: simulate, estimate, confset, bound, urncheck, montecarlo,
prop1, prop2.  Report commands write CSV plus a JSON mirror and render a
companion figure unless --no-plots is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from ._rng import derive_seed
from .campaign import Campaign, emit, prop1_experiment, prop2_experiment, run_campaign
from .confidence import (confset_glued, confset_phi, confset_psi,
                         glued_union_error_bound, optimize_psi_topk_bound,
                         phi_ball_error_bound, phi_displacement_bound,
                         psi_topk_error_bound, required_radius, required_topk)
from .diffusion import SimConfig, SourcePlacement, simulate
from .estimators import score_all
from .trees import GLUED, REGULAR, GraphSpec, load_tree, save_tree
from .urnlab import (coupled_dominance_check, dirichlet_moment_check,
                     path_beta_check, product_tail_check)


def _spec_from_args(args) -> GraphSpec:
    if args.kind == REGULAR:
        return GraphSpec(REGULAR, args.d)
    return GraphSpec(GLUED, args.d, args.D)


def _cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    placement = None
    if spec.kind == GLUED:
        placement = SourcePlacement(args.source_half, args.source_dist)
    tree = simulate(SimConfig(spec=spec, n=args.n, seed=args.seed,
                              source_placement=placement))
    save_tree(tree, args.out)
    print(f"wrote {args.out} (n={tree.n}, boundary={tree.boundary_size()})")
    return 0


def _cmd_estimate(args) -> int:
    tree = load_tree(args.tree)
    table = score_all(tree)
    depth = tree.depth
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "log_phi", "log_R", "psi", "dist_to_source"])
        for k in range(1, tree.n + 1):
            writer.writerow([k, repr(float(table.log_phi[k])),
                             repr(float(table.log_r[k])),
                             int(table.psi[k]), int(depth[k])])
    print(f"wrote {args.out} ({tree.n} rows)")
    return 0


def _cmd_confset(args) -> int:
    tree = load_tree(args.tree)
    if args.method == "psi":
        if args.k is None:
            raise SystemExit("--k is required for method psi")
        cs = confset_psi(score_all(tree), args.k)
    elif args.method == "phi":
        if args.radius is None:
            raise SystemExit("--radius is required for method phi")
        cs = confset_phi(tree, score_all(tree), args.radius)
    else:
        if args.radius is None:
            raise SystemExit("--radius is required for method glued")
        cs = confset_glued(tree, args.radius)
    doc = {"method": cs.method, "param": cs.param,
           "members": sorted(cs.members), "centers": list(cs.centers)}
    _write_json(doc, args.out)
    return 0


def _cmd_bound(args) -> int:
    formula = args.formula
    if formula == "t1":
        _require(args, "K", "eta")
        report = psi_topk_error_bound(args.d, args.K, args.eta).to_dict()
    elif formula == "t1opt":
        _require(args, "K")
        report = optimize_psi_topk_bound(args.d, args.K)[1].to_dict()
    elif formula == "t2":
        _require(args, "ell")
        report = phi_displacement_bound(args.d, args.ell).to_dict()
    elif formula == "cor2":
        _require(args, "L")
        report = phi_ball_error_bound(args.d, args.L).to_dict()
    elif formula == "prop2":
        _require(args, "D", "L")
        report = glued_union_error_bound(args.d, args.D, args.L).to_dict()
    elif formula == "reqK":
        _require(args, "eps")
        report = required_topk(args.d, args.eps).to_dict()
    else:  # reqL
        _require(args, "eps")
        report = required_radius(args.d, args.eps).to_dict()
    _write_json(report, args.out)
    return 0


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise SystemExit(f"--{name} is required for formula {args.formula}")


def _write_json(doc, out) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}")
    else:
        print(text)


def _cmd_urncheck(args) -> int:
    if args.test == "dirichlet":
        report = dirichlet_moment_check(args.d, args.K, args.n, args.trials,
                                        args.seed)
    elif args.test == "pathbeta":
        report = path_beta_check(args.d, args.n, args.trials, args.seed)
    elif args.test == "dominance":
        report = coupled_dominance_check(args.d, args.steps, args.trials,
                                         args.seed)
    else:
        s_grid = [float(s) for s in args.s_grid.split(",")]
        report = product_tail_check(args.d, args.trials, s_grid, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"urncheck_{args.test}"
    (out_dir / f"{stem}.json").write_text(json.dumps(report.to_dict(), indent=2))
    with open(out_dir / f"{stem}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        keys = sorted(report.samples)
        writer.writerow(keys)
        width = max((np.asarray(report.samples[k]).ravel().shape[0]
                     for k in keys), default=0)
        columns = [np.asarray(report.samples[k]).ravel() for k in keys]
        for i in range(width):
            writer.writerow([repr(float(col[i])) if i < col.shape[0] else ""
                             for col in columns])
    if not args.no_plots:
        from .plots import urncheck_figure

        urncheck_figure(report, out_dir / f"{stem}.png")
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.passed else 1


def _cmd_montecarlo(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    campaign = Campaign.from_dict(doc)
    result = run_campaign(campaign, workers=args.workers)
    written = emit(result, args.out, plots=not args.no_plots)
    for kind, path in written.items():
        print(f"wrote {path}")
    return 0


def _cmd_prop1(args) -> int:
    checkpoints = [int(c) for c in args.checkpoints.split(",")]
    result = prop1_experiment(args.d, args.D, checkpoints, args.trials,
                              args.seed, source_distance=args.source_dist,
                              workers=args.workers)
    for path in emit(result, args.out, plots=not args.no_plots).values():
        print(f"wrote {path}")
    return 0


def _cmd_prop2(args) -> int:
    result = prop2_experiment(args.d, args.D, args.n, args.L, args.trials,
                              args.seed, source_distance=args.source_dist,
                              workers=args.workers)
    for path in emit(result, args.out, plots=not args.no_plots).values():
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumor-source",
        description="diffusion source estimation on regular trees")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="grow one infection tree")
    p.add_argument("--kind", choices=[REGULAR, GLUED], default=REGULAR)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source-dist", type=int, default=1,
                   help="host distance from the source to the bridge (glued)")
    p.add_argument("--source-half", choices=["d", "D"], default="d")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="score every node of a tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("confset", help="build a confidence set for the source")
    p.add_argument("--tree", required=True)
    p.add_argument("--method", choices=["psi", "phi", "glued"], required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_confset)

    p = sub.add_parser("bound", help="evaluate a closed-form error bound")
    p.add_argument("--formula", required=True,
                   choices=["t1", "t1opt", "t2", "cor2", "prop2", "reqK", "reqL"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("urncheck", help="run one urn limit-law check")
    p.add_argument("--test", required=True,
                   choices=["dirichlet", "pathbeta", "dominance", "tail"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--steps", type=int, default=1_000)
    p.add_argument("--s-grid", default="1e-6,1e-4,1e-2,1e-1")
    p.add_argument("--out", default=".")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_urncheck)

    p = sub.add_parser("montecarlo", help="run a campaign from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("prop1", help="glued-host drift experiment")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--checkpoints", required=True,
                   help="comma-separated sizes, e.g. 100,1000,10000")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--source-dist", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_prop1)

    p = sub.add_parser("prop2", help="glued union-set coverage experiment")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--source-dist", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_prop2)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
