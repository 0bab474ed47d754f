"""Command-line front door: distance queries, group invariants, trajectory
export, expansiveness test campaigns, counterexample generation."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import config as config_mod
from . import flows, lab, metric
from .fuchsian import (BudgetExceededError, FuchsianGroup, QuotientPoint,
                       load_group_file, preset_bolza)
from .sl2 import GroupElement, one_param


def parse_point(token: str, group: FuchsianGroup | None = None) -> GroupElement:
    """e | a:t | b:t | c:t | gen:k | four comma-separated reals."""
    if token == "e":
        return GroupElement(np.eye(2))
    if ":" in token:
        head, _, tail = token.partition(":")
        if head in ("a", "b", "c"):
            kind = {"a": "geodesic", "b": "stable", "c": "unstable"}[head]
            try:
                return one_param(kind, float(tail))
            except ValueError as exc:
                raise ValueError(f"bad time in point spec {token!r}") from exc
        if head == "gen":
            if group is None:
                raise ValueError("gen:k needs a group (quotient mode)")
            try:
                k = int(tail)
            except ValueError as exc:
                raise ValueError(f"bad generator index in {token!r}") from exc
            if not 0 <= k < len(group.generators):
                raise ValueError(f"generator index out of range in {token!r}")
            return group.generators[k]
        raise ValueError(f"unknown point spec {token!r}")
    parts = token.split(",")
    if len(parts) != 4:
        raise ValueError(f"point spec {token!r} is not e, a:t, b:t, c:t, "
                         "gen:k, or four comma-separated reals")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"non-numeric entry in point spec {token!r}") from exc
    return GroupElement(np.array(vals).reshape(2, 2))


def _build_group(cfg: config_mod.Config, group_file: str | None) -> FuchsianGroup:
    if group_file:
        return load_group_file(group_file, max_ball_size=cfg.max_ball_size)
    if cfg.preset != "bolza":
        raise ValueError(f"unknown preset {cfg.preset!r}")
    return preset_bolza(max_ball_size=cfg.max_ball_size)


def _resolve(args) -> config_mod.Config:
    cfg = config_mod.resolve_config(getattr(args, "config", None))
    if getattr(args, "preset", None):
        cfg.preset = args.preset
    if getattr(args, "max_ball_size", None):
        cfg.max_ball_size = args.max_ball_size
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _add_common(p):
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--preset", help="group preset (default bolza)")
    p.add_argument("--group-file", dest="group_file",
                   help="load generators from a group file instead")
    p.add_argument("--max-ball-size", dest="max_ball_size", type=int,
                   help="enumeration budget")


def cmd_dist(args) -> int:
    cfg = _resolve(args)
    group = None
    if args.quotient or "gen:" in args.g + args.h:
        group = _build_group(cfg, args.group_file)
    try:
        g = parse_point(args.g, group)
        h = parse_point(args.h, group)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.quotient:
        qd = group.quotient_distance(QuotientPoint(g), QuotientPoint(h))
        print(f"{qd.value:.5f}")
        print(f"witness {group.word_str(group.invert_word(qd.word_raw))}")
    else:
        d = metric.distance(g, h, restarts=cfg.shoot_restarts,
                            xcheck=args.xcheck, xcheck_tol=cfg.xcheck_tol)
        print(f"{d:.5f}")
    return 0


def cmd_sys(args) -> int:
    cfg = _resolve(args)
    group = _build_group(cfg, args.group_file)
    rec = group.shortest_record()
    print(f"systole {rec.length:.6f}")
    print(f"sigma0 {rec.sigma0:.6f}")
    print(f"eps_star {rec.eps_star:.6f}")
    print(f"min_trace {rec.trace:.6f}")
    print(f"min_trace_word {rec.word}")
    print(f"cert_radius {rec.radius:.3f}")
    return 0


def _finish_test(args, verdict, started) -> int:
    elapsed = time.monotonic() - started
    out = args.out or f"{verdict.name}_verdict.json"
    lab.write_verdict(out, verdict, elapsed)
    print(f"{verdict.name}: {verdict.outcome} "
          f"({len(verdict.witnesses)} experiments) -> {out}")
    return verdict.exit_code


def cmd_test(args) -> int:
    cfg = _resolve(args)
    group = _build_group(cfg, args.group_file)
    started = time.monotonic()
    if args.which == "bw":
        verdict = lab.bw_test_geodesic(
            group, eps=args.eps, window=args.window, n_pairs=args.pairs,
            n_reparams=args.reparams, seed=cfg.seed, delta=args.delta,
        )
    elif args.which == "sep":
        kind = {"stable": "stable_horocycle",
                "unstable": "unstable_horocycle",
                "geodesic": "geodesic"}[args.flow]
        verdict = lab.separating_test_horocycle(
            group, kind=kind, delta=args.delta, window=args.window,
            n_pairs=args.pairs, seed=cfg.seed,
        )
    elif args.which == "kin":
        verdict = lab.kinematic_test_time_change(
            group, eps=args.eps, window=args.window, n_pairs=args.pairs,
            seed=cfg.seed,
        )
    else:
        verdict = lab.kh_test_horocycle(
            group, delta=args.delta, window=args.window,
            n_triples=args.triples, seed=cfg.seed,
        )
    return _finish_test(args, verdict, started)


def cmd_cex(args) -> int:
    cfg = _resolve(args)
    group = _build_group(cfg, args.group_file)
    started = time.monotonic()
    try:
        if args.which == "horocycle-bw":
            verdict = lab.counterexample_horocycle_not_bw(group, args.delta)
            for w in verdict.witnesses:
                for key, val in sorted(w.items()):
                    print(f"{key} {val}")
            return _finish_test(args, verdict, started)
        codes = []
        directions = (["stable", "unstable"] if args.direction == "both"
                      else [args.direction])
        for direction in directions:
            verdict = lab.counterexample_geodesic_not_separating(
                group, args.delta, direction=direction,
            )
            for row in verdict.witnesses[0]["decay_table"]:
                print(f"t={row['t']:+.0f} distance={row['distance']:.3e} "
                      f"bound={row['bound']:.3e}")
            if args.out and len(directions) == 1:
                out = args.out
            elif args.out:
                out = f"{args.out}.{direction}"
            else:
                out = f"{verdict.name}_{direction}_verdict.json"
            codes.append(_finish_test(argparse.Namespace(out=out),
                                      verdict, started))
        return max(codes)
    except BudgetExceededError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2


def cmd_flow(args) -> int:
    kind = {"geodesic": "geodesic", "stable": "stable_horocycle",
            "unstable": "unstable_horocycle"}[args.kind]
    try:
        start = parse_point(args.start)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    traj = flows.sample_trajectory(kind, QuotientPoint(start),
                                   args.t0, args.t1, args.n)
    text = flows.trajectory_csv(traj)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.n} rows -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="horolab",
        description="flows on a compact hyperbolic quotient: distances, "
                    "invariants, expansiveness experiments",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="distance between two points")
    _add_common(p)
    p.add_argument("g")
    p.add_argument("h")
    p.add_argument("--quotient", action="store_true",
                   help="distance on the quotient, with witness word")
    p.add_argument("--xcheck", action="store_true",
                   help="cross-check against an independent path bound")
    p.set_defaults(fn=cmd_dist)

    p = sub.add_parser("sys", help="certified group invariants")
    _add_common(p)
    p.set_defaults(fn=cmd_sys)

    pt = sub.add_parser("test", help="run an expansiveness test campaign")
    tsub = pt.add_subparsers(dest="which", required=True)

    p = tsub.add_parser("bw", help="reparametrized-tube geodesic test")
    _add_common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--window", type=float, default=20.0)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--reparams", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_test)

    p = tsub.add_parser("sep", help="matched-time separation test")
    _add_common(p)
    p.add_argument("--flow", choices=["stable", "unstable", "geodesic"],
                   default="stable")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_test)

    p = tsub.add_parser("kin", help="time-changed horocycle test")
    _add_common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_test)

    p = tsub.add_parser("kh", help="two-condition horocycle test")
    _add_common(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--triples", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_test)

    pc = sub.add_parser("cex", help="emit a counterexample construction")
    csub = pc.add_subparsers(dest="which", required=True)

    p = csub.add_parser("horocycle-bw",
                        help="reparametrized closeness without orbit relation")
    _add_common(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_cex)

    p = csub.add_parser("geodesic-sep",
                        help="forward-converging non-orbit pair")
    _add_common(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--direction", choices=["stable", "unstable", "both"],
                   default="stable")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_cex)

    p = sub.add_parser("flow", help="sample a trajectory to CSV")
    p.add_argument("kind", choices=["geodesic", "stable", "unstable"])
    p.add_argument("start")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--n", type=int, default=11)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_flow)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceededError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
