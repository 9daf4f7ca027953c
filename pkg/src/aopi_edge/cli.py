"""Command-line entry point: ``aopi-edge <subcommand>``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import InfeasibleError, SpecError

EXIT_OK, EXIT_SPEC, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip().lower() for x in text.split(",") if x.strip()]


def cmd_init(args) -> int:
    from .scenario import TEMPLATE

    if args.out is None:
        sys.stdout.write(TEMPLATE)
        return EXIT_OK
    out = Path(args.out)
    if out.exists() and not args.force:
        print(f"{out} exists; pass --force to overwrite", file=sys.stderr)
        return EXIT_IO
    out.write_text(TEMPLATE)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_trace_gen(args) -> int:
    from .scenario import gen_traces, load_scenario, write_trace

    spec = load_scenario(args.spec)
    slots = args.slots or spec.slots
    trace = gen_traces(spec.traces, slots, spec.n_servers, args.seed)
    write_trace(trace, args.out)
    print(f"wrote {slots} slots x {spec.n_servers} servers to {args.out}")
    return EXIT_OK


def cmd_curve(args) -> int:
    from .curves import write_all_curves

    for p in write_all_curves(args.out, args.target):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .experiment import emit_results, run_experiment
    from .scenario import load_scenario

    spec = load_scenario(args.spec)
    if args.V is not None:
        spec = spec.with_overrides(V=args.V)
    strategies = args.strategies or None
    if strategies:
        from .scenario import STRATEGY_NAMES

        bad = [s for s in strategies if s not in STRATEGY_NAMES]
        if bad:
            raise SpecError(f"unknown strategies {bad}", field="--strategies")
    run = run_experiment(spec, strategies, args.mode, args.seeds, args.slots,
                         record_decisions=not args.no_decisions)
    summary = emit_results(run, args.out, decisions=not args.no_decisions)
    for name, s in summary["strategies"].items():
        a, p = s["mean_aopi"], s["mean_accuracy"]
        print(f"{name:5s} mean AoPI {a:.4f} s  mean accuracy {p:.4f}" if a is not None
              else f"{name:5s} no data")
    if run.errors:
        print(f"{len(run.errors)} slot error(s); see summary.json", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .experiment import write_json
    from .sim.validation import validation_grid

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = validation_grid(frames=args.frames, seed=args.seed, mu=args.mu)
    worst = 0.0
    lines = ["policy,rho,p,mu,closed_form,simulated,ci95,rel_error"]
    for r in rows:
        worst = max(worst, r.rel_error)
        lines.append(",".join([r.policy.name, repr(r.rho), repr(r.p), repr(r.mu), repr(r.closed_form),
                               repr(r.simulated), repr(r.ci95), repr(r.rel_error)]))
        print(f"{r.policy.name:5s} rho={r.rho:<4} p={r.p:<4} closed={r.closed_form:.5f} "
              f"sim={r.simulated:.5f} err={100 * r.rel_error:.2f}%")
    (out / "validation.csv").write_text("\n".join(lines) + "\n")
    write_json({"frames": args.frames, "seed": args.seed, "max_rel_error": worst,
                "tolerance": args.tolerance, "passed": worst <= args.tolerance}, out / "validation.json")
    print(f"max relative error {100 * worst:.2f}% (tolerance {100 * args.tolerance:.1f}%)")
    return EXIT_OK if worst <= args.tolerance else 1


def cmd_report(args) -> int:
    import json

    from .experiment import read_slots, summarize, write_json

    run_dir = Path(args.run)
    rows = read_slots(run_dir / "slots.csv")
    p_min, V = args.p_min, args.V
    prev = run_dir / "summary.json"
    if (p_min is None or V is None) and prev.exists():
        old = json.loads(prev.read_text())
        p_min = old.get("p_min") if p_min is None else p_min
        V = old.get("V") if V is None else V
    if args.spec:
        from .scenario import load_scenario

        spec = load_scenario(args.spec)
        p_min = spec.p_min if p_min is None else p_min
        V = spec.V if V is None else V
    if p_min is None or V is None:
        raise SpecError("p_min and V are unknown; pass --spec or --p-min/--V", field="--p-min")
    summary = summarize(rows, p_min, V)
    target = Path(args.out) if args.out else run_dir / "report.json"
    write_json(summary, target)
    for name, s in summary["strategies"].items():
        print(f"{name:5s} mean AoPI {s['mean_aopi']}  mean accuracy {s['mean_accuracy']}")
    for k, v in sorted(summary["ratios"].items()):
        print(f"{k:10s} {v:.4f}")
    print(f"wrote {target}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aopi-edge", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write a template scenario file")
    p.add_argument("--out", help="destination (stdout if omitted)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("trace-gen", help="generate a synthetic capacity trace")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--slots", type=int)
    p.set_defaults(func=cmd_trace_gen)

    p = sub.add_parser("curve", help="minimum-rate and policy-threshold sweeps")
    p.add_argument("--out", required=True)
    p.add_argument("--target", type=float, default=0.5, help="AoPI target in seconds")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("run", help="run strategies over a scenario")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("analytic", "simulate"), default="analytic")
    p.add_argument("--strategies", type=_str_list)
    p.add_argument("--seeds", type=_int_list)
    p.add_argument("--slots", type=int)
    p.add_argument("--V", type=float)
    p.add_argument("--no-decisions", action="store_true", help="skip decisions.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="simulator versus closed-form grid")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu", type=float, default=4.0)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="recompute the summary from slots.csv")
    p.add_argument("--run", required=True, help="directory holding slots.csv")
    p.add_argument("--spec")
    p.add_argument("--p-min", dest="p_min", type=float)
    p.add_argument("--V", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except InfeasibleError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
