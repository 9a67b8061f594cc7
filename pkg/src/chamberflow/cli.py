"""Command-line entry point: ``chamberflow --group sl3 --suite oscint --h-list 0.2,0.1,0.05``."""

import argparse
import sys

from . import harness


def _h_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse h list {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="chamberflow", description="Run verification suites and write reports.")
    p.add_argument("--config", help="JSON config file; explicit flags override its entries")
    p.add_argument("--group", choices=harness.GROUPS)
    p.add_argument("--suite", choices=harness.SUITES)
    p.add_argument("--h-list", type=_h_list, help="comma-separated decreasing h values")
    p.add_argument("--tol-scale", type=float)
    p.add_argument("--grid-scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="JSON report path; tables go next to it as CSV")
    p.add_argument("--jobs", type=int, help="number of worker processes")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"group": args.group, "suite": args.suite, "h_list": args.h_list, "tol_scale": args.tol_scale,
                 "grid_scale": args.grid_scale, "seed": args.seed, "out": args.out, "jobs": args.jobs}
    try:
        if args.config:
            cfg = harness.load_config(args.config, **overrides)
        else:
            cfg = harness.validate(harness.SuiteConfig(**{k: v for k, v in overrides.items() if v is not None}))
    except (harness.ConfigError, OSError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    records = harness.run_suite(cfg)
    paths = harness.write_report(records, cfg)
    for r in records:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.test_id}: measured {r.measured:.3e} (tolerance {r.tolerance:.1e}; {r.expected}) [{r.anchor}]")
    print("wrote " + ", ".join(paths))
    return 0 if all(r.passed for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
