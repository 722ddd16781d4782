"""Command line entry point: ``freemax <experiment> [options]``."""
from __future__ import annotations

import argparse
import sys

from .errors import DomainError
from .harness import EXPERIMENTS, UsageError, parse_config, run

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="freemax", description="Extremal convolution and limit matrix law experiments.",
                epilog="experiments: " + ", ".join(EXPERIMENTS))
    p.add_argument("experiment", nargs="?", help="experiment name")
    p.add_argument("--dist", help="distribution spec, e.g. 'gumbel(0,1)'")
    p.add_argument("--dist2", help="second distribution spec")
    p.add_argument("--N", help="dimension(s), comma separated")
    p.add_argument("--k", help="oracle steps / largest k")
    p.add_argument("--p", help="number of parts, comma separated")
    p.add_argument("--draws", help="Monte Carlo draws (seeds for spectral-convergence)")
    p.add_argument("--seed", help="root seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid", help="grid size")
    p.add_argument("--input", help="input CSV (log-density)")
    p.add_argument("--config", help="key=value config file")
    return p


def main(argv=None) -> int:
    try:
        ns = vars(build_parser().parse_args(argv))
        config_path = ns.pop("config")
        cfg = parse_config(ns, config_path)
        manifest = run(cfg)
    except (UsageError, DomainError, OSError) as exc:
        print(f"freemax: usage error: {exc}", file=sys.stderr)
        print("experiments: " + ", ".join(EXPERIMENTS), file=sys.stderr)
        return EXIT_USAGE
    for c in manifest.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name}: {c.value:.6g} (criterion {c.threshold})")
    verdict = "PASS" if manifest.passed else "FAIL"
    print(f"{verdict}: {cfg.experiment} ({sum(c.passed for c in manifest.checks)}/{len(manifest.checks)} checks)"
          f" -> {manifest.outputs and cfg.out}")
    return EXIT_PASS if manifest.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
