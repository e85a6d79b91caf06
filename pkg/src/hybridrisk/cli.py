"""Command-line entry point: ``hybridrisk <verb> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 leakage-guard abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import runner
from .config import EVAL_MODES, load_config
from .errors import ConfigError, HybridRiskError, LeakageError

VERBS = ("prepare", "train", "evaluate", "external-validate", "report")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hybridrisk",
        description="Train, freeze and externally validate hybrid soft-voting "
                    "diabetes risk classifiers.")
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--config", help="experiment JSON merged over the bundled defaults")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--tau", type=float, help="decision threshold (default 0.5)")
    ap.add_argument("--bootstrap", type=int, metavar="B",
                    help="bootstrap resamples for CIs (default 1000)")
    ap.add_argument("--eval-mode", choices=EVAL_MODES,
                    help="internal test at natural prevalence or majority-undersampled")
    ap.add_argument("--mapping", help="feature mapping JSON for the external cohort")
    ap.add_argument("--out", default="bundle", help="bundle directory (default ./bundle)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which matches the config-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.tau is not None and not 0 < args.tau < 1:
            raise ConfigError("--tau must lie in (0, 1)")
        if args.bootstrap is not None and args.bootstrap < 1:
            raise ConfigError("--bootstrap must be >= 1")
        if args.verb == "report":
            print(runner.cmd_report(args.out), end="")
            return 0
        needs_cfg = args.verb in ("prepare", "train") or any(
            v is not None for v in (args.config, args.seed))
        cfg = load_config(args.config, seed=args.seed, tau=args.tau,
                          eval_mode=args.eval_mode, B=args.bootstrap,
                          mapping=args.mapping) if needs_cfg else None
        if args.verb == "prepare":
            summary = runner.cmd_prepare(cfg, args.out)
            print(json.dumps(summary, indent=2, sort_keys=True))
        elif args.verb == "train":
            path = runner.cmd_train(cfg, args.out)
            print(f"bundle written to {path}")
        elif args.verb == "evaluate":
            rep = runner.cmd_evaluate(args.out, cfg, tau=args.tau, B=args.bootstrap,
                                      eval_mode=args.eval_mode)
            _print_summary(rep)
        else:
            rep = runner.cmd_external_validate(args.out, cfg, tau=args.tau, B=args.bootstrap,
                                               mapping=args.mapping)
            _print_summary(rep)
    except LeakageError as exc:
        print(f"leakage guard: {exc}", file=sys.stderr)
        return exc.exit_code
    except HybridRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def _print_summary(rep: dict) -> None:
    print(f"{rep['cohort']}: n={rep['n']} prevalence={rep['prevalence']:.4f}")
    for name, m in rep["models"].items():
        print(f"  {name:8s} AUROC={m['auroc']:.4f} AUPRC={m['auprc']:.4f} "
              f"Brier={m['brier']:.4f}")


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
