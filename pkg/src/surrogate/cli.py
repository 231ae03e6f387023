"""Command line entry point: ``surrogate simulate|verify|sweep|presets``."""
from __future__ import annotations

import argparse
import glob
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import load_config, predefined_configs, preset
from .errors import ConfigurationError, VerificationMismatch
from .runner import EXIT_CONFIG, EXIT_MISMATCH, EXIT_OK, run_scenario, verify_matrix


def _simulate(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.deterministic:
            cfg = cfg.replace(deterministic=True)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    res = run_scenario(cfg, args.out)
    if res.exit_code != EXIT_OK:
        print(f"{cfg.name}: {res.message}", file=sys.stderr)
    else:
        for kind, path in res.outputs.items():
            print(f"{kind}: {path}")
    return res.exit_code


def _verify(args) -> int:
    try:
        verify_matrix(max_n=args.max_n, seed=args.seed)
    except VerificationMismatch as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _sweep(args) -> int:
    files = sorted(glob.glob(args.pattern))
    if not files:
        print(f"no config files match {args.pattern!r}", file=sys.stderr)
        return EXIT_CONFIG
    configs = []
    for f in files:
        try:
            configs.append((Path(f).stem, load_config(f)))
        except ConfigurationError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    def run(item):
        stem, cfg = item
        return stem, run_scenario(cfg, Path(args.out) / stem)

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(run, configs))
    code = EXIT_OK
    for stem, res in results:
        status = "ok" if res.exit_code == EXIT_OK else f"exit {res.exit_code}: {res.message}"
        print(f"{stem}: {status}")
        code = max(code, res.exit_code)
    return code


def _presets(args) -> int:
    if args.action == "list":
        for name, cfg in predefined_configs().items():
            print(f"{name:16s} scenario={cfg.scenario} N={cfg.n_modes} n_exc={cfg.n_exc} "
                  f"gamma_inv={cfg.gamma_inv_fs:.0f} fs kappa={cfg.kappa:g}")
        return EXIT_OK
    if not args.name:
        print("presets dump needs a preset name", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sys.stdout.write(preset(args.name).to_text())
    except ConfigurationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surrogate", description="Morse oscillator in a truncated spin bath")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one configuration file")
    s.add_argument("config")
    s.add_argument("--out", default=".")
    s.add_argument("--deterministic", action="store_true")
    s.set_defaults(func=_simulate)

    v = sub.add_parser("verify", help="cross-check the propagator against dense diagonalization")
    v.add_argument("--max-n", type=int, default=3)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=_verify)

    w = sub.add_parser("sweep", help="run every config matching a glob, in parallel")
    w.add_argument("pattern")
    w.add_argument("--out", default=".")
    w.add_argument("--workers", type=int, default=None)
    w.set_defaults(func=_sweep)

    r = sub.add_parser("presets", help="list or dump predefined configurations")
    r.add_argument("action", choices=["list", "dump"])
    r.add_argument("name", nargs="?")
    r.set_defaults(func=_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
