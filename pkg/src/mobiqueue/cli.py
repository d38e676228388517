"""Command-line entry point ``mobiqueue``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure, 4 I/O failure.
"""

import argparse
from importlib import resources
import logging
import os
from pathlib import Path
import sys

from .config import ConfigError, SweepSpec, _check_axis, _convert_axis, load_config, parse_config
from .errors import NumericalError, ParameterError, PlotSpecError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "MOBIQUEUE_OUT"


def preset_names():
    root = resources.files("mobiqueue") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini") and not p.name.endswith(".plot.ini"))


def preset_text(name):
    return (resources.files("mobiqueue") / "presets" / f"{name}.ini").read_text(encoding="utf-8")


def _resolve(source):
    """Config from a file path or a preset name; returns ``(config, stem)``."""
    path = Path(source)
    if path.exists():
        return load_config(path), path.stem
    if source in preset_names():
        return parse_config(preset_text(source)), source
    raise FileNotFoundError(f"no config file or preset named {source!r}")


def _out_dir(args, stem):
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, "results")) / stem


def _override(config, args):
    if args.seed is not None:
        config = config.with_values(seed=args.seed)
    return config


def _render(out, stem):
    """Render every plot spec shipped for ``stem`` next to the CSV tables."""
    from .plotting import plot

    root = resources.files("mobiqueue") / "presets"
    made = []
    for p in sorted(root.iterdir(), key=lambda p: p.name):
        if p.name.startswith(f"{stem}.") and p.name.endswith(".plot.ini"):
            with resources.as_file(p) as spec_path:
                made.append(plot(None, spec_path, base_dir=out))
    return made


def cmd_simulate(args):
    from .runner import run

    config, stem = _resolve(args.config)
    config = _override(config, args)
    out = run(config, _out_dir(args, stem), workers=args.workers)
    if args.report:
        _render(out, stem)
    print(out)


def cmd_analyze(args):
    from .runner import analyze

    config, stem = _resolve(args.config)
    config = _override(config, args)
    out = analyze(config, _out_dir(args, stem))
    if args.report:
        _render(out, stem)
    print(out)


def cmd_sweep(args):
    from .runner import run

    config, stem = _resolve(args.config)
    try:
        values = _convert_axis(args.axis, args.values)
    except ValueError as exc:
        raise ConfigError([(0, f"{args.axis}: {exc}")]) from None
    bad = _check_axis(args.axis, values)
    if bad:
        raise ConfigError([(0, m) for m in bad])
    config = _override(config, args).with_values(sweep=SweepSpec(((args.axis, values),)))
    out = run(config, _out_dir(args, f"{stem}_{args.axis}"), workers=args.workers)
    print(out)


def cmd_plot(args):
    from .plotting import plot

    print(plot(args.csv, args.spec, out_path=args.output))


def cmd_presets(args):
    for name in preset_names():
        first = preset_text(name).splitlines()[0].lstrip("#; ").strip()
        print(f"{name}\t{first}")


def build_parser():
    ap = argparse.ArgumentParser(prog="mobiqueue", description="Queueing over mobile interference networks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, report=True):
        p.add_argument("config", help="config file or preset name")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help=f"result directory (default ${OUT_ENV}/<name> or results/<name>)")
        if report:
            p.add_argument("--report", action="store_true", help="render figures next to the CSV tables")

    p = sub.add_parser("simulate", help="run the simulation jobs of a config")
    common(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="evaluate analytic quantities")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="simulate over one axis")
    common(p, report=False)
    p.add_argument("--axis", required=True, choices=("velocity", "model", "rate", "load"))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a CSV table with a plot spec")
    p.add_argument("csv")
    p.add_argument("spec")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("presets", help="list shipped presets")
    p.add_argument("action", choices=("list",))
    p.set_defaults(func=cmd_presets)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        for line, msg in exc.violations:
            print(f"config error{f' (line {line})' if line else ''}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlotSpecError as exc:
        print(f"plot spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
