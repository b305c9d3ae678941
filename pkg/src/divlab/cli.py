"""Command-line front end.

Flag values win over config-file values, which win over built-in
defaults.  The config file is flat `key = value` text, keys named like
the long flags; '#' starts a comment.
"""

import argparse
import sys

from .arith import DEFAULT_SEGMENT_SIZE
from .errors import DivlabError, ParameterError
from .harness import ExperimentConfig, run


def _parse_int(text, name):
    try:
        return int(text, 0)
    except ValueError:
        pass
    try:
        f = float(text)
    except ValueError:
        raise ParameterError("%s: expected an integer, got %r" % (name, text))
    if not f.is_integer():
        raise ParameterError("%s: expected an integer, got %r" % (name, text))
    return int(f)


def _parse_float(text, name):
    try:
        return float(text)
    except ValueError:
        raise ParameterError("%s: expected a number, got %r" % (name, text))


def _parse_int_list(text, name):
    return tuple(_parse_int(part.strip(), name)
                 for part in str(text).split(",") if part.strip())


_CONVERTERS = {
    "x": _parse_int,
    "z": _parse_float,
    "a": _parse_float,
    "r": _parse_float,
    "v": _parse_int,
    "B_max": _parse_int,
    "u": _parse_int_list,
    "samples": _parse_int,
    "seed": _parse_int,
    "y": _parse_float,
    "A": _parse_float,
    "alpha": _parse_float,
    "beta": _parse_float,
    "mode": lambda s, n: str(s),
    "snapshots": _parse_int_list,
    "q": _parse_int_list,
    "out": lambda s, n: str(s),
    "threads": _parse_int,
    "segment_size": _parse_int,
    "checkpoint": lambda s, n: str(s),
    "stop_after": _parse_int,
}

_PARAM_FLAGS = {
    "sieve": ["x"],
    "totals": ["x", "snapshots"],
    "rz": ["x", "z", "u", "alpha", "beta"],
    "poisson": ["x", "z", "a", "B_max"],
    "simplex": ["v", "r"],
    "sfrak": ["x", "z", "r", "v", "u"],
    "mc": ["x", "z", "r", "v", "samples", "seed", "q"],
    "partition": ["x", "A"],
    "classes": ["x", "v", "z", "mode"],
    "lemma41": ["x", "y"],
    "constants": [],
}

_FLAG_HELP = {
    "x": "scan bound (accepts forms like 1e6)",
    "z": "roughness threshold",
    "a": "window exponent, window (z, z^a]",
    "r": "cube side / slice width",
    "v": "tuple length / dimension",
    "B_max": "largest window-prime count reported",
    "u": "congruence modulus, or comma list for per-position moduli",
    "samples": "Monte Carlo sample count",
    "seed": "64-bit RNG seed (mandatory for mc)",
    "y": "divisor of x bounding the small-n sum at x/y",
    "A": "partition constant, k = floor(A lnln x)",
    "alpha": "lower edge of the log-scale slice",
    "beta": "upper edge of the log-scale slice",
    "mode": "classes output: 'sums' (default) or 'tau2'",
    "snapshots": "comma list of totals checkpoints (default: powers of 10)",
    "q": "comma list of window primes for X_q histograms",
}

_COMMAND_HELP = {
    "sieve": "build a smallest-prime-factor table and write it as SPF1",
    "totals": "running sums of tau(phi(n)) and tau(lambda(n))",
    "rz": "prime sums of tau_z(p-1), plain or p = 1 (mod u), plus slices",
    "poisson": "window-prime count profile and the threshold ratio law",
    "simplex": "cube side and inside-cube count for the simplex covering",
    "sfrak": "slice-table dynamic program, plain or per-position congruent",
    "mc": "sample prime tuples; restriction losses, lcm ratio, X_q counts",
    "partition": "E1/E2/E3 split of [1, x] with per-class lambda sums",
    "classes": "M-class sums, or squarefree tau'' sums with --mode tau2",
    "lemma41": "small-n weighted sum against the full total",
    "constants": "print the reference constants",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (CSV, or SPF1 for sieve)")
    common.add_argument("--threads", help="worker threads (default 1)")
    common.add_argument("--segment-size", dest="segment_size",
                        help="numbers per work segment (default %d)"
                        % DEFAULT_SEGMENT_SIZE)
    common.add_argument("--checkpoint",
                        help="checkpoint file for interrupt/resume")
    common.add_argument("--config",
                        help="flat key=value config file; flags override it")
    common.add_argument("--stop-after-segments", dest="stop_after",
                        help="save the checkpoint and exit after this many "
                        "segments (testing aid)")
    parser = argparse.ArgumentParser(
        prog="divlab",
        description="Experiments on divisor counts of phi(n) and lambda(n).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, flags in _PARAM_FLAGS.items():
        p = sub.add_parser(cmd, parents=[common], help=_COMMAND_HELP[cmd])
        for flag in flags:
            p.add_argument("--" + flag.replace("_", "-"), dest=flag,
                           help=_FLAG_HELP[flag])
    return parser


def parse_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(
                    "%s:%d: expected key = value, got %r" % (path, lineno, raw.strip())
                )
            key, val = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONVERTERS:
                raise ParameterError("%s:%d: unknown config key %r" % (path, lineno, key))
            values[key] = val
    return values


def merge_config(args):
    file_vals = parse_config_file(args.config) if args.config else {}
    merged = {"command": args.command}
    for name, conv in _CONVERTERS.items():
        raw = getattr(args, name, None)
        if raw is None:
            raw = file_vals.get(name)
        if raw is None:
            continue
        merged[name] = conv(raw, name)
    cfg = ExperimentConfig(**merged)
    if cfg.command == "mc" and cfg.seed is None:
        raise ParameterError("mc requires --seed")
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
        return run(cfg)
    except DivlabError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
