"""Command-line entry point: ``fsfir {synth-sweep,bike-eval,convergence}``.

Options may come from a JSON file (``--config``); flags given on the command
line override file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import experiments
from .errors import FsfirError


def parse_int_list(text: str) -> List[int]:
    """``"2..14,20,30,40"`` -> ``[2, 3, ..., 14, 20, 30, 40]``."""
    out: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list {text!r}")
    return out


def parse_float_list(text: str) -> List[float]:
    try:
        out = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not out:
        raise argparse.ArgumentTypeError(f"empty list {text!r}")
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-points", type=int, dest="grid_points")
    p.add_argument("--block-size", type=int, dest="block_size")
    p.add_argument("--workers", type=int, help="replicate worker processes")
    p.add_argument("--out", help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsfir", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("synth-sweep", help="subspace error over an m or rho grid")
    _common(sw)
    sw.add_argument("--model", choices=["M1", "M2", "M3"])
    sw.add_argument("--method", choices=list(experiments.METHODS))
    sw.add_argument("--n", type=int)
    sw.add_argument("--m-grid", type=parse_int_list, dest="m_grid")
    sw.add_argument("--rho-grid", type=parse_float_list, dest="rho_grid")
    sw.add_argument("--H", type=int, dest="H", help="slice count (tfsir, rfsir)")
    sw.add_argument("--d", type=int, help="structural dimension (default: model's)")
    sw.add_argument("--basis-size", type=int, dest="basis_size")
    sw.add_argument("--noise-var", type=float, dest="noise_var")

    be = sub.add_parser("bike-eval", help="GPR test MSE on FSFIR-reduced bike data")
    _common(be)
    be.add_argument("--data", help="path to the UCI hour.csv file")
    be.add_argument("--d-grid", type=parse_int_list, dest="d_grid")
    be.add_argument("--m-grid", type=parse_int_list, dest="m_grid")
    be.add_argument("--train-size", type=int, dest="train_size")
    be.add_argument("--max-missing-hours", type=int, dest="max_missing_hours")

    cv = sub.add_parser("convergence", help="mean error against n with the m rule")
    _common(cv)
    cv.add_argument("--model", choices=["M1", "M2", "M3"])
    cv.add_argument("--method", choices=["fsfir", "tfsir"])
    cv.add_argument("--n-list", type=parse_int_list, dest="n_list")
    cv.add_argument("--gamma", type=float)
    cv.add_argument("--alpha1", type=float)
    cv.add_argument("--alpha2", type=float)
    cv.add_argument("--t", type=float)
    cv.add_argument("--d", type=int)
    cv.add_argument("--H", type=int, dest="H")
    cv.add_argument("--noise-var", type=float, dest="noise_var")
    return parser


def config_from_args(args: argparse.Namespace) -> experiments.ExperimentConfig:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
    for key, val in vars(args).items():
        if key == "config" or val is None:
            continue
        values[key] = val
    defaults = {"bike-eval": {"m_grid": list(experiments.BIKE_M_GRID)}}
    for key, val in defaults.get(values["command"], {}).items():
        values.setdefault(key, val)
    values.setdefault("out", f"{values['command']}.csv")
    return experiments.ExperimentConfig(**values)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = experiments.run(cfg)
    except (FsfirError, OSError, TypeError) as exc:
        print(f"fsfir: error: {exc}", file=sys.stderr)
        return 2
    paths = experiments.write_result(result, cfg.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    if result.extra:
        for key, val in result.extra.items():
            if key in ("excluded_saturdays", "rejected_rows"):
                print(f"{key}: {len(val)}")
            else:
                print(f"{key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
