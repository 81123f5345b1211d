"""
Command-line front end.

  ckm build   --scene S --grid x0,y0,cell,nx,ny --mode static|dynamic --out BIM
  ckm run     --scenario F --out metrics.csv   (a .json suffix writes JSON)
  ckm preset  exp1-los|exp2-nlos|exp3-dynamic --out-dir DIR
  ckm sweep   --scene S --rx x,y,heading       (one-shot exhaustive table)

Exit codes: 0 ok, 2 invalid input, 3 runtime failure (I/O and the like).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .channel import MeasurementNoise, load_scene, sweep_power
from .ckm_store import DYNAMIC, STATIC, GridSpec, construct_bim, save_bim
from .errors import ValidationError
from .geometry import Point2, Pose
from .harness import export, load_scenario, run_episode
from .phased_array import Codebook, load_profile
from .presets import PRESETS, write_preset

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

log = logging.getLogger("ckm")


def _floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValidationError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"{what}: not a number in {text!r}") from None


def _codebook(path) -> Codebook:
    return load_profile(path) if path else Codebook.uniform()


def _noise(sigma: float | None) -> MeasurementNoise:
    return MeasurementNoise() if sigma is None else MeasurementNoise(sigma_db=sigma)


def cmd_build(args) -> int:
    scene = load_scene(args.scene)
    grid = GridSpec.parse(args.grid)
    cb = _codebook(args.profile)
    bim = construct_bim(scene, grid, cb, args.mode, rx_orientation=args.rx_orientation,
                        noise=_noise(args.noise_sigma), seed=args.seed)
    save_bim(bim, args.out)
    log.info("wrote %s (%d cells, %d pair evaluations)", args.out, grid.num_cells,
             bim.pair_evaluations)
    return EXIT_OK


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc.seed = args.seed
    rows = run_episode(sc)
    fmt = "json" if FsPath(args.out).suffix.lower() == ".json" else "csv"
    export(rows, fmt, args.out)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def cmd_preset(args) -> int:
    files = write_preset(args.name, args.out_dir, seed=args.seed)
    for kind, path in files.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scene = load_scene(args.scene)
    x, y, heading = _floats(args.rx, 3, "--rx")
    cb = _codebook(args.profile)
    power = sweep_power(scene, Pose(Point2(x, y), heading), cb, _noise(args.noise_sigma),
                        seed=args.seed)
    order = np.argsort(-power, axis=None, kind="stable")
    print(f"{power.size} pairs evaluated; top {args.top}:")
    print("tx_beam  rx_beam  power_dbm")
    for flat in order[:args.top]:
        i, j = divmod(int(flat), power.shape[1])
        print(f"{i + 1:7d}  {j + 1:7d}  {power[i, j]:9.3f}")
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["tx_beam", "rx_beam", "power_dbm"])
            for i in range(power.shape[0]):
                for j in range(power.shape[1]):
                    w.writerow([i + 1, j + 1, repr(float(power[i, j]))])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckm", description="Beam-index-map beam alignment simulator.")
    p.add_argument("--version", action="version", version=f"ckm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a beam index map for a scene")
    b.add_argument("--scene", required=True)
    b.add_argument("--grid", required=True, help="x0,y0,cell,nx,ny")
    b.add_argument("--mode", choices=(STATIC, DYNAMIC), default=STATIC)
    b.add_argument("--out", required=True)
    b.add_argument("--rx-orientation", type=float, default=0.0,
                   help="receiver heading during construction, degrees")
    b.add_argument("--profile", help="device profile JSON (default: uniform 64-beam codebook)")
    b.add_argument("--noise-sigma", type=float, help="measurement noise sigma, dB")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("run", help="play a scenario and export per-tick metrics")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="write one of the reference experiments")
    pr.add_argument("name", choices=PRESETS)
    pr.add_argument("--out-dir", required=True)
    pr.add_argument("--seed", type=int, default=0)
    pr.set_defaults(func=cmd_preset)

    s = sub.add_parser("sweep", help="exhaustive 64x64 sweep at one receiver pose")
    s.add_argument("--scene", required=True)
    s.add_argument("--rx", required=True, help="x,y,heading")
    s.add_argument("--top", type=int, default=10)
    s.add_argument("--out", help="write the full table as CSV")
    s.add_argument("--profile")
    s.add_argument("--noise-sigma", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:           # ValidationError included
        print(f"ckm: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"ckm: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
