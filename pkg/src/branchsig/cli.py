"""Command-line front end.

Exit codes: 0 success, 1 input error or unknown command, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .extend import (ExtendedPath, FbmSpec, RoughVolParams, SimulationError, extend_bm, extend_fbm,
                     hk_residual, sample_bm, sample_fbm, simulate_roughvol)
from .hopf import coproduct, psi, sorted_terms
from .models.calibration import CalibrationConfig, calibrate
from .models.sigmodels import shuffle_residual
from .models.training import DESK_WIDTHS, FULL_WIDTHS, TrainConfig, TrainingError
from .sigcore import bsig, sig_chen, sig_ito
from .trees import parse_forest, parse_tree


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _widths(text: str) -> tuple:
    try:
        return tuple(int(w) for w in text.split(",") if w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"widths must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="branchsig", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a driver or the rough-volatility model")
    p.add_argument("--model", choices=["bm", "fbm", "roughvol"], required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--hurst", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", help="correlation matrix CSV (no header)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("extend", help="explicit extended path of a BM or fBm sample")
    p.add_argument("--driver", choices=["bm", "fbm"], required=True)
    p.add_argument("--hurst", type=float, default=0.3)
    p.add_argument("--covariation", choices=["realized", "expected"], default="realized")
    p.add_argument("--rho", help="correlation matrix CSV (no header)")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    for name in ("sig", "bsig"):
        p = sub.add_parser(name, help=f"{'truncated' if name == 'sig' else 'branched'} signature")
        p.add_argument("--level", type=int, required=True)
        if name == "sig":
            p.add_argument("--ito", action="store_true", help="left-point iterated integrals")
        p.add_argument("--time", action="store_true", help="prepend the time channel (label 0)")
        p.add_argument("--input", required=True)
        p.add_argument("--out")
        p.add_argument("--manifest")

    p = sub.add_parser("psi", help="Hairer-Kelly image of a tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("coproduct", help="Connes-Kreimer coproduct of a forest")
    p.add_argument("--forest", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("check-hk", help="pairing residuals between bsig and the extension")
    p.add_argument("--input")
    p.add_argument("--ext")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--steps", type=int, default=1000, help="grid size for the seeded study")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--covariation", choices=["realized", "expected"], default="expected")
    p.add_argument("--manifest")

    p = sub.add_parser("check-shuffle", help="integration-by-parts residual matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--manifest")

    p = sub.add_parser("calibrate", help="train the extension and compare regressions")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--hurst", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--paper-arch", action="store_true")
    p.add_argument("--widths", type=_widths, default=None)
    p.add_argument("--m", type=int, default=9)
    p.add_argument("--lambda-p", type=float, default=1.0)
    p.add_argument("--lambda-s", type=float, default=1.0)
    p.add_argument("--outdir", required=True)
    return parser


# -- commands ------------------------------------------------------------------

def _flags(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k == "command":
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _finish(args, inputs, outputs, seed=None):
    target = None
    if outputs:
        target = io.manifest_path(outputs[0])
    elif getattr(args, "manifest", None):
        target = Path(args.manifest)
    if target is not None:
        io.write_manifest(target, io.build_manifest(args.command, _flags(args), seed, inputs, outputs))


def _rho(args, d: int):
    if not args.rho:
        return np.eye(d)
    return io.read_matrix_csv(args.rho)


def cmd_simulate(args) -> int:
    if args.model == "bm":
        p = sample_bm(args.dim, args.steps, args.horizon, args.seed)
        io.write_path_csv(args.out, p)
    elif args.model == "fbm":
        rho = _rho(args, args.dim)
        spec = FbmSpec(args.hurst, args.horizon, args.steps, rho)
        p = sample_fbm(spec, args.seed)
        io.write_path_csv(args.out, p)
    else:
        res = simulate_roughvol(RoughVolParams(hurst=args.hurst, steps=args.steps,
                                               horizon=args.horizon, seed=args.seed))
        d = res.drivers.values
        io.write_csv(args.out, ["t", "x1", "x2", "x3", "x4"],
                     [res.drivers.times, d[:, 1], d[:, 2], res.S.values[:, 0], res.V.values[:, 0]])
    _finish(args, [args.rho] if args.rho else [], [args.out], args.seed)
    return 0


def cmd_extend(args) -> int:
    p = io.read_path_csv(args.input)
    if args.driver == "bm":
        ext = extend_bm(p, covariation=args.covariation,
                        correlation=_rho(args, p.dim) if args.rho else None)
    else:
        spec = FbmSpec(args.hurst, p.times[-1] - p.times[0] or 1.0, p.steps, _rho(args, p.dim))
        ext = extend_fbm(p, spec)
    io.write_path_csv(args.out, ext.path, [t.key for t in ext.path.labels])
    _finish(args, [args.input] + ([args.rho] if args.rho else []), [args.out])
    return 0


def _emit_json(args, obj) -> list:
    text = io.dumps(obj)
    if args.out:
        Path(args.out).write_text(text)
        return [args.out]
    sys.stdout.write(text)
    return []


def cmd_sig(args) -> int:
    p = io.read_path_csv(args.input)
    if args.time:
        p = p.time_extended()
    s = (sig_ito if args.ito else sig_chen)(p, args.level)
    outputs = _emit_json(args, {"level": args.level, "entries": io.graded_dict(s.entries())})
    _finish(args, [args.input], outputs)
    return 0


def cmd_bsig(args) -> int:
    p = io.read_path_csv(args.input)
    if args.time:
        p = p.time_extended()
    b = bsig(p, args.level)
    outputs = _emit_json(args, {"level": args.level, "entries": io.graded_dict(b.entries())})
    _finish(args, [args.input], outputs)
    return 0


def cmd_psi(args) -> int:
    t = parse_tree(args.tree)
    for w, c in sorted_terms(psi(t)):
        print(f"{c}\t{w.key}")
    _finish(args, [], [])
    return 0


def cmd_coproduct(args) -> int:
    f = parse_forest(args.forest)
    for (a, b), c in sorted_terms(coproduct(f)):
        print(f"{c}\t{a.key}\t{b.key}")
    _finish(args, [], [])
    return 0


def cmd_check_hk(args) -> int:
    if args.input:
        if not args.ext:
            raise ValueError("--ext is required with --input")
        p = io.read_path_csv(args.input)
        ext_path = io.read_extended_csv(args.ext)
        if not np.array_equal(ext_path.times, p.times):
            raise ValueError("path and extension grids differ")
        level = min(args.level, max(t.size for t in ext_path.labels))
        res = hk_residual(p, ExtendedPath(p, ext_path, level), level)
        for t, r in res.items():
            print(f"{t.key}\t{io.fmt(r)}")
        _finish(args, [args.input, args.ext], [])
        return 0
    # seeded refinement study on BM
    grids = [args.steps, 2 * args.steps, 4 * args.steps]
    table = {}
    for n in grids:
        acc: dict = {}
        for s in range(args.seeds):
            p = sample_bm(args.dim, n, 1.0, s)
            res = hk_residual(p, extend_bm(p, covariation=args.covariation), 2)
            for t, r in res.items():
                acc.setdefault(t, []).append(abs(r))
        table[n] = {t: float(np.mean(v)) for t, v in acc.items()}
    print("tree\t" + "\t".join(f"n={n}" for n in grids) + "\tratio")
    for t in table[grids[0]]:
        vals = [table[n][t] for n in grids]
        ratio = vals[-2] / vals[-1] if vals[-1] > 0 else float("inf")
        print(f"{t.key}\t" + "\t".join(f"{v:.6g}" for v in vals) + f"\t{ratio:.4g}")
    _finish(args, [], [])
    return 0


def cmd_check_shuffle(args) -> int:
    p = io.read_path_csv(args.input)
    mat = shuffle_residual(p)
    names = [f"x{i}" for i in range(1, p.dim + 1)]
    if args.out:
        io.write_matrix_csv(args.out, mat, names)
        _finish(args, [args.input], [args.out])
    else:
        for row in mat:
            print("\t".join(io.fmt(x) for x in row))
        _finish(args, [args.input], [])
    return 0


def cmd_calibrate(args) -> int:
    widths = FULL_WIDTHS if args.paper_arch else (args.widths or DESK_WIDTHS)
    cfg = CalibrationConfig(
        RoughVolParams(hurst=args.hurst, steps=args.steps, seed=args.seed),
        TrainConfig(epochs=args.epochs, lr=args.lr, lambda_p=args.lambda_p,
                    lambda_s=args.lambda_s, seed=args.seed, widths=widths, m=args.m))
    rep = calibrate(cfg)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    tr = rep.training
    epochs = np.arange(len(tr.physics_history))
    files = [out / "losses.csv", out / "shuffle_matrix.csv", out / "vol_pred.csv",
             out / "stock_pred.csv", out / "report.json"]
    io.write_csv(files[0], ["epoch", "physics", "shuffle"],
                 [epochs, tr.physics_history, tr.shuffle_history])
    io.write_matrix_csv(files[1], tr.shuffle_matrix)
    for f, block in ((files[2], rep.vol), (files[3], rep.stock)):
        io.write_csv(f, ["t", "truth", "with_ext", "without_ext"],
                     [rep.times, block["truth"], block["with_ext"], block["without_ext"]])
    io.write_json(files[4], rep.summary(), sort_keys=True)
    manifest = io.build_manifest(args.command, _flags(args), args.seed, [], files)
    io.write_manifest(out / "manifest.json", manifest)
    s = rep.summary()
    for k in ("mse_vol_with_extension", "mse_vol_without_extension",
              "mse_stock_with_extension", "mse_stock_without_extension", "shuffle_mse"):
        print(f"{k}\t{io.fmt(s[k])}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate, "extend": cmd_extend, "sig": cmd_sig, "bsig": cmd_bsig,
    "psi": cmd_psi, "coproduct": cmd_coproduct, "check-hk": cmd_check_hk,
    "check-shuffle": cmd_check_shuffle, "calibrate": cmd_calibrate,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if not args.command:
        print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    try:
        return COMMANDS[args.command](args)
    except (SimulationError, TrainingError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
