"""``sec`` command-line tool.

Exit codes: 0 ok, 1 usage error, 2 data error (unreadable input, bad file
contents), 3 numerical failure (divergence or non-finite activations).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    DEFAULT_GRIDS,
    CalibrationSet,
    ParamGrid,
    build_calibration_set,
    fresh_scores,
    frequency_match,
    make_config,
    sec_conf_select,
)
from .corpus import blur_ladder
from .experiments import SUITES, csv_text, make_manifest, run_benchmark, write_manifest
from .imageio import ImageReadError, load_image, save_png
from .metrics import psnr, ssim
from .models import ARCHITECTURES, DEFAULT_FREQ, NumericalError, init_network, model_sec, render, save_network
from .spectral import SpectrumVariant, energy_spectrum, sec
from .trainer import TrainConfig, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _size(text: str):
    if text in ("S", "M", "L"):
        return text
    try:
        d, w = text.lower().split("x")
        return int(d), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must be S, M, L or DEPTHxWIDTH, got {text!r}") from None


def _hw(text: str) -> tuple[int, int]:
    try:
        parts = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad render size {text!r}") from None
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or min(parts) < 2:
        raise argparse.ArgumentTypeError(f"bad render size {text!r}")
    return parts[0], parts[1]


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _variant(args) -> SpectrumVariant:
    return SpectrumVariant(args.statistic, not args.magnitude, args.include_dc)


def _grid(arch: str, values) -> ParamGrid:
    if values is None:
        return DEFAULT_GRIDS[arch]
    try:
        return ParamGrid(arch, values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt(v: float) -> str:
    return repr(float(v))


def _emit(path, text: str, command: str, args) -> None:
    """Write an output file with its sibling manifest."""
    path = Path(path)
    path.write_text(text)
    write_manifest(path.with_name(path.name + ".manifest.json"), make_manifest(command, _args_dict(args)))


def _args_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _add_variant_flags(p):
    p.add_argument("--statistic", choices=("mean", "median"), default="mean")
    p.add_argument("--magnitude", action="store_true", help="use |F| instead of |F|^2")
    p.add_argument("--include-dc", action="store_true", help="keep the zero-frequency bin")


# ---------------------------------------------------------------- commands


def cmd_analyze(args) -> int:
    img = load_image(args.image)
    variant = _variant(args)
    spec = energy_spectrum(img, variant.squared, variant.include_dc)
    value = sec(spec, variant.statistic)
    print(f"sec {_fmt(value)}")
    if args.spectrum:
        rows = [[r, e] for r, e in enumerate(spec)]
        _emit(args.spectrum, csv_text(["r", "energy"], rows), "analyze", args)
    return EXIT_OK


def cmd_model_sec(args) -> int:
    freq = DEFAULT_FREQ[args.arch] if args.param is None else args.param
    cfg = make_config(args.arch, args.size, freq, seed=args.seed_base)
    r = model_sec(cfg, args.seeds, args.render_size, _variant(args))
    lo, hi = r.ci95
    for s, v in zip(r.seeds, r.samples):
        print(f"seed {s} sec {_fmt(v)}")
    print(f"mean {_fmt(r.mean)} ci95 {_fmt(lo)} {_fmt(hi)}")
    if args.out:
        _emit(args.out, csv_text(["seed", "sec"], [[s, v] for s, v in zip(r.seeds, r.samples)]), "model-sec", args)
    return EXIT_OK


def _load_images(paths):
    return [(Path(p).stem, load_image(p)) for p in paths]


def cmd_calibrate(args) -> int:
    if args.images:
        images = _load_images(args.images)
    elif args.synthetic:
        images = [(c.image_id, c.image) for c in blur_ladder(args.synthetic, args.image_size, seed=args.corpus_seed)]
    else:
        raise UsageError("give image paths or --synthetic N")
    grid = _grid(args.arch, args.grid)
    cfg = TrainConfig(steps=args.steps, learning_rate=args.lr)
    calib = build_calibration_set(images, args.arch, args.size, grid, cfg, seeds=args.seeds,
                                  seed_base=args.seed_base, variant=_variant(args), workers=args.workers)
    _emit(args.out, calib.to_json(), "calibrate", args)
    for e in calib.entries:
        print(f"{e.image_id} sec {_fmt(e.sec)} best {e.best_param:g} psnr {_fmt(e.best_psnr)}")
    if len(calib.entries) < len(images):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_select(args) -> int:
    try:
        calib = CalibrationSet.load(args.calibration)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ImageReadError(f"cannot read calibration set {args.calibration}: {exc}") from exc
    print(f"{sec_conf_select(calib, load_image(args.image)):g}")
    return EXIT_OK


def cmd_match(args) -> int:
    ref_param = DEFAULT_FREQ[args.ref_arch] if args.ref_param is None else args.ref_param
    ref = make_config(args.ref_arch, args.ref_size, ref_param, seed=args.seed_base)
    target_size = args.target_size or args.ref_size
    res = frequency_match(ref, args.target_arch, target_size, _grid(args.target_arch, args.grid), args.seeds,
                          args.render_size)
    print(f"matched {res.matched_param:g} sec_error {_fmt(res.sec_error)}"
          + (" grid_exhausted" if res.grid_exhausted else ""))
    if args.out:
        _emit(args.out, json.dumps(res.to_dict(), indent=2) + "\n", "match", args)
    return EXIT_OK


def cmd_fresh(args) -> int:
    img = load_image(args.image)
    scores = fresh_scores(img, args.arch, args.size, _grid(args.arch, args.grid), args.seeds, seed_base=args.seed_base)
    best = min(scores, key=lambda p: (scores[p], p))
    print(f"{best:g}")
    if args.out:
        doc = {"selected": best, "scores": [{"param": p, "w1": w} for p, w in scores.items()]}
        _emit(args.out, json.dumps(doc, indent=2) + "\n", "fresh", args)
    return EXIT_OK


def cmd_train(args) -> int:
    img = load_image(args.image)
    freq = DEFAULT_FREQ[args.arch] if args.param is None else args.param
    cfg = make_config(args.arch, args.size, freq, out_channels=img.shape[0], seed=args.seed)
    tcfg = TrainConfig(steps=args.steps, learning_rate=args.lr, log_every=args.log_every, seed=args.seed,
                       precision=args.precision)
    net, trace = train(init_network(cfg), img, tcfg)
    recon = render(net, *img.shape[1:])
    p = psnr(recon, img)
    s = ssim(recon, img) if min(img.shape[1:]) >= 11 else float("nan")
    print(f"psnr {'inf' if math.isinf(p) else _fmt(p)} ssim {_fmt(s)}")
    if args.trace:
        _emit(args.trace, trace.to_csv(), "train", args)
    if args.output:
        save_png(recon, args.output)
    if args.checkpoint:
        save_network(net, args.checkpoint)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    suites = args.suite or list(SUITES)
    results = run_benchmark(suites, args.out, workers=args.workers)
    failed_cells = False
    for name, r in results.items():
        for check, ok in r.checks.items():
            print(f"{name}.{check} {'pass' if ok else 'FAIL'}")
        failed_cells = failed_cells or bool(r.failures)
    return EXIT_NUMERIC if failed_cells else EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sec", description="Spectral energy centroid tools for implicit neural representations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="SEC and radial spectrum of an image")
    a.add_argument("image")
    _add_variant_flags(a)
    a.add_argument("--spectrum", metavar="CSV", help="write the radial spectrum (r,energy)")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("model-sec", help="SEC of untrained networks over seeds")
    m.add_argument("--arch", choices=ARCHITECTURES, required=True)
    m.add_argument("--size", type=_size, default="M")
    m.add_argument("--param", type=float, help="frequency parameter (architecture default if omitted)")
    m.add_argument("--seeds", type=int, default=10)
    m.add_argument("--seed-base", type=int, default=0)
    m.add_argument("--render-size", type=_hw, default=(256, 256))
    _add_variant_flags(m)
    m.add_argument("--out", metavar="CSV")
    m.set_defaults(func=cmd_model_sec)

    c = sub.add_parser("calibrate", help="grid-search images and write a calibration set")
    c.add_argument("images", nargs="*")
    c.add_argument("--synthetic", type=int, metavar="N", help="use N blur-ladder images instead of files")
    c.add_argument("--image-size", type=_hw, default=(64, 64))
    c.add_argument("--corpus-seed", type=int, default=0)
    c.add_argument("--arch", choices=ARCHITECTURES, default="siren")
    c.add_argument("--size", type=_size, default="S")
    c.add_argument("--grid", type=_floats)
    c.add_argument("--steps", type=int, default=1000)
    c.add_argument("--lr", type=float, default=1e-3)
    c.add_argument("--seeds", type=int, default=1)
    c.add_argument("--seed-base", type=int, default=0)
    c.add_argument("--workers", type=int)
    _add_variant_flags(c)
    c.add_argument("--out", required=True, metavar="JSON")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("select", help="SEC-conf parameter for an image")
    s.add_argument("image")
    s.add_argument("--calibration", required=True, metavar="JSON")
    s.set_defaults(func=cmd_select)

    mt = sub.add_parser("match", help="match a target architecture's SEC to a reference model")
    mt.add_argument("--ref-arch", choices=ARCHITECTURES, required=True)
    mt.add_argument("--ref-size", type=_size, default="S")
    mt.add_argument("--ref-param", type=float)
    mt.add_argument("--target-arch", choices=ARCHITECTURES, required=True)
    mt.add_argument("--target-size", type=_size)
    mt.add_argument("--grid", type=_floats)
    mt.add_argument("--seeds", type=int, default=10)
    mt.add_argument("--seed-base", type=int, default=0)
    mt.add_argument("--render-size", type=_hw, default=(256, 256))
    mt.add_argument("--out", metavar="JSON")
    mt.set_defaults(func=cmd_match)

    f = sub.add_parser("fresh", help="FreSh-style Wasserstein parameter selection")
    f.add_argument("image")
    f.add_argument("--arch", choices=ARCHITECTURES, default="siren")
    f.add_argument("--size", type=_size, default="S")
    f.add_argument("--grid", type=_floats)
    f.add_argument("--seeds", type=int, default=10)
    f.add_argument("--seed-base", type=int, default=0)
    f.add_argument("--out", metavar="JSON")
    f.set_defaults(func=cmd_fresh)

    t = sub.add_parser("train", help="fit a network to an image")
    t.add_argument("image")
    t.add_argument("--arch", choices=ARCHITECTURES, default="siren")
    t.add_argument("--size", type=_size, default="S")
    t.add_argument("--param", type=float)
    t.add_argument("--steps", type=int, default=2000)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--log-every", type=int, default=1)
    t.add_argument("--precision", choices=("float32", "float64"), default="float32")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--trace", metavar="CSV")
    t.add_argument("--output", metavar="PNG")
    t.add_argument("--checkpoint", metavar="JSON")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("benchmark", help="run desk-scale experiment suites")
    b.add_argument("--suite", action="append", choices=sorted(SUITES))
    b.add_argument("--out", required=True, metavar="DIR")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"sec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ImageReadError, OSError) as exc:
        print(f"sec: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"sec: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
