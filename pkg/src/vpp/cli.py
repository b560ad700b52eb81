"""Command line entry point: ``vpp sample|augment|match|eval|pipeline``.

Exit codes: 0 success, 1 contract or invariant failure, 2 I/O or usage error.
Every subcommand also accepts ``--config FILE`` holding ``key=value`` lines
(keys are long flag names without the leading dashes); explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import imgio
from .imgio import FormatError, HintSet
from .patterning import VirtualPatternProjector, variant_from_flags
from .sampling_eval import evaluate, sample_hints
from .stereo_sgm import SemiGlobalMatcher

log = logging.getLogger("vpp")

MODES = ("baseline", "vpp", "guided", "vpp+guided")


class UsageError(Exception):
    pass


def _csv_floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _csv_modes(text):
    modes = [m.strip() for m in str(text).split(",") if m.strip()]
    for m in modes:
        if m not in MODES:
            raise argparse.ArgumentTypeError(f"unknown mode {m!r}; choose from {MODES}")
    return modes


def read_disparity(path):
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        return imgio.read_pfm(path)
    return imgio.read_disparity_png16(path)


def _require(path, what):
    if path is None:
        raise UsageError(f"--{what} is required")
    if not Path(path).exists():
        raise FileNotFoundError(f"{what} file not found: {path}")
    return Path(path)


# ---------------------------------------------------------------- argument groups


def _add_vpp_args(p):
    g = p.add_argument_group("virtual pattern")
    g.add_argument("--pattern", choices=("random", "hist"), default="random")
    g.add_argument("--patch", type=int, choices=(1, 3, 5), default=3)
    g.add_argument("--uniform-patch", action="store_true",
                   help="one color per patch instead of one per pixel")
    g.add_argument("--alpha", type=float, default=0.4)
    g.add_argument("--occlusion", choices=("no", "bkgd", "fgd"), default="fgd")
    g.add_argument("--window-L", dest="window_L", type=int, default=64)
    g.add_argument("--lam", type=float, default=2.0)
    g.add_argument("--gamma", type=float, default=0.4375)
    g.add_argument("--occ-t", dest="occ_t", type=float, default=1.0)
    g.add_argument("--rx", type=int, default=9)
    g.add_argument("--ry", type=int, default=7)


def _add_sgm_args(p):
    g = p.add_argument_group("matcher")
    g.add_argument("--max-disp", dest="max_disp", type=int, default=192)
    g.add_argument("--paths", type=int, choices=(4, 8), default=8)
    g.add_argument("--guide-k", dest="guide_k", type=float, default=10.0)
    g.add_argument("--guide-w", dest="guide_w", type=float, default=10.0)


def build_parser():
    parser = argparse.ArgumentParser(prog="vpp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file with default flag values")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sample", help="sample sparse hints from ground truth")
    common(p)
    p.add_argument("--gt")
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--out", default="hints.csv")

    p = sub.add_parser("augment", help="project virtual patterns onto a pair")
    common(p)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--hints")
    p.add_argument("--out", default="augmented", help="output directory")
    p.add_argument("--debug-dir", dest="debug_dir")
    _add_vpp_args(p)

    p = sub.add_parser("match", help="run semi-global matching")
    common(p)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--guide", help="hints CSV used to guide the cost volume")
    p.add_argument("--out", default="disparity.pfm")
    _add_sgm_args(p)

    p = sub.add_parser("eval", help="score a disparity map against ground truth")
    common(p)
    p.add_argument("--disp")
    p.add_argument("--gt")
    p.add_argument("--out", help="metrics JSON path (printed when omitted)")

    p = sub.add_parser("pipeline", help="sample, augment/guide, match and score")
    common(p)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--gt")
    p.add_argument("--calib", help="accepted for provenance; hints come from --gt")
    p.add_argument("--hints", help="use these hints instead of sampling")
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--densities", type=_csv_floats)
    p.add_argument("--modes", type=_csv_modes, default=list(MODES))
    p.add_argument("--out", default="pipeline_out", help="output directory")
    p.add_argument("--debug-dir", dest="debug_dir")
    _add_vpp_args(p)
    _add_sgm_args(p)
    return parser


def _read_config(path):
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _config_flags(path):
    flags = []
    for key, val in _read_config(path).items():
        flag = "--" + key.replace("_", "-")
        if val.lower() in ("true", "false"):
            if val.lower() == "true":
                flags.append(flag)
            continue
        flags += [flag, val]
    return flags


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # file values go right after the subcommand so explicit flags override them
        i = argv.index(args.command) + 1
        args = parser.parse_args(argv[:i] + _config_flags(args.config) + argv[i:])
    return args


# ---------------------------------------------------------------- configs


def projector_from_args(args):
    return VirtualPatternProjector(
        variant=variant_from_flags(args.pattern, args.patch, args.uniform_patch),
        patch=args.patch, alpha=args.alpha, occlusion=args.occlusion,
        window_length=args.window_L, lam=args.lam, gamma=args.gamma, t=args.occ_t,
        rx=args.rx, ry=args.ry, random_state=args.seed,
    )


def matcher_from_args(args):
    return SemiGlobalMatcher(max_disparity=args.max_disp, paths=args.paths,
                             guide_k=args.guide_k, guide_w=args.guide_w)


def _resolved(est):
    params = est.get_params()
    if isinstance(est, VirtualPatternProjector):
        params["variant"] = est.config().variant
    return {type(est).__name__: params}


def write_debug(debug_dir, left, hints: HintSet, prefix=""):
    """Overlay of hints on the reference image: green visible, red occluded, blue out of target."""
    debug_dir = Path(debug_dir)
    debug_dir.mkdir(parents=True, exist_ok=True)
    base = left if left.ndim == 3 else np.repeat(left[:, :, None], 3, axis=2)
    overlay = (base // 2).astype(np.uint8)
    colors = np.zeros((len(hints), 3), dtype=np.uint8)
    colors[:] = (0, 255, 0)
    colors[hints.occluded] = (255, 0, 0)
    colors[hints.out_of_target] = (0, 0, 255)
    overlay[hints.y, hints.x] = colors
    imgio.write_image(debug_dir / f"{prefix}hints_overlay.png", overlay)
    mask = np.zeros(left.shape[:2], dtype=np.uint8)
    mask[hints.y[hints.occluded], hints.x[hints.occluded]] = 255
    imgio.write_image(debug_dir / f"{prefix}occlusion_mask.png", mask)


# ---------------------------------------------------------------- commands


def cmd_sample(args):
    gt = read_disparity(_require(args.gt, "gt"))
    hints = sample_hints(gt, args.density, args.seed)
    imgio.write_hints(hints, args.out)
    print(len(hints))
    return 0


def cmd_augment(args):
    left = imgio.read_image(_require(args.left, "left"))
    right = imgio.read_image(_require(args.right, "right"))
    hints = imgio.read_hints(_require(args.hints, "hints"))
    proj = projector_from_args(args)
    aug_l, aug_r = proj.fit_transform(left, right, hints)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    imgio.write_image(out / "left.png", aug_l)
    imgio.write_image(out / "right.png", aug_r)
    if args.debug_dir:
        write_debug(args.debug_dir, left, proj.hints_)
    n_occ = int(proj.hints_.occluded.sum())
    print(f"{len(hints)} hints, {n_occ} occluded -> {out}")
    return 0


def cmd_match(args):
    left = imgio.read_image(_require(args.left, "left"))
    right = imgio.read_image(_require(args.right, "right"))
    hints = imgio.read_hints(_require(args.guide, "guide")) if args.guide else None
    disp = matcher_from_args(args).predict(left, right, hints=hints)
    imgio.write_pfm(args.out, disp)
    print(args.out)
    return 0


def cmd_eval(args):
    disp = read_disparity(_require(args.disp, "disp"))
    gt = read_disparity(_require(args.gt, "gt"))
    doc = evaluate(disp, gt).to_dict()
    if args.out:
        imgio.write_metrics(args.out, doc)
    else:
        import json
        print(json.dumps(doc, indent=2))
    return 0


def run_pipeline(left, right, gt, densities, modes, projector, matcher, seed,
                 out=None, hints=None, debug_dir=None):
    """Score each mode at each density; optionally write every artifact under ``out``.

    Returns the JSON-ready report.
    """
    results = []
    for density in densities:
        h = hints if hints is not None else sample_hints(gt, density, seed)
        entry = {"density": density, "hints": len(h), "modes": {}}
        sub = None
        if out is not None:
            sub = Path(out) / f"density_{density:g}"
            sub.mkdir(parents=True, exist_ok=True)
            imgio.write_hints(h, sub / "hints.csv")
        augmented = None
        if any(m.startswith("vpp") for m in modes):
            augmented = projector.fit_transform(left, right, h)
            if debug_dir is not None:
                write_debug(debug_dir, left, projector.hints_, prefix=f"density_{density:g}_")
        for mode in modes:
            if mode.startswith("vpp"):
                l_in, r_in = augmented
            else:
                l_in, r_in = left, right
            guide = h if mode.endswith("guided") else None
            disp = matcher.predict(l_in, r_in, hints=guide)
            entry["modes"][mode] = evaluate(disp, gt).to_dict()
            log.info("density %g %s: bad2=%.3f", density, mode, entry["modes"][mode]["bad2"])
            if sub is not None:
                mdir = sub / mode.replace("+", "_")
                mdir.mkdir(exist_ok=True)
                imgio.write_pfm(mdir / "disparity.pfm", disp)
                if mode.startswith("vpp"):
                    imgio.write_image(mdir / "left.png", l_in)
                    imgio.write_image(mdir / "right.png", r_in)
        results.append(entry)
    return {
        "config": {
            "seed": seed,
            "densities": list(densities),
            "modes": list(modes),
            **_resolved(projector),
            **_resolved(matcher),
        },
        "results": results,
    }


def cmd_pipeline(args):
    left = imgio.read_image(_require(args.left, "left"))
    right = imgio.read_image(_require(args.right, "right"))
    gt = read_disparity(_require(args.gt, "gt"))
    if args.calib:
        imgio.read_calibration(_require(args.calib, "calib"))
    hints = imgio.read_hints(_require(args.hints, "hints")) if args.hints else None
    densities = args.densities if args.densities else [args.density]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_pipeline(left, right, gt, densities, args.modes,
                          projector_from_args(args), matcher_from_args(args),
                          args.seed, out=out, hints=hints, debug_dir=args.debug_dir)
    imgio.write_metrics(out / "metrics.json", report)
    for entry in report["results"]:
        row = "  ".join(f"{m}={v['bad2']:.2f}" for m, v in entry["modes"].items())
        print(f"density {entry['density']:g}: bad2 {row}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "augment": cmd_augment,
    "match": cmd_match,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError) as exc:
        print(f"vpp: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, FormatError, OSError) as exc:
        print(f"vpp: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"vpp: invalid input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
